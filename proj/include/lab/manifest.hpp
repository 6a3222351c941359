#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lab {

/// Build revision baked in at configure time ("unknown" outside git).
const char* git_revision();
/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

struct RunManifest {
    std::string command;
    std::string config_text;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string start_utc, end_utc;
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;  // paths relative to the output directory

    /// Throws NumericalError unless every listed output exists under `dir`
    /// and is non-empty.
    void check_outputs(const std::string& dir) const;
    std::string json() const;
};

}  // namespace lab
