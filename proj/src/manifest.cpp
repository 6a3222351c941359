#include "lab/manifest.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>

#include <json.hpp>

#include "lab/error.hpp"
#include "lab/simd/kernels.hpp"

#ifndef LAB_GIT_REVISION
#define LAB_GIT_REVISION "unknown"
#endif

namespace lab {

const char* git_revision() { return LAB_GIT_REVISION; }

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::check_outputs(const std::string& dir) const {
    for (const auto& f : outputs) {
        const auto p = std::filesystem::path(dir) / f;
        std::error_code ec;
        const auto size = std::filesystem::file_size(p, ec);
        if (ec || size == 0) throw NumericalError("output " + p.string() + " is missing or empty");
    }
}

std::string RunManifest::json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["threads"] = threads;
    j["start"] = start_utc;
    j["end"] = end_utc;
    j["wall_seconds"] = wall_seconds;
    j["versions"] = {{"lab", "0.1.0"}, {"git", git_revision()}, {"kernels", simd::isa_name(simd::kernels().isa)}};
    j["outputs"] = outputs;
    j["config"] = config_text;
    return j.dump(2) + "\n";
}

}  // namespace lab
