#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lab/experiments.hpp"

namespace lab {

/// Flat sectioned key-value text: `[section]` headers, `key = value` lines,
/// `#` comments. Values are numbers, "strings", true/false or [lists].
struct ConfigValue {
    std::vector<std::string> items;  // one entry for scalars
    bool list = false;
    int line = 0;
};
using ConfigMap = std::map<std::string, ConfigValue>;  // keys are "section.key"

/// Throws ConfigError with the offending line.
ConfigMap parse_config_text(const std::string& text);

/// Defaults for a subcommand (T lists, replica counts, grids).
ExperimentConfig default_config(const std::string& command);
/// Applies parsed entries over `base`; unknown keys raise ConfigError.
ExperimentConfig apply_config(const ConfigMap& entries, ExperimentConfig base);
ExperimentConfig load_config(const std::string& path, const std::string& command);

/// Canonical text of every parameter; parse_config_text + apply_config
/// of this text reproduces the configuration.
std::string print_config(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical text without run-only settings (threads,
/// output directory).
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace lab
