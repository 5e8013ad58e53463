#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "qbandit/harness.hpp"

namespace qbandit::config {

/// Malformed, unreadable, or semantically invalid configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fields absent from `j` keep their defaults. Keys starting with '_' are comments;
/// any other unknown key is an error.
harness::ExperimentConfig from_json(const nlohmann::json& j);

nlohmann::json to_json(const harness::ExperimentConfig& config);

harness::ExperimentConfig load(const std::filesystem::path& path);

/// Built-in defaults, as printed by `run --print-config`.
harness::ExperimentConfig defaults();

}  // namespace qbandit::config
