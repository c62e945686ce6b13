#pragma once

#include <stdexcept>
#include <string>

namespace mimic {

// Bad configuration or unusable input files (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime failure inside a simulation or estimation (CLI exit code 3).
struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mimic
