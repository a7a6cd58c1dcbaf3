#pragma once

#include <stdexcept>
#include <string>

namespace sceneparse {

// Error categories map to CLI exit codes: config=2, data=3, model=4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sceneparse
