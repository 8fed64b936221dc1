#pragma once

#include <stdexcept>
#include <string>

namespace psyprof {

// Error classes map 1:1 to CLI exit codes; keep the set small.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingInputError : std::runtime_error {
    explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LayoutError : std::runtime_error {
    explicit LayoutError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace psyprof
