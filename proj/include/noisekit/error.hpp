#pragma once

#include <stdexcept>
#include <string>

namespace noisekit {

// Bad inputs: malformed files, invariant violations, unusable configs.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while computing: numeric collapse, unwritable outputs.
// The CLI maps these to exit code 2.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace noisekit
