#pragma once

#include <stdexcept>
#include <string>

namespace calibfair {

// Bad user input: malformed specs, out-of-range config values, unusable
// flag combinations. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (CSV, checkpoint, spec JSON). Also exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure while computing: divergence, non-finite values, I/O trouble.
// The CLI maps this to exit code 1.
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace calibfair
