#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leastaction {

// Bad configuration or precondition violation. CLI exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file. Carries a 1-based line number when known. CLI exit code 1.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
    std::size_t line;
};

// A path failed validation (wrong shape, non-finite coordinates). CLI exit code 2.
struct InvalidPathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Singular system evaluation (coincident gravitating bodies, singular
// denominator). The message names the offending slice or body. CLI exit code 2.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical blow-up or degeneracy (non-finite state, norm collapse). CLI exit code 2.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace leastaction
