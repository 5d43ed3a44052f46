#pragma once

#include <stdexcept>
#include <string>

namespace gnlab {

// Error taxonomy shared by the library, the C API and the CLI.
// The CLI maps these onto process exit codes: config -> 2,
// numeric/divergence -> 3, calibration -> 4, everything else -> 1.
enum class ErrorKind {
    invalid_argument,  // bad parameter, shape mismatch, index out of range
    format,            // corrupt or truncated file
    config,            // experiment config problems
    numeric,           // divergence, NaN loss, non-finite objective
    calibration,       // target drop unreachable
    degenerate,        // undefined statistic (zero variance, all-zero input)
    io,                // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        raise(kind, message);
    }
}

}  // namespace gnlab
