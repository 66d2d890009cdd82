#pragma once
#include <stdexcept>
#include <string>

namespace uvrec {

// All library errors derive from Error and carry a short machine-parsable
// code; the CLI prints "error: <code>: <message>" and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Tensor/grid dimension mismatches.
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error("SHAPE", msg) {}
};

// Caller violated an operation precondition (empty input, non-scalar loss...).
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error("USAGE", msg) {}
};

// Bad or inconsistent experiment configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("CONFIG", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("IO", msg) {}
};

// Input is structurally valid but mathematically degenerate (e.g. all-zero
// ground truth in the spectral loss).
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& msg) : Error("DEGENERATE", msg) {}
};

}  // namespace uvrec
