#pragma once

#include <stdexcept>
#include <string>

namespace hjbs {

enum class ErrorCode {
    Config,
    Io,
    InvalidExponents,
    DegenerateNoise,
    NegativeTime,
    DimensionMismatch,
    RangeViolation,
    DegeneratePencil,
    BadWeight,
    NonFiniteIntegrand,
    ControlOutOfSet,
    BadExponent,
    NoThreshold,
    NotContracted,
    ThresholdGuard,
    UnstableStep,
    InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// C API can map it onto a stable status value.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace hjbs
