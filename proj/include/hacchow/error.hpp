#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hacchow {

/// Failure categories surfaced by the library. The CLI maps validation
/// codes to exit status 2 and numerical codes to exit status 3.
enum class ErrorCode {
    DimensionMismatch,
    DomainError,
    BreakTooExtreme,
    RegimeTooSmall,
    KTooSmall,
    NotPositiveDefinite,
    Unstable,
    SimulationFailure,
    IoError,
};

[[nodiscard]] constexpr std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::BreakTooExtreme: return "BreakTooExtreme";
        case ErrorCode::RegimeTooSmall: return "RegimeTooSmall";
        case ErrorCode::KTooSmall: return "KTooSmall";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::Unstable: return "Unstable";
        case ErrorCode::SimulationFailure: return "SimulationFailure";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// True for errors caused by the caller's inputs rather than by the data.
[[nodiscard]] constexpr bool is_validation_error(ErrorCode code) noexcept {
    return code == ErrorCode::DimensionMismatch || code == ErrorCode::DomainError ||
           code == ErrorCode::BreakTooExtreme || code == ErrorCode::RegimeTooSmall ||
           code == ErrorCode::KTooSmall;
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hacchow
