#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsl {

enum class ErrorKind {
    InvalidGrid,
    NonZeroMean,
    NonFinite,
    UnsupportedRange,
    DegenerateLadder,
    ResolutionTooCoarse,
    CflViolation,
    BlowupDetected,
    InsufficientSamples,
    TooCloseToSingularity,
    OutsideRegion,
    StageUnavailable,
    SeedOutsideRegion,
    ViscousRun,
    MissingNorms,
    ResolutionInfeasible,
    Io,
    Usage,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the contract error name.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace vsl
