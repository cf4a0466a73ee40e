#include "vsl/error.hpp"

namespace vsl {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidGrid: return "InvalidGrid";
        case ErrorKind::NonZeroMean: return "NonZeroMean";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::UnsupportedRange: return "UnsupportedRange";
        case ErrorKind::DegenerateLadder: return "DegenerateLadder";
        case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
        case ErrorKind::CflViolation: return "CflViolation";
        case ErrorKind::BlowupDetected: return "BlowupDetected";
        case ErrorKind::InsufficientSamples: return "InsufficientSamples";
        case ErrorKind::TooCloseToSingularity: return "TooCloseToSingularity";
        case ErrorKind::OutsideRegion: return "OutsideRegion";
        case ErrorKind::StageUnavailable: return "StageUnavailable";
        case ErrorKind::SeedOutsideRegion: return "SeedOutsideRegion";
        case ErrorKind::ViscousRun: return "ViscousRun";
        case ErrorKind::MissingNorms: return "MissingNorms";
        case ErrorKind::ResolutionInfeasible: return "ResolutionInfeasible";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Usage: return "Usage";
    }
    return "Unknown";
}

}  // namespace vsl
