#include "wavedisp/errors.hpp"

namespace wavedisp {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
        case ErrorCode::Degenerate: return "DEGENERATE";
        case ErrorCode::RootCountShortfall: return "ROOT_COUNT_SHORTFALL";
        case ErrorCode::ContinuationStall: return "CONTINUATION_STALL";
        case ErrorCode::BranchCollision: return "BRANCH_COLLISION";
        case ErrorCode::EdgeNode: return "EDGE_NODE";
        case ErrorCode::Unclassified: return "UNCLASSIFIED";
        case ErrorCode::SingularMinor: return "SINGULAR_MINOR";
        case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
        case ErrorCode::ZeroNorm: return "ZERO_NORM";
        case ErrorCode::Cutoff: return "CUTOFF";
        case ErrorCode::DegenerateSpeeds: return "DEGENERATE_SPEEDS";
        case ErrorCode::ResonantMiddleLayer: return "RESONANT_MIDDLE_LAYER";
        case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
        case ErrorCode::SingularJacobian: return "SINGULAR_JACOBIAN";
        case ErrorCode::TraceFailed: return "TRACE_FAILED";
        case ErrorCode::BandEmpty: return "BAND_EMPTY";
        case ErrorCode::MissingBranch: return "MISSING_BRANCH";
        case ErrorCode::GrowthViolation: return "GROWTH_VIOLATION";
        case ErrorCode::InvalidId: return "INVALID_ID";
    }
    return "UNKNOWN";
}

bool is_validation_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::OutOfRange:
        case ErrorCode::DegenerateSpeeds:
        case ErrorCode::MissingBranch:
        case ErrorCode::InvalidId:
        case ErrorCode::BandEmpty:
            return true;
        default:
            return false;
    }
}

}  // namespace wavedisp
