#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavedisp {

enum class ErrorCode {
    InvalidConfig,
    Degenerate,
    RootCountShortfall,
    ContinuationStall,
    BranchCollision,
    EdgeNode,
    Unclassified,
    SingularMinor,
    OutOfRange,
    ZeroNorm,
    Cutoff,
    DegenerateSpeeds,
    ResonantMiddleLayer,
    NoConvergence,
    SingularJacobian,
    TraceFailed,
    BandEmpty,
    MissingBranch,
    GrowthViolation,
    InvalidId,
};

[[nodiscard]] std::string_view error_name(ErrorCode code) noexcept;

/// True for codes that describe bad input rather than a numerical failure.
[[nodiscard]] bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace wavedisp
