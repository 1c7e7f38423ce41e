#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "wavedisp/dispersion.hpp"
#include "wavedisp/errors.hpp"
#include "wavedisp/medium.hpp"

namespace wavedisp {

/// Branch point near the crossing of branch m of layer family mu with branch
/// n of family nu (families are the decoupled Neumann layers).
struct BranchPointId {
    int mu = 1, nu = 2, m = 0, n = 0;

    /// Validates and canonicalises to mu < nu (swapping m, n with it).
    /// Throws INVALID_ID for mu == nu, indices out of range or m = n = 0.
    [[nodiscard]] static BranchPointId make(int mu, int nu, int m, int n);
    [[nodiscard]] std::string str() const;
    [[nodiscard]] bool is_case2() const { return mu == 1 && nu == 3; }
    friend bool operator==(const BranchPointId&, const BranchPointId&) = default;
};

/// Crossing of K = W/c_mu^2 - (pi m/h_mu)^2 and K = W/c_nu^2 - (pi n/h_nu)^2.
/// Throws DEGENERATE_SPEEDS if c_mu == c_nu.
[[nodiscard]] std::pair<double, double> crossing_point(const BranchPointId& id, const LayerStack& stack);

/// Perturbation seed W = W0 + eps W1 + eps^2 W2 (likewise K).
struct PerturbSeed {
    cplx W, K;
    cplx W1, K1, W2, K2;
};

/// Neighbouring layers (1,2) or (2,3); first order. Index 0 carries the upper
/// sign of the +- in the perturbation formulas, index 1 the lower.
[[nodiscard]] std::array<PerturbSeed, 2> perturb_seed_case1(const BranchPointId& id, double eps,
                                                            const LayerStack& stack);

enum class K2Variant {
    AsPrinted,  // cubic c1 in the coupling factor of the second-order K term
    Corrected,  // c1^2 + c3^2
};

/// Layers (1,3) through layer 2; second order. Throws RESONANT_MIDDLE_LAYER if
/// sin(alpha2 h2) vanishes at the crossing.
[[nodiscard]] std::array<PerturbSeed, 2> perturb_seed_case2(const BranchPointId& id, double eps,
                                                            const LayerStack& stack,
                                                            K2Variant variant = K2Variant::Corrected);

struct BranchPointSolution {
    cplx W, K;
    int iterations = 0;
    double residual_D = 0.0;   // |D| / scale
    double residual_DK = 0.0;  // |D_K| / scale_K
};

struct BranchNewtonOptions {
    int max_iter = 50;
    double step_tol = 1e-13;
    double residual_tol = 1e-10;
    double singular_tol = 1e-14;
};

/// Newton on (D, D_K) = 0 with the analytic Jacobian [[D_W, D_K], [D_WK, D_KK]].
/// Throws NO_CONVERGENCE or SINGULAR_JACOBIAN.
[[nodiscard]] BranchPointSolution newton_branch_point(cplx W0, cplx K0, const LinkingParams& eps,
                                                      const LayerStack& stack, const BranchNewtonOptions& opt = {});

struct PathSpec {
    double eps0 = 0.01;
    double E = 1000.0;
    int nodes = 200;
    /// For (1,3) only: follow (eps, max(eps0, eps - eps0)) instead of (eps, eps).
    bool offset_case2 = false;
    int max_refine = 14;
    K2Variant variant = K2Variant::Corrected;
};

/// The (eps1, eps2) nodes of the tracing path for an id.
[[nodiscard]] std::vector<std::pair<double, double>> eps_path(const BranchPointId& id, const PathSpec& spec);

struct BranchPointRecord {
    BranchPointId id;
    int sign = +1;  // +1: Im Theta > 0 at the first node
    PerturbSeed seed{};
    std::vector<std::pair<double, double>> path;
    std::vector<std::pair<cplx, cplx>> trajectory;  // (Theta, Xi) per path node
    std::pair<cplx, cplx> final_point{};            // at eps = infinity
    bool complete = false;

    /// sqrt(Theta) at the final point.
    [[nodiscard]] cplx omega_star() const { return principal_sqrt(final_point.first); }
};

/// Thrown by trace_branch_point; carries the trajectory up to the last good node.
class TraceFailure : public Error {
public:
    TraceFailure(const std::string& what, BranchPointRecord partial)
        : Error(ErrorCode::TraceFailed, what), partial_(std::move(partial)) {}
    [[nodiscard]] const BranchPointRecord& partial() const noexcept { return partial_; }

private:
    BranchPointRecord partial_;
};

/// Trace one member (sign = +1 or -1) of the conjugate pair from the
/// perturbation seed along the eps path to eps = infinity.
[[nodiscard]] BranchPointRecord trace_branch_point(const BranchPointId& id, const PathSpec& spec, int sign,
                                                   const LayerStack& stack);

struct TraceOutcome {
    BranchPointRecord record;
    bool ok = false;
    std::string error;
};

/// Independent traces, optionally in parallel; results in input order.
[[nodiscard]] std::vector<TraceOutcome> trace_many(const std::vector<BranchPointId>& ids, const PathSpec& spec,
                                                   int sign, const LayerStack& stack,
                                                   ExecPolicy policy = ExecPolicy::Parallel);

/// Ids of all family pairs whose crossing satisfies 0 < W0 <= w_max and
/// K0 > k_min, ordered by family pair, then m, then n.
[[nodiscard]] std::vector<BranchPointId> ids_in_band(double w_max, double k_min, const LayerStack& stack);

}  // namespace wavedisp
