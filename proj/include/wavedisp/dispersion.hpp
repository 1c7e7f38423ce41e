#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "wavedisp/medium.hpp"

namespace wavedisp {

using Matrix4 = Eigen::Matrix<cplx, 4, 4>;
using Vector4 = Eigen::Matrix<cplx, 4, 1>;

enum class MatrixKind { Full, D0, D1, D2, Combined };

/// Matrices in the (A, B, C, F) unknowns of the global trigonometric basis
/// (layer 2 written as B sin(alpha2 y) + C cos(alpha2 y)). They are the
/// textbook form of the problem and are used as references; the solvers use
/// the local matrix below, which does not lose accuracy when layer 2 is
/// evanescent.
struct DispersionMatrix {
    Matrix4 entries;
    MatrixKind provenance;
};

struct Alphas {
    cplx a1, a2, a3;
};

[[nodiscard]] Alphas principal_alphas(cplx W, cplx K, const LayerStack& stack);

/// Ideal-interface matrix at (omega, k); explicit alphas allow sign-flip checks.
[[nodiscard]] DispersionMatrix full_matrix(cplx omega, cplx k, const LayerStack& stack);
[[nodiscard]] DispersionMatrix full_matrix(const Alphas& a, const LayerStack& stack);
/// D0, D1 or D2 of the linked family.
[[nodiscard]] DispersionMatrix linked_part(MatrixKind which, cplx W, cplx K, const LayerStack& stack);
/// D0 + eps1 D1 + eps2 D2, or the full matrix when eps is infinite.
[[nodiscard]] DispersionMatrix combined_matrix(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// Local-basis matrix in the unknowns (A, P, Q, F) with layer 2 written as
/// P cos(alpha2 (y-H1)) + Q sin(alpha2 (y-H1)) / alpha2. Every entry is an
/// entire function of (W, K), so its determinant is single valued and free of
/// the alpha2 sign. Rows: pressure jump at H1, slope continuity at H1,
/// pressure jump at H2, slope continuity at H2.
[[nodiscard]] Matrix4 local_matrix(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// From this |alpha2| h2 on, layer 2 is handled in the two-sided exponential
/// form exp(i alpha2 (y-H1)), exp(i alpha2 (H2-y)) whenever accuracy matters.
inline constexpr double kExpBasisSwitch = 1.0;

/// Determinant of the local matrix ("reduced determinant"). Once layer 2 is
/// thick in phase it is evaluated as det(exponential form) / (-2 i alpha2
/// exp(i alpha2 h2)), the same entire function without the cancellation
/// between rows 3 and 4 that an evanescent layer 2 causes. Related to the
/// global-basis determinants by
///   det full            =  alpha2 * secular(W, K, infinity)
///   det(D0+e1 D1+e2 D2) = -alpha2 * secular(W, K, eps).
[[nodiscard]] cplx secular(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// |secular| divided by the product of row norms (Hadamard ratio, <= 1).
[[nodiscard]] double secular_residual(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// Determinant of the ideal-interface matrix at (omega, k) with principal alphas.
[[nodiscard]] cplx det_D(cplx omega, cplx k, const LayerStack& stack);
/// Determinant of the linked family; infinite eps dispatches to det_D.
[[nodiscard]] cplx det_D_eps(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// Reduced determinant and the partials used by the Newton systems.
struct DetPartials {
    cplx D, D_W, D_K, D_WW, D_WK, D_KK;
    /// Product of row norms of the matrix, each row joined with (1 + |K|) times
    /// its K-derivative: a natural magnitude for D.
    double scale = 0.0;
    /// Magnitude bound for D_K from the multilinear expansion.
    double scale_K = 0.0;
};

[[nodiscard]] DetPartials det_partials(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack);

/// Row-scaled determinant of a 4x4 matrix; the row norms are factored out
/// before LU and multiplied back.
[[nodiscard]] cplx stable_det(const Matrix4& m);

// ---------------------------------------------------------------------------
// Roots and branch continuation in K at fixed W.

struct NewtonOptions {
    double step_tol = 1e-13;
    double residual_tol = 1e-10;
    int max_iter = 30;
};

struct RootResult {
    cplx K;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
};

/// Newton iteration on K -> secular(W, K) at fixed W.
[[nodiscard]] RootResult newton_K(cplx W, cplx K0, const LinkingParams& eps, const LayerStack& stack,
                                  const NewtonOptions& opt = {});

struct RootScanOptions {
    /// Samples per unit of Im k along the scan.
    double density = 400.0;
    NewtonOptions newton{};
};

/// Roots k of D(omega0, k) = 0 with k = i*kappa, kappa in [kappa_lo, kappa_hi].
/// For purely imaginary omega0 the reduced determinant is real on that ray and
/// roots are bracketed by sign changes; otherwise local minima of |D| seed a
/// Newton polish. Returns the first n_max by |k|; throws ROOT_COUNT_SHORTFALL.
[[nodiscard]] std::vector<cplx> find_roots_at_reference(cplx omega0, double kappa_lo, double kappa_hi, int n_max,
                                                        const LayerStack& stack, const RootScanOptions& opt = {});

/// Real propagating roots k > 0 at real omega found by dense sign-change
/// bracketing of the reduced determinant in K on [0, omega^2/c_min^2].
[[nodiscard]] std::vector<double> propagating_roots(double omega, const LayerStack& stack, int samples = 20000);

enum class BranchLabel { Type1, Type2, Type3, Type23, Unclassified };
[[nodiscard]] std::string label_name(BranchLabel label);

enum class ExecPolicy { Serial, Parallel };

struct BranchTable {
    std::vector<cplx> nodes;                 // contour nodes omega_j
    std::vector<std::vector<cplx>> K;        // K[branch][node]
    std::vector<BranchLabel> labels;         // per branch, Unclassified until classified

    [[nodiscard]] std::size_t branch_count() const { return K.size(); }
    [[nodiscard]] std::size_t node_count() const { return nodes.size(); }
    [[nodiscard]] cplx k(std::size_t branch, std::size_t node) const { return wavenumber_from_K(K[branch][node]); }
};

struct ContinuationOptions {
    NewtonOptions newton{6e-14, 1e-10, 12};
    int max_halvings = 10;
    /// A corrector may move at most this multiple of the predictor step
    /// (plus an absolute floor) before the step is rejected and halved.
    double jump_ratio = 0.5;
    ExecPolicy policy = ExecPolicy::Parallel;
};

/// Carry one root K along the straight omega segment [omega_from, omega_to]
/// with a tangent predictor (dK/dW = -D_W / D_K) and Newton corrector,
/// halving the step on failure or on a suspicious jump.
[[nodiscard]] cplx continue_root(cplx omega_from, cplx omega_to, cplx K, const LayerStack& stack,
                                 const ContinuationOptions& opt = {});

/// Continue every seed (omega0, k) node by node along `contour`, which must
/// start at omega0. Branches are independent and may run in parallel; the
/// table is assembled afterwards and checked for collisions.
[[nodiscard]] BranchTable continue_branches(const std::vector<std::pair<cplx, cplx>>& seeds,
                                            const std::vector<cplx>& contour, const LayerStack& stack,
                                            const ContinuationOptions& opt = {});

/// Piecewise-linear path through `vertices` with node spacing <= `spacing`.
/// Vertices are always included.
[[nodiscard]] std::vector<cplx> polyline_nodes(const std::vector<cplx>& vertices, double spacing);

/// dk/domega at an interior node from the nonuniform three-point derivative
/// of the analytic K(W): dk/domega = (omega / k) dK/dW.
[[nodiscard]] cplx dk_domega(const BranchTable& table, std::size_t branch, std::size_t node);

/// (dk/domega)^-1 at an interior node; uses the nonuniform three-point
/// derivative of the analytic K(W) and dk/domega = (omega/k) dK/dW, which
/// stays accurate through cutoffs. Throws EDGE_NODE at endpoints, CUTOFF at k = 0.
[[nodiscard]] double group_velocity_fd(const BranchTable& table, std::size_t branch, std::size_t node);

struct ClassifyOptions {
    /// A slope hypothesis fits when |log(slope / c_j^-2)| is below this.
    double log_tolerance = 0.7;
    /// Type 2-3 when at least this fraction of local slopes sits in each of
    /// the c2 and c3 zones.
    double mixed_fraction = 0.2;
};

/// Label a branch sampled along Im omega = const from the slopes of Re K
/// against Re W. Throws UNCLASSIFIED if no slope fits.
[[nodiscard]] BranchLabel classify_branch(const std::vector<cplx>& omega, const std::vector<cplx>& K,
                                          const LayerStack& stack, const ClassifyOptions& opt = {});

/// CSV rows (Re omega, Im omega, branch_id, Re k, Im k, Re K, Im K, label).
void write_branch_csv(const BranchTable& table, const std::string& path);

}  // namespace wavedisp
