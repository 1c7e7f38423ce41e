#pragma once

#include <string>
#include <vector>

#include "wavedisp/dispersion.hpp"
#include "wavedisp/medium.hpp"

namespace wavedisp {

/// exp(-(omega - center)^2 / width), the analytic continuation of the real
/// half-axis spectrum exp(-(|omega| - center)^2 / width).
struct ExcitationSpectrum {
    double center = 12.0;
    double width = 16.0;

    [[nodiscard]] cplx operator()(cplx omega) const;
    /// [lo, hi] on the real half axis where the spectrum exceeds `rel` of its peak.
    [[nodiscard]] std::pair<double, double> support(double rel) const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> x, w;
};
[[nodiscard]] GaussRule gauss_legendre(int order);

struct SpacingPolicy {
    int order = 10;                 // Gauss-Legendre points per panel
    double points_per_cycle = 20.0; // nodes per 2 pi of integrand phase
    double slowness = 0.0;          // bound on |dk/domega|; 0 -> 1 / c_min
    double L = 10.0;
    double t_max = 15.0;
    double max_panel = 0.0;         // optional cap on panel width; 0 -> none
    double truncation = 1e-12;      // spectrum level that bounds the contour
    ExcitationSpectrum spectrum{};
};

/// Polyline in the first quadrant: real axis, 45-degree rises of height
/// Omega, flat top at Im omega = Omega over [lo, hi]. Omega = 0 is a real
/// segment over the spectrum support.
struct FrequencyContour {
    std::vector<cplx> vertices;
    double Omega = 0.0;
    double lo = 0.0, hi = 0.0;
    double panel = 0.1;  // Gauss panel width along the path
    int order = 10;
    std::vector<cplx> nodes;      // generic quadrature nodes
    std::vector<cplx> weights;    // complex d omega weights

    [[nodiscard]] cplx start() const { return vertices.front(); }
    [[nodiscard]] cplx end() const { return vertices.back(); }
};

/// Throws BAND_EMPTY if the truncated spectrum is empty, OUT_OF_RANGE if the
/// raised band does not fit inside it.
[[nodiscard]] FrequencyContour build_contour(double Omega, double lo, double hi, const SpacingPolicy& policy,
                                             const LayerStack& stack);

/// Continuation mesh for a contour: the imaginary axis from omega0 down to the
/// contour start, then the contour polyline, with spacing `step`.
[[nodiscard]] std::vector<cplx> continuation_mesh(const FrequencyContour& contour, cplx omega0, double step);

/// Tracked branches on a contour: roots at omega0 = i*20 continued along the mesh.
struct ContourBranches {
    BranchTable table;
    std::size_t contour_begin = 0;  // first mesh node on the contour
};

[[nodiscard]] ContourBranches track_branches(const FrequencyContour& contour, int n_branches,
                                             const LayerStack& stack, const ContinuationOptions& opt = {},
                                             cplx omega0 = cplx(0.0, 20.0), double step = 0.05);

/// Label each branch from its samples on the flat top (Omega > 0 only).
void classify_on_top(ContourBranches& br, const FrequencyContour& contour, const LayerStack& stack,
                     const ClassifyOptions& opt = {});

struct BranchSubset {
    enum class Kind { All, Type23, Type3, Ids } kind = Kind::All;
    std::vector<std::size_t> ids;
    [[nodiscard]] static BranchSubset parse(const std::string& text);
};

/// Branch indices for a subset; Type23 means every branch not labelled Type 1
/// (and classified). Throws MISSING_BRANCH for unknown ids or empty results.
[[nodiscard]] std::vector<std::size_t> resolve_subset(const BranchSubset& subset, const BranchTable& table);

struct SynthesisOptions {
    /// Tripwire on the propagation envelope |f(omega) exp(i k L)|, whose
    /// real-axis bound is 1 (|f| <= 1 and Im k >= 0 there).
    double growth_factor = 10.0;
    ExecPolicy policy = ExecPolicy::Parallel;
    ContinuationOptions continuation{};
};

struct Signal {
    std::vector<double> t;
    std::vector<cplx> u_tilde;
    std::vector<double> u;  // Re u_tilde
    std::string contour, subset;
    double L = 0.0, y0 = 0.0;
};

/// One weighted integrand sample f(omega) P U e^{ikL} d omega.
struct QuadTerm {
    cplx omega;
    cplx g;
};

/// Quadrature terms of one branch along the contour (cutoff-aware).
[[nodiscard]] std::vector<QuadTerm> branch_terms(const FrequencyContour& contour, const ContourBranches& br,
                                                 std::size_t branch, double L, double y0, const LayerStack& stack,
                                                 const SpacingPolicy& policy, const SynthesisOptions& opt = {});

/// sum_j g_j exp(-i omega_j t) for every t, in the order the terms are given.
/// The parallel path splits over t only, so both paths are bit-identical.
[[nodiscard]] std::vector<cplx> accumulate_signal(const std::vector<QuadTerm>& terms, const std::vector<double>& t,
                                                  ExecPolicy policy);

[[nodiscard]] Signal synthesize(const FrequencyContour& contour, const ContourBranches& br,
                                const std::vector<std::size_t>& branches, double L, double y0,
                                const std::vector<double>& t, const LayerStack& stack,
                                const SpacingPolicy& policy, const SynthesisOptions& opt = {});

/// Uniform grid [t0, t1] with step dt (inclusive of both ends when they align).
[[nodiscard]] std::vector<double> time_grid(double t0, double t1, double dt);

/// Root-mean-square of (a - b) over [t0, t1] relative to that of b.
[[nodiscard]] double relative_rms(const std::vector<double>& t, const std::vector<double>& a,
                                  const std::vector<double>& b, double t0, double t1);

/// t - L Re(dk/domega): negative where the integrand decays as Im omega grows.
[[nodiscard]] double shiftability(const BranchTable& table, std::size_t branch, std::size_t node, double L, double t);

/// Im k - Im omega / v.
[[nodiscard]] double precursor_decay(cplx k, cplx omega, double v);
[[nodiscard]] double precursor_decay(const BranchTable& table, std::size_t branch, std::size_t node, double v);

void write_signal_csv(const Signal& s, const std::string& path);

}  // namespace wavedisp
