#include "wavedisp/transient.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "wavedisp/errors.hpp"
#include "wavedisp/modes.hpp"

namespace wavedisp {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);
}  // namespace

cplx ExcitationSpectrum::operator()(cplx omega) const {
    const cplx d = omega - center;
    return std::exp(-d * d / width);
}

std::pair<double, double> ExcitationSpectrum::support(double rel) const {
    const double r = std::sqrt(width * std::log(1.0 / rel));
    return {std::max(0.0, center - r), center + r};
}

GaussRule gauss_legendre(int order) {
    if (order < 1) throw Error(ErrorCode::OutOfRange, "Gauss order must be positive");
    GaussRule g;
    g.x.resize(order);
    g.w.resize(order);
    for (int i = 0; i < order; ++i) {
        // Newton on P_n from the Chebyshev-like initial guess.
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) p0 = 1.0;
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        g.x[order - 1 - i] = x;
        g.w[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

namespace {

double panel_width(const SpacingPolicy& p, const LayerStack& stack) {
    const double slow = p.slowness > 0.0 ? p.slowness : 1.0 / stack.min_speed();
    const double rate = p.L * slow + p.t_max;
    double h = rate > 0.0 ? 2.0 * kPi * p.order / (p.points_per_cycle * rate) : 1.0;
    if (p.max_panel > 0.0) h = std::min(h, p.max_panel);
    return h;
}

// Gauss panels on the straight segment [a, b]; appends nodes and d omega weights.
void add_panels(cplx a, cplx b, double h, const GaussRule& g, std::vector<cplx>& nodes, std::vector<cplx>& weights) {
    const double len = std::abs(b - a);
    if (len == 0.0) return;
    const int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    const cplx step = (b - a) / double(n);
    for (int p = 0; p < n; ++p) {
        const cplx mid = a + step * (p + 0.5);
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            nodes.push_back(mid + 0.5 * step * g.x[i]);
            weights.push_back(0.5 * step * g.w[i]);
        }
    }
}

bool is_real(cplx z) { return z.imag() == 0.0; }

}  // namespace

FrequencyContour build_contour(double Omega, double lo, double hi, const SpacingPolicy& policy,
                               const LayerStack& stack) {
    if (!(Omega >= 0.0)) throw Error(ErrorCode::OutOfRange, "Omega must be non-negative");
    const auto [s0, s1] = policy.spectrum.support(policy.truncation);
    if (!(s1 > s0)) throw Error(ErrorCode::BandEmpty, "spectrum truncation leaves nothing");
    FrequencyContour c;
    c.Omega = Omega;
    c.order = policy.order;
    c.panel = panel_width(policy, stack);
    if (Omega == 0.0) {
        c.vertices = {s0, s1};
        c.lo = s0;
        c.hi = s1;
    } else {
        if (!(lo < hi && lo - Omega >= s0 && hi + Omega <= s1)) {
            throw Error(ErrorCode::OutOfRange, "raised band does not fit inside the spectrum support");
        }
        c.lo = lo;
        c.hi = hi;
        c.vertices = {s0, lo - Omega, cplx(lo, Omega), cplx(hi, Omega), hi + Omega, s1};
        c.vertices.erase(std::unique(c.vertices.begin(), c.vertices.end()), c.vertices.end());
    }
    const GaussRule g = gauss_legendre(policy.order);
    for (std::size_t i = 1; i < c.vertices.size(); ++i) add_panels(c.vertices[i - 1], c.vertices[i], c.panel, g, c.nodes, c.weights);
    return c;
}

std::vector<cplx> continuation_mesh(const FrequencyContour& contour, cplx omega0, double step) {
    std::vector<cplx> v{omega0};
    v.insert(v.end(), contour.vertices.begin(), contour.vertices.end());
    return polyline_nodes(v, step);
}

ContourBranches track_branches(const FrequencyContour& contour, int n_branches, const LayerStack& stack,
                               const ContinuationOptions& opt, cplx omega0, double step) {
    std::vector<cplx> roots;
    double kappa_hi = 40.0;
    for (int attempt = 0;; ++attempt) {
        try {
            roots = find_roots_at_reference(omega0, 0.0, kappa_hi, n_branches, stack);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RootCountShortfall || attempt >= 4) throw;
            kappa_hi *= 2.0;
        }
    }
    std::vector<std::pair<cplx, cplx>> seeds;
    for (const cplx& k : roots) seeds.emplace_back(omega0, k);
    ContourBranches br;
    const std::vector<cplx> mesh = continuation_mesh(contour, omega0, step);
    br.table = continue_branches(seeds, mesh, stack, opt);
    for (std::size_t j = 0; j < mesh.size(); ++j) {
        if (std::abs(mesh[j] - contour.start()) < 1e-12) {
            br.contour_begin = j;
            break;
        }
    }
    return br;
}

void classify_on_top(ContourBranches& br, const FrequencyContour& contour, const LayerStack& stack,
                     const ClassifyOptions& opt) {
    const BranchTable& t = br.table;
    if (contour.Omega <= 0.0) return;
    std::vector<std::size_t> top;
    for (std::size_t j = br.contour_begin; j < t.node_count(); ++j) {
        const cplx om = t.nodes[j];
        if (std::abs(om.imag() - contour.Omega) < 1e-12 && om.real() >= contour.lo - 1e-12 &&
            om.real() <= contour.hi + 1e-12) {
            top.push_back(j);
        }
    }
    for (std::size_t b = 0; b < t.branch_count(); ++b) {
        std::vector<cplx> om, K;
        for (std::size_t j : top) {
            om.push_back(t.nodes[j]);
            K.push_back(t.K[b][j]);
        }
        try {
            br.table.labels[b] = classify_branch(om, K, stack, opt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unclassified && e.code() != ErrorCode::OutOfRange) throw;
            br.table.labels[b] = BranchLabel::Unclassified;
        }
    }
}

BranchSubset BranchSubset::parse(const std::string& text) {
    BranchSubset s;
    if (text == "all") return s;
    if (text == "type23") {
        s.kind = Kind::Type23;
        return s;
    }
    if (text == "type3") {
        s.kind = Kind::Type3;
        return s;
    }
    s.kind = Kind::Ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long v = -1;
        try {
            v = std::stol(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty() || v < 0) throw Error(ErrorCode::MissingBranch, "bad branch id '" + item + "'");
        s.ids.push_back(static_cast<std::size_t>(v));
    }
    if (s.ids.empty()) throw Error(ErrorCode::MissingBranch, "empty subset");
    return s;
}

std::vector<std::size_t> resolve_subset(const BranchSubset& subset, const BranchTable& table) {
    std::vector<std::size_t> out;
    const std::size_t n = table.branch_count();
    switch (subset.kind) {
        case BranchSubset::Kind::All:
            for (std::size_t b = 0; b < n; ++b) out.push_back(b);
            break;
        case BranchSubset::Kind::Type23:
            for (std::size_t b = 0; b < n; ++b) {
                const BranchLabel l = table.labels[b];
                if (l == BranchLabel::Type2 || l == BranchLabel::Type3 || l == BranchLabel::Type23) out.push_back(b);
            }
            break;
        case BranchSubset::Kind::Type3:
            for (std::size_t b = 0; b < n; ++b) {
                if (table.labels[b] == BranchLabel::Type3) out.push_back(b);
            }
            break;
        case BranchSubset::Kind::Ids:
            for (std::size_t b : subset.ids) {
                if (b >= n) throw Error(ErrorCode::MissingBranch, "branch " + std::to_string(b) + " is not tracked");
                out.push_back(b);
            }
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            break;
    }
    if (out.empty()) throw Error(ErrorCode::MissingBranch, "subset selects no tracked branch");
    return out;
}

namespace {

// Cutoff frequency in (a, b) on the real axis: root of D(omega^2, 0).
double refine_cutoff(double a, double b, const LayerStack& stack) {
    const LinkingParams inf = LinkingParams::infinity();
    auto f = [&](double w) { return secular(w * w, 0.0, inf, stack).real(); };
    double fa = f(a);
    for (int i = 0; i < 200 && b - a > 1e-15 * (1.0 + b); ++i) {
        const double m = 0.5 * (a + b), fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

struct PathPoint {
    cplx omega;
    cplx weight;  // zero for waypoints
};

// Nodes on the real piece [p, q] (p < q) with sqrt substitution next to cutoffs.
void real_piece(double p, double q, bool sing_left, bool sing_right, double h, const GaussRule& g,
                std::vector<PathPoint>& out) {
    const double len = q - p;
    int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    if (sing_left && sing_right) n = std::max(n, 2);
    const double w = len / n;
    for (int k = 0; k < n; ++k) {
        const double a = p + k * w, b = a + w;
        const double ru = std::sqrt(w);
        if (k == 0 && sing_left) {
            // omega = a + u^2, d omega = 2 u du
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                const double u = 0.5 * ru * (g.x[i] + 1.0);
                out.push_back({a + u * u, 0.5 * ru * g.w[i] * 2.0 * u});
            }
        } else if (k == n - 1 && sing_right) {
            // omega = b - u^2; emit in increasing omega
            for (std::size_t i = g.x.size(); i-- > 0;) {
                const double u = 0.5 * ru * (g.x[i] + 1.0);
                out.push_back({b - u * u, 0.5 * ru * g.w[i] * 2.0 * u});
            }
        } else {
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                out.push_back({0.5 * (a + b) + 0.5 * w * g.x[i], 0.5 * w * g.w[i]});
            }
        }
    }
}

// Upper bound on |U(y0)| / max |U| for a mode confined to layer 1 by
// evanescent layers 2 and 3.
double surface_decoupling(cplx W, cplx K, double y0, const LayerStack& stack) {
    const double k2 = std::abs(alpha(W, K, 2, stack).imag());
    const double k3 = std::abs(alpha(W, K, 3, stack).imag());
    const double d3 = std::max(0.0, std::min(y0, stack.H3) - stack.H2);
    return std::exp(-k2 * stack.thickness(2) - k3 * d3);
}

}  // namespace

std::vector<QuadTerm> branch_terms(const FrequencyContour& contour, const ContourBranches& br, std::size_t branch,
                                   double L, double y0, const LayerStack& stack, const SpacingPolicy& policy,
                                   const SynthesisOptions& opt) {
    const BranchTable& t = br.table;
    if (branch >= t.branch_count()) throw Error(ErrorCode::MissingBranch, "branch " + std::to_string(branch));
    if (!(y0 >= 0.0 && y0 <= stack.H3)) throw Error(ErrorCode::OutOfRange, "y0 outside [0, H3]");
    const GaussRule g = gauss_legendre(contour.order);
    const auto& K = t.K[branch];

    // Ordered path points; vertices enter as zero-weight waypoints so the
    // continuation follows the polyline.
    std::vector<PathPoint> path;
    for (std::size_t s = 1; s < contour.vertices.size(); ++s) {
        const cplx A = contour.vertices[s - 1], B = contour.vertices[s];
        if (is_real(A) && is_real(B)) {
            std::vector<double> cuts;
            double prev_w = 0.0, prev_re = 0.0;
            bool have_prev = false;
            for (std::size_t j = br.contour_begin; j < t.node_count(); ++j) {
                const cplx om = t.nodes[j];
                if (!is_real(om) || om.real() < A.real() - 1e-12 || om.real() > B.real() + 1e-12) {
                    have_prev = false;
                    continue;
                }
                const double re = K[j].real();
                if (std::abs(K[j]) < 1e-10 && (om.real() == A.real() || om.real() == B.real())) {
                    cuts.push_back(om.real());
                } else if (have_prev && re != 0.0 && prev_re != 0.0 && (re < 0.0) != (prev_re < 0.0)) {
                    cuts.push_back(refine_cutoff(prev_w, om.real(), stack));
                }
                prev_w = om.real();
                prev_re = re;
                have_prev = true;
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            std::vector<double> bps{A.real()};
            for (double c : cuts) {
                if (c > A.real() && c < B.real()) bps.push_back(c);
            }
            bps.push_back(B.real());
            auto is_cut = [&](double x) { return std::find(cuts.begin(), cuts.end(), x) != cuts.end(); };
            for (std::size_t i = 1; i < bps.size(); ++i) {
                real_piece(bps[i - 1], bps[i], is_cut(bps[i - 1]), is_cut(bps[i]), contour.panel, g, path);
            }
        } else {
            std::vector<cplx> nodes, weights;
            add_panels(A, B, contour.panel, g, nodes, weights);
            for (std::size_t i = 0; i < nodes.size(); ++i) path.push_back({nodes[i], weights[i]});
        }
        path.push_back({B, 0.0});
    }

    const ExcitationSpectrum& spec = policy.spectrum;
    std::vector<QuadTerm> terms;
    terms.reserve(path.size());
    cplx om = contour.start();
    cplx Kc = K[br.contour_begin];
    for (const PathPoint& pp : path) {
        Kc = continue_root(om, pp.omega, Kc, stack, opt.continuation);
        om = pp.omega;
        if (pp.weight == 0.0) continue;
        const cplx k = wavenumber_from_K(Kc);
        const cplx envelope = spec(om) * std::exp(kI * k * L);
        cplx Y;
        try {
            const ModeProfile prof = solve_coefficients_WK(om * om, Kc, stack);
            Y = amplitude_P(prof, y0) * eval_profile(prof, y0);
        } catch (const Error& e) {
            // A mode trapped in layer 1 cannot be scaled to F = 1 in double
            // precision; its surface coupling is then far below rounding.
            if (e.code() != ErrorCode::SingularMinor || surface_decoupling(om * om, Kc, y0, stack) > 1e-7) throw;
            Y = 0.0;
        }
        if (om.imag() > 0.0 && std::abs(envelope) > opt.growth_factor) {
            throw Error(ErrorCode::GrowthViolation, "branch " + std::to_string(branch) + " grows at omega = (" +
                                                        std::to_string(om.real()) + ", " + std::to_string(om.imag()) + ")");
        }
        terms.push_back({om, pp.weight * envelope * Y});
    }
    return terms;
}

std::vector<cplx> accumulate_signal(const std::vector<QuadTerm>& terms, const std::vector<double>& t, ExecPolicy policy) {
    std::vector<cplx> out(t.size());
    auto one = [&](std::size_t i) {
        cplx sum{0.0};
        for (const QuadTerm& q : terms) sum += q.g * std::exp(-kI * q.omega * t[i]);
        out[i] = sum;
    };
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(t.size()); ++i) one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < t.size(); ++i) one(i);
    }
    return out;
}

Signal synthesize(const FrequencyContour& contour, const ContourBranches& br, const std::vector<std::size_t>& branches,
                  double L, double y0, const std::vector<double>& t, const LayerStack& stack,
                  const SpacingPolicy& policy, const SynthesisOptions& opt) {
    if (branches.empty()) throw Error(ErrorCode::MissingBranch, "empty subset");
    std::vector<std::vector<QuadTerm>> per(branches.size());
    std::vector<std::exception_ptr> errors(branches.size());
    auto run = [&](std::size_t i) {
        try {
            per[i] = branch_terms(contour, br, branches[i], L, y0, stack, policy, opt);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (opt.policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < static_cast<long>(branches.size()); ++i) run(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < branches.size(); ++i) run(i);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<QuadTerm> terms;
    for (const auto& p : per) terms.insert(terms.end(), p.begin(), p.end());

    Signal s;
    s.t = t;
    s.u_tilde = accumulate_signal(terms, t, opt.policy);
    s.u.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s.u[i] = s.u_tilde[i].real();
    std::ostringstream name;
    name << "Omega=" << contour.Omega << " band=[" << contour.lo << "," << contour.hi << "]";
    s.contour = name.str();
    s.L = L;
    s.y0 = y0;
    return s;
}

std::vector<double> time_grid(double t0, double t1, double dt) {
    if (!(dt > 0.0 && t1 >= t0)) throw Error(ErrorCode::OutOfRange, "bad time grid");
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = t0 + dt * double(i);
    return t;
}

double relative_rms(const std::vector<double>& t, const std::vector<double>& a, const std::vector<double>& b,
                    double t0, double t1) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-12 || t[i] > t1 + 1e-12) continue;
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double shiftability(const BranchTable& table, std::size_t branch, std::size_t node, double L, double t) {
    return t - L * dk_domega(table, branch, node).real();
}

double precursor_decay(cplx k, cplx omega, double v) { return k.imag() - omega.imag() / v; }

double precursor_decay(const BranchTable& table, std::size_t branch, std::size_t node, double v) {
    return precursor_decay(table.k(branch, node), table.nodes[node], v);
}

void write_signal_csv(const Signal& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << "t,re_u,im_u_tilde\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.t.size(); ++i) out << s.t[i] << ',' << s.u[i] << ',' << s.u_tilde[i].imag() << '\n';
}

}  // namespace wavedisp
