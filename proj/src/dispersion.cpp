#include "wavedisp/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>

#include "wavedisp/errors.hpp"
#include "wavedisp/trig.hpp"

namespace wavedisp {

Alphas principal_alphas(cplx W, cplx K, const LayerStack& stack) {
    return {alpha(W, K, 1, stack), alpha(W, K, 2, stack), alpha(W, K, 3, stack)};
}

DispersionMatrix full_matrix(const Alphas& a, const LayerStack& s) {
    const double h3 = s.thickness(3);
    Matrix4 m;
    m << -s.rho1 * std::cos(a.a1 * s.H1), s.rho2 * std::sin(a.a2 * s.H1), s.rho2 * std::cos(a.a2 * s.H1), 0.0,
        a.a1 * std::sin(a.a1 * s.H1), a.a2 * std::cos(a.a2 * s.H1), -a.a2 * std::sin(a.a2 * s.H1), 0.0,
        0.0, s.rho2 * std::sin(a.a2 * s.H2), s.rho2 * std::cos(a.a2 * s.H2), -s.rho3 * std::cos(a.a3 * h3),
        0.0, a.a2 * std::cos(a.a2 * s.H2), -a.a2 * std::sin(a.a2 * s.H2), -a.a3 * std::sin(a.a3 * h3);
    return {m, MatrixKind::Full};
}

DispersionMatrix full_matrix(cplx omega, cplx k, const LayerStack& stack) {
    return full_matrix(principal_alphas(omega * omega, k * k, stack), stack);
}

DispersionMatrix linked_part(MatrixKind which, cplx W, cplx K, const LayerStack& s) {
    const Alphas a = principal_alphas(W, K, s);
    const double h3 = s.thickness(3);
    Matrix4 m = Matrix4::Zero();
    switch (which) {
        case MatrixKind::D0:
            m(0, 0) = a.a1 * std::sin(a.a1 * s.H1);
            m(1, 0) = a.a1 * std::sin(a.a1 * s.H1);
            m(1, 1) = a.a2 * std::cos(a.a2 * s.H1);
            m(1, 2) = -a.a2 * std::sin(a.a2 * s.H1);
            m(2, 3) = -a.a3 * std::sin(a.a3 * h3);
            m(3, 1) = a.a2 * std::cos(a.a2 * s.H2);
            m(3, 2) = -a.a2 * std::sin(a.a2 * s.H2);
            m(3, 3) = -a.a3 * std::sin(a.a3 * h3);
            break;
        case MatrixKind::D1:
            m(0, 0) = -s.rho1 * std::cos(a.a1 * s.H1);
            m(0, 1) = s.rho2 * std::sin(a.a2 * s.H1);
            m(0, 2) = s.rho2 * std::cos(a.a2 * s.H1);
            break;
        case MatrixKind::D2:
            m(2, 1) = -s.rho2 * std::sin(a.a2 * s.H2);
            m(2, 2) = -s.rho2 * std::cos(a.a2 * s.H2);
            m(2, 3) = s.rho3 * std::cos(a.a3 * h3);
            break;
        default:
            throw Error(ErrorCode::OutOfRange, "linked_part expects D0, D1 or D2");
    }
    return {m, which};
}

DispersionMatrix combined_matrix(cplx W, cplx K, const LinkingParams& eps, const LayerStack& s) {
    if (eps.infinite) return full_matrix(principal_alphas(W, K, s), s);
    Matrix4 m = linked_part(MatrixKind::D0, W, K, s).entries + eps.eps1 * linked_part(MatrixKind::D1, W, K, s).entries +
                eps.eps2 * linked_part(MatrixKind::D2, W, K, s).entries;
    return {m, MatrixKind::Combined};
}

namespace {

struct LocalJet {
    // Matrix and its partials; index 0 value, then W, K, WW, WK, KK.
    Matrix4 m[6];
};


LocalJet local_jet(cplx W, cplx K, const LinkingParams& eps, const LayerStack& s, int order, bool exp2 = false) {
    const double h1 = s.H1, h2 = s.thickness(2), h3 = s.thickness(3);
    const double q1 = 1.0 / (s.c1 * s.c1), q2 = 1.0 / (s.c2 * s.c2), q3 = 1.0 / (s.c3 * s.c3);
    const TrigJet t1 = trig_jet(W * q1 - K, h1);
    const TrigJet t2 = trig_jet(W * q2 - K, h2);
    const TrigJet t3 = trig_jet(W * q3 - K, h3);

    LocalJet J;
    for (auto& m : J.m) m.setZero();

    // f = value, d = s-derivative, dd = second s-derivative, q = 1/c^2.
    auto put = [&](int r, int c, cplx f, cplx d, cplx dd, double q, cplx factor) {
        J.m[0](r, c) += factor * f;
        if (order >= 1) {
            J.m[1](r, c) += factor * d * q;
            J.m[2](r, c) -= factor * d;
        }
        if (order >= 2) {
            J.m[3](r, c) += factor * dd * q * q;
            J.m[4](r, c) -= factor * dd * q;
            J.m[5](r, c) += factor * dd;
        }
    };

    const bool inf = eps.infinite;
    // Row 0: pressure at H1.  eps form: eps1 (rho2 u+ - rho1 u-) - u'(H1-0)
    if (inf) {
        put(0, 0, t1.cos, t1.d_cos, t1.dd_cos, q1, -s.rho1);
        J.m[0](0, 1) = s.rho2;
    } else {
        put(0, 0, t1.asin, t1.d_asin, t1.dd_asin, q1, 1.0);
        put(0, 0, t1.cos, t1.d_cos, t1.dd_cos, q1, -eps.eps1 * s.rho1);
        J.m[0](0, 1) = eps.eps1 * s.rho2;
    }
    // Row 1: slope at H1.
    put(1, 0, t1.asin, t1.d_asin, t1.dd_asin, q1, 1.0);
    J.m[0](1, 2) = 1.0;
    // Row 2: pressure at H2.
    if (inf) {
        put(2, 1, t2.cos, t2.d_cos, t2.dd_cos, q2, -s.rho2);
        put(2, 2, t2.sinc, t2.d_sinc, t2.dd_sinc, q2, -s.rho2);
        put(2, 3, t3.cos, t3.d_cos, t3.dd_cos, q3, s.rho3);
    } else {
        put(2, 1, t2.cos, t2.d_cos, t2.dd_cos, q2, -eps.eps2 * s.rho2);
        put(2, 2, t2.sinc, t2.d_sinc, t2.dd_sinc, q2, -eps.eps2 * s.rho2);
        put(2, 3, t3.cos, t3.d_cos, t3.dd_cos, q3, eps.eps2 * s.rho3);
        put(2, 3, t3.asin, t3.d_asin, t3.dd_asin, q3, -1.0);
    }
    // Row 3: slope at H2.
    put(3, 1, t2.asin, t2.d_asin, t2.dd_asin, q2, -1.0);
    put(3, 2, t2.cos, t2.d_cos, t2.dd_cos, q2, 1.0);
    put(3, 3, t3.asin, t3.d_asin, t3.dd_asin, q3, -1.0);
    if (!exp2) return J;

    // Columns 1, 2 in the two-sided exponential form of layer 2 (see modes):
    // amplitudes of exp(i alpha2 (y-H1)) and exp(i alpha2 (H2-y)).
    for (auto& m : J.m) m.col(1).setZero(), m.col(2).setZero();
    const cplx al = principal_sqrt(W * q2 - K);
    const cplx I(0.0, 1.0);
    const cplx a = I * al, da = I / (2.0 * al), dda = -I / (4.0 * al * al * al);
    const cplx E = std::exp(a * h2);
    const cplx dE = h2 * da * E, ddE = (h2 * dda + h2 * h2 * da * da) * E;
    const cplx aE = a * E, daE = da * E + a * dE, ddaE = dda * E + 2.0 * da * dE + a * ddE;
    const cplx e1 = inf ? cplx(1.0) : eps.eps1, e2 = inf ? cplx(1.0) : eps.eps2;
    J.m[0](0, 1) = e1 * s.rho2;
    put(0, 2, E, dE, ddE, q2, e1 * s.rho2);
    put(1, 1, a, da, dda, q2, 1.0);
    put(1, 2, aE, daE, ddaE, q2, -1.0);
    put(2, 1, E, dE, ddE, q2, -e2 * s.rho2);
    J.m[0](2, 2) = -e2 * s.rho2;
    put(3, 1, aE, daE, ddaE, q2, 1.0);
    put(3, 2, a, da, dda, q2, -1.0);
    return J;
}

// det(exponential form) = g * det(local form), g = -2 i alpha2 exp(i alpha2 h2),
// with its s2-derivatives.
struct Gauge {
    cplx g, d, dd;
};

Gauge gauge(cplx s2, double h2) {
    const cplx I(0.0, 1.0);
    const cplx al = principal_sqrt(s2);
    const cplx a = I * al, da = I / (2.0 * al), dda = -I / (4.0 * al * al * al);
    const cplx E = std::exp(a * h2);
    const cplx dE = h2 * da * E, ddE = (h2 * dda + h2 * h2 * da * da) * E;
    return {-2.0 * a * E, -2.0 * (da * E + a * dE), -2.0 * (dda * E + 2.0 * da * dE + a * ddE)};
}

bool use_exp2(cplx W, cplx K, const LayerStack& s) {
    return std::abs(alpha(W, K, 2, s)) * s.thickness(2) >= kExpBasisSwitch;
}

Matrix4 with_row(const Matrix4& base, int r, const Matrix4& src) {
    Matrix4 m = base;
    m.row(r) = src.row(r);
    return m;
}

Matrix4 with_rows(const Matrix4& base, int r1, const Matrix4& src1, int r2, const Matrix4& src2) {
    Matrix4 m = base;
    m.row(r1) = src1.row(r1);
    m.row(r2) = src2.row(r2);
    return m;
}

double row_norm_product(const Matrix4& m) {
    double p = 1.0;
    for (int r = 0; r < 4; ++r) p *= m.row(r).norm();
    return p;
}

// d/da d/db det via the multilinear expansion in rows.
cplx second_derivative(const Matrix4& m, const Matrix4& ma, const Matrix4& mb, const Matrix4& mab) {
    cplx sum{0.0};
    for (int i = 0; i < 4; ++i) sum += stable_det(with_row(m, i, mab));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i != j) sum += stable_det(with_rows(m, i, ma, j, mb));
        }
    }
    return sum;
}

cplx first_derivative(const Matrix4& m, const Matrix4& ma) {
    cplx sum{0.0};
    for (int i = 0; i < 4; ++i) sum += stable_det(with_row(m, i, ma));
    return sum;
}

}  // namespace

cplx stable_det(const Matrix4& m) {
    Matrix4 n = m;
    double scale = 1.0;
    for (int r = 0; r < 4; ++r) {
        const double rn = n.row(r).norm();
        if (rn == 0.0) return cplx{0.0};
        n.row(r) /= rn;
        scale *= rn;
    }
    return scale * n.partialPivLu().determinant();
}

Matrix4 local_matrix(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    return local_jet(W, K, eps, stack, 0).m[0];
}

namespace {

// Reduced determinant and partials up to `order`. When layer 2 is thick in
// phase the determinant is taken in the exponential form, which has no
// cancellation, and divided by the gauge factor.
DetPartials partials(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack, int order) {
    const bool exp2 = use_exp2(W, K, stack);
    const LocalJet J = local_jet(W, K, eps, stack, order, exp2);
    const Matrix4& m = J.m[0];
    DetPartials p;
    p.D = stable_det(m);
    if (order >= 1) {
        p.D_W = first_derivative(m, J.m[1]);
        p.D_K = first_derivative(m, J.m[2]);
    }
    if (order >= 2) {
        p.D_WW = second_derivative(m, J.m[1], J.m[1], J.m[3]);
        p.D_WK = second_derivative(m, J.m[1], J.m[2], J.m[4]);
        p.D_KK = second_derivative(m, J.m[2], J.m[2], J.m[5]);
    }
    p.scale = row_norm_product(m);
    if (order >= 1) {
        // a row that vanishes at its own factor's root keeps its K-slope size
        const double kk = 1.0 + std::abs(K);
        p.scale = 1.0;
        for (int i = 0; i < 4; ++i) p.scale *= std::hypot(m.row(i).norm(), kk * J.m[2].row(i).norm());
    }
    double sk = 0.0;
    if (order >= 1) {
        for (int i = 0; i < 4; ++i) {
            double t = J.m[2].row(i).norm();
            for (int j = 0; j < 4; ++j) {
                if (j != i) t *= m.row(j).norm();
            }
            sk += t;
        }
    }
    p.scale_K = sk;
    if (!exp2) return p;

    const double q2 = 1.0 / (stack.c2 * stack.c2);
    const Gauge G = gauge(W * q2 - K, stack.thickness(2));
    const cplx gW = q2 * G.d, gK = -G.d, gWW = q2 * q2 * G.dd, gWK = -q2 * G.dd, gKK = G.dd;
    DetPartials r;
    r.D = p.D / G.g;
    r.D_W = (p.D_W - r.D * gW) / G.g;
    r.D_K = (p.D_K - r.D * gK) / G.g;
    r.D_WW = (p.D_WW - 2.0 * r.D_W * gW - r.D * gWW) / G.g;
    r.D_WK = (p.D_WK - r.D_W * gK - r.D_K * gW - r.D * gWK) / G.g;
    r.D_KK = (p.D_KK - 2.0 * r.D_K * gK - r.D * gKK) / G.g;
    r.scale = p.scale / std::abs(G.g);
    r.scale_K = p.scale_K / std::abs(G.g);
    return r;
}

}  // namespace

cplx secular(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    return partials(W, K, eps, stack, 0).D;
}

double secular_residual(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    const DetPartials p = partials(W, K, eps, stack, 1);
    return p.scale > 0.0 ? std::abs(p.D) / p.scale : 0.0;
}

cplx det_D(cplx omega, cplx k, const LayerStack& stack) {
    const cplx W = omega * omega, K = k * k;
    return alpha(W, K, 2, stack) * secular(W, K, LinkingParams::infinity(), stack);
}

cplx det_D_eps(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    if (eps.infinite) return det_D(principal_sqrt(W), principal_sqrt(K), stack);
    return -alpha(W, K, 2, stack) * secular(W, K, eps, stack);
}

DetPartials det_partials(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    return partials(W, K, eps, stack, 2);
}

namespace {

struct FirstOrder {
    cplx D, D_W, D_K;
    double scale;
};

FirstOrder first_order(cplx W, cplx K, const LinkingParams& eps, const LayerStack& stack) {
    const DetPartials p = partials(W, K, eps, stack, 1);
    return {p.D, p.D_W, p.D_K, p.scale};
}

}  // namespace

RootResult newton_K(cplx W, cplx K0, const LinkingParams& eps, const LayerStack& stack, const NewtonOptions& opt) {
    RootResult r{K0, 0, false, 0.0};
    cplx K = K0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const FirstOrder f = first_order(W, K, eps, stack);
        if (f.D == 0.0) {
            r = {K, it, true, 0.0};
            return r;
        }
        if (f.D_K == 0.0 || !std::isfinite(std::abs(f.D_K))) return {K, it, false, 0.0};
        const cplx step = f.D / f.D_K;
        K -= step;
        if (!std::isfinite(std::abs(K))) return {K0, it, false, 0.0};
        if (std::abs(step) <= opt.step_tol * (1.0 + std::abs(K))) {
            r.K = K;
            r.iterations = it;
            r.residual = secular_residual(W, K, eps, stack);
            r.converged = r.residual < opt.residual_tol;
            return r;
        }
    }
    r.K = K;
    r.iterations = opt.max_iter;
    r.residual = secular_residual(W, K, eps, stack);
    return r;
}

namespace {

// Bracketed root of a real function by bisection followed by Newton polish.
template <class F>
double bisect(F&& f, double a, double b, double fa) {
    for (int i = 0; i < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
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

}  // namespace

std::vector<cplx> find_roots_at_reference(cplx omega0, double kappa_lo, double kappa_hi, int n_max,
                                          const LayerStack& stack, const RootScanOptions& opt) {
    if (!(omega0.imag() > 0.0)) throw Error(ErrorCode::OutOfRange, "reference frequency must have Im omega > 0");
    const LinkingParams inf = LinkingParams::infinity();
    const cplx W = omega0 * omega0;
    std::vector<cplx> roots;
    if (kappa_hi > kappa_lo && kappa_lo >= 0.0) {
        const int n = std::max(16, static_cast<int>(std::ceil((kappa_hi - kappa_lo) * opt.density)));
        const double dk = (kappa_hi - kappa_lo) / n;
        const bool real_line = omega0.real() == 0.0;
        auto f = [&](double kappa) { return secular(W, cplx(-kappa * kappa, 0.0), inf, stack); };
        std::vector<cplx> seeds;
        if (real_line) {
            auto fr = [&](double kappa) { return f(kappa).real(); };
            double prev = fr(kappa_lo);
            for (int i = 1; i <= n; ++i) {
                const double a = kappa_lo + (i - 1) * dk, b = kappa_lo + i * dk;
                const double cur = fr(b);
                if (prev == 0.0) {
                    seeds.emplace_back(-a * a, 0.0);
                } else if ((prev < 0.0) != (cur < 0.0) && cur != 0.0) {
                    const double x = bisect(fr, a, b, prev);
                    seeds.emplace_back(-x * x, 0.0);
                }
                prev = cur;
            }
        } else {
            std::vector<double> mag(n + 1);
            for (int i = 0; i <= n; ++i) {
                const double kap = kappa_lo + i * dk;
                mag[i] = secular_residual(W, -kap * kap, inf, stack);
            }
            for (int i = 1; i < n; ++i) {
                if (mag[i] <= mag[i - 1] && mag[i] < mag[i + 1]) {
                    const double kap = kappa_lo + i * dk;
                    seeds.emplace_back(-kap * kap, 0.0);
                }
            }
        }
        for (const cplx& s : seeds) {
            const RootResult r = newton_K(W, s, inf, stack, opt.newton);
            if (!r.converged) continue;
            const cplx k = wavenumber_from_K(r.K);
            bool dup = false;
            for (const cplx& q : roots) dup = dup || std::abs(q - k) < 1e-8 * (1.0 + std::abs(k));
            if (!dup) roots.push_back(k);
        }
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    if (static_cast<int>(roots.size()) < n_max) {
        throw Error(ErrorCode::RootCountShortfall, "found " + std::to_string(roots.size()) + " of " +
                                                       std::to_string(n_max) + " roots in the window");
    }
    roots.resize(n_max);
    return roots;
}

std::vector<double> propagating_roots(double omega, const LayerStack& stack, int samples) {
    const double W = omega * omega;
    const double Kmax = W / (stack.min_speed() * stack.min_speed());
    const LinkingParams inf = LinkingParams::infinity();
    auto f = [&](double K) { return secular(W, K, inf, stack).real(); };
    std::vector<double> out;
    const double dK = Kmax / samples;
    double prev = f(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double a = (i - 1) * dK, b = i * dK;
        const double cur = f(b);
        if (cur != 0.0 && prev != 0.0 && (prev < 0.0) != (cur < 0.0)) out.push_back(std::sqrt(bisect(f, a, b, prev)));
        prev = cur;
    }
    // a mode flat in the slowest layer sits exactly on the end of the scan
    const DetPartials end = partials(W, Kmax, inf, stack, 0);
    if (std::abs(end.D) <= 1e-12 * end.scale && (out.empty() || out.back() < std::sqrt(Kmax) * (1.0 - 1e-9))) {
        out.push_back(std::sqrt(Kmax));
    }
    return out;
}

std::string label_name(BranchLabel label) {
    switch (label) {
        case BranchLabel::Type1: return "Type1";
        case BranchLabel::Type2: return "Type2";
        case BranchLabel::Type3: return "Type3";
        case BranchLabel::Type23: return "Type2-3";
        case BranchLabel::Unclassified: return "unclassified";
    }
    return "unclassified";
}

cplx continue_root(cplx omega_from, cplx omega_to, cplx K, const LayerStack& stack, const ContinuationOptions& opt) {
    const LinkingParams inf = LinkingParams::infinity();
    cplx om = omega_from;
    cplx step = omega_to - omega_from;
    int level = 0;
    const double full = std::abs(step);
    while (std::abs(omega_to - om) > 1e-15 * (1.0 + std::abs(omega_to))) {
        cplx target = om + step;
        if (std::abs(target - om) >= std::abs(omega_to - om)) target = omega_to;
        const cplx W0 = om * om, W1 = target * target;
        const FirstOrder f = first_order(W0, K, inf, stack);
        const cplx pred = K - (W1 - W0) * f.D_W / f.D_K;
        const RootResult r = newton_K(W1, pred, inf, stack, opt.newton);
        const double allowed = opt.jump_ratio * std::abs(W1 - W0) + 1e-6 * (1.0 + std::abs(K));
        if (r.converged && std::isfinite(std::abs(pred)) && std::abs(r.K - pred) <= allowed) {
            om = target;
            K = r.K;
            if (level > 0 && std::abs(step) * 2.0 <= full * (1.0 + 1e-12)) {
                step *= 2.0;
                --level;
            }
        } else {
            if (++level > opt.max_halvings) {
                throw Error(ErrorCode::ContinuationStall, "step halving exhausted near omega = (" +
                                                              std::to_string(om.real()) + ", " +
                                                              std::to_string(om.imag()) + ")");
            }
            step *= 0.5;
        }
    }
    return K;
}

BranchTable continue_branches(const std::vector<std::pair<cplx, cplx>>& seeds, const std::vector<cplx>& contour,
                              const LayerStack& stack, const ContinuationOptions& opt) {
    if (contour.empty()) throw Error(ErrorCode::OutOfRange, "empty contour");
    const std::size_t nb = seeds.size(), nn = contour.size();
    BranchTable table;
    table.nodes = contour;
    table.K.assign(nb, std::vector<cplx>(nn));
    table.labels.assign(nb, BranchLabel::Unclassified);
    std::vector<std::exception_ptr> errors(nb);

    auto run = [&](std::size_t b) {
        try {
            const auto& [om0, k0] = seeds[b];
            if (std::abs(om0 - contour.front()) > 1e-12 * (1.0 + std::abs(om0))) {
                throw Error(ErrorCode::OutOfRange, "contour must start at the seed frequency");
            }
            cplx K = k0 * k0;
            const RootResult r = newton_K(om0 * om0, K, LinkingParams::infinity(), stack, opt.newton);
            if (!r.converged) throw Error(ErrorCode::ContinuationStall, "seed is not a root");
            K = r.K;
            table.K[b][0] = K;
            for (std::size_t j = 1; j < nn; ++j) {
                K = continue_root(contour[j - 1], contour[j], K, stack, opt);
                table.K[b][j] = K;
            }
        } catch (...) {
            errors[b] = std::current_exception();
        }
    };

    if (opt.policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long b = 0; b < static_cast<long>(nb); ++b) run(static_cast<std::size_t>(b));
    } else {
        for (std::size_t b = 0; b < nb; ++b) run(b);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t j = 0; j < nn; ++j) {
        for (std::size_t a = 0; a < nb; ++a) {
            for (std::size_t b = a + 1; b < nb; ++b) {
                const cplx Ka = table.K[a][j], Kb = table.K[b][j];
                if (std::abs(Ka - Kb) < 1e-9 * (1.0 + std::abs(Ka))) {
                    throw Error(ErrorCode::BranchCollision, "branches " + std::to_string(a) + " and " +
                                                                std::to_string(b) + " meet at node " +
                                                                std::to_string(j));
                }
            }
        }
    }
    return table;
}

std::vector<cplx> polyline_nodes(const std::vector<cplx>& vertices, double spacing) {
    if (vertices.empty()) return {};
    if (!(spacing > 0.0)) throw Error(ErrorCode::OutOfRange, "node spacing must be positive");
    std::vector<cplx> out{vertices.front()};
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        const cplx a = vertices[i - 1], b = vertices[i];
        const double len = std::abs(b - a);
        if (len == 0.0) continue;
        const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-9)));
        for (int j = 1; j <= n; ++j) out.push_back(a + (b - a) * (double(j) / n));
    }
    return out;
}

cplx dk_domega(const BranchTable& table, std::size_t branch, std::size_t node) {
    if (branch >= table.branch_count()) throw Error(ErrorCode::MissingBranch, "branch index");
    if (node == 0 || node + 1 >= table.node_count()) throw Error(ErrorCode::EdgeNode, "derivative needs an interior node");
    const cplx x0 = table.nodes[node - 1] * table.nodes[node - 1];
    const cplx x1 = table.nodes[node] * table.nodes[node];
    const cplx x2 = table.nodes[node + 1] * table.nodes[node + 1];
    const auto& K = table.K[branch];
    const cplx dKdW = K[node - 1] * (x1 - x2) / ((x0 - x1) * (x0 - x2)) +
                      K[node] * (2.0 * x1 - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
                      K[node + 1] * (x1 - x0) / ((x2 - x0) * (x2 - x1));
    const cplx k = table.k(branch, node);
    if (k == 0.0) throw Error(ErrorCode::Cutoff, "k = 0");
    return table.nodes[node] * dKdW / k;
}

double group_velocity_fd(const BranchTable& table, std::size_t branch, std::size_t node) {
    return (1.0 / dk_domega(table, branch, node)).real();
}

BranchLabel classify_branch(const std::vector<cplx>& omega, const std::vector<cplx>& K, const LayerStack& stack,
                            const ClassifyOptions& opt) {
    const std::size_t n = omega.size();
    if (n < 3 || K.size() != n) throw Error(ErrorCode::OutOfRange, "classification needs at least 3 samples");
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (omega[i] * omega[i]).real();
        y[i] = K[i].real();
    }
    const double hyp[3] = {std::log(1.0 / (stack.c1 * stack.c1)), std::log(1.0 / (stack.c2 * stack.c2)),
                           std::log(1.0 / (stack.c3 * stack.c3))};
    auto nearest = [&](double logslope) {
        int best = 0;
        for (int j = 1; j < 3; ++j) {
            if (std::abs(logslope - hyp[j]) < std::abs(logslope - hyp[best])) best = j;
        }
        return best;
    };

    // Local slopes: centred differences, one-sided at the ends.
    int zone_count[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
        const double sl = (y[b] - y[a]) / (x[b] - x[a]);
        if (sl != 0.0 && std::isfinite(sl)) ++zone_count[nearest(std::log(std::abs(sl)))];
    }
    const double f2 = double(zone_count[1]) / n, f3 = double(zone_count[2]) / n;
    if (f2 >= opt.mixed_fraction && f3 >= opt.mixed_fraction) return BranchLabel::Type23;

    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double g = sxy / sxx;
    if (!(g > 0.0)) throw Error(ErrorCode::Unclassified, "non-positive mean slope");
    const int j = nearest(std::log(g));
    if (std::abs(std::log(g) - hyp[j]) > opt.log_tolerance) {
        throw Error(ErrorCode::Unclassified, "slope " + std::to_string(g) + " fits no layer speed");
    }
    return j == 0 ? BranchLabel::Type1 : (j == 1 ? BranchLabel::Type2 : BranchLabel::Type3);
}

void write_branch_csv(const BranchTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << "re_omega,im_omega,branch_id,re_k,im_k,re_K,im_K,label\n";
    out << std::setprecision(17);
    for (std::size_t b = 0; b < table.branch_count(); ++b) {
        const std::string lab = label_name(table.labels[b]);
        for (std::size_t j = 0; j < table.node_count(); ++j) {
            const cplx om = table.nodes[j], k = table.k(b, j), K = table.K[b][j];
            out << om.real() << ',' << om.imag() << ',' << b << ',' << k.real() << ',' << k.imag() << ','
                << K.real() << ',' << K.imag() << ',' << lab << '\n';
        }
    }
}

}  // namespace wavedisp
