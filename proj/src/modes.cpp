#include "wavedisp/modes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "wavedisp/dispersion.hpp"
#include "wavedisp/errors.hpp"
#include "wavedisp/trig.hpp"

namespace wavedisp {

namespace {

const cplx kI(0.0, 1.0);

// Interface conditions in (A, Xlo, Xhi, F); columns A and F as in the local
// matrix.
Matrix4 exp_matrix(const ModeProfile& p) {
    const LayerStack& st = p.stack;
    const TrigJet j1 = trig_jet(p.s[0], st.thickness(1));
    const TrigJet j3 = trig_jet(p.s[2], st.thickness(3));
    const cplx a = p.alpha[1];
    const cplx E = std::exp(kI * a * st.thickness(2));
    Matrix4 m = Matrix4::Zero();
    if (p.eps.infinite) {
        m.row(0) << -st.rho1 * j1.cos, st.rho2, st.rho2 * E, 0.0;
        m.row(2) << 0.0, -st.rho2 * E, -st.rho2, st.rho3 * j3.cos;
    } else {
        const cplx e1 = p.eps.eps1, e2 = p.eps.eps2;
        m.row(0) << j1.asin - e1 * st.rho1 * j1.cos, e1 * st.rho2, e1 * st.rho2 * E, 0.0;
        m.row(2) << 0.0, -e2 * st.rho2 * E, -e2 * st.rho2, e2 * st.rho3 * j3.cos - j3.asin;
    }
    m.row(1) << j1.asin, kI * a, -kI * a * E, 0.0;
    m.row(3) << 0.0, kI * a * E, -kI * a, -j3.asin;
    return m;
}

// With a vanishing linking parameter the interface row reduces to
// alpha sin(alpha h) times one coefficient. At a root of that factor the row
// is rounding noise; it is dropped so row scaling cannot inflate it.
Matrix4 coefficient_matrix(const ModeProfile& p) {
    Matrix4 m = p.exp_basis ? exp_matrix(p) : local_matrix(p.W, p.K, p.eps, p.stack);
    if (p.eps.infinite) return m;
    auto negligible = [&](int layer) {
        const TrigJet j = trig_jet(p.s[layer - 1], p.stack.thickness(layer));
        return std::abs(j.asin) <= 1e-10 * std::abs(p.alpha[layer - 1]) * std::abs(j.cos);
    };
    if (p.eps.eps1 == 0.0 && negligible(1)) m.row(0).setZero();
    if (p.eps.eps2 == 0.0 && negligible(3)) m.row(2).setZero();
    return m;
}

Vector4 coefficient_vector(const ModeProfile& p) {
    Vector4 v;
    if (p.exp_basis) {
        v << p.A, p.Xlo, p.Xhi, p.F;
    } else {
        v << p.A, p.P, p.Q, p.F;
    }
    return v;
}

// Relative size of a + b against |a| + |b|: small when the sum cancels.
double conditioning(cplx a, cplx b) {
    const double m = std::abs(a) + std::abs(b);
    return m > 0.0 ? std::abs(a + b) / m : 0.0;
}

// Interfaces solved as a chain: layer 1 with A = 1 fixes (u, u') of layer 2
// at H1, layer 3 with F = 1 fixes them at H2. In the exponential basis each
// side gives the two amplitudes of layer 2 without cancellation; the ratio
// of the two scalings comes from whichever amplitude both sides resolve.
void solve_chain(ModeProfile& p) {
    const LayerStack& st = p.stack;
    const TrigJet j1 = trig_jet(p.s[0], st.thickness(1));
    const TrigJet j3 = trig_jet(p.s[2], st.thickness(3));
    cplx u0, u1;  // layer 2 value at H1 (A = 1) and at H2 (F = 1)
    if (p.eps.infinite) {
        u0 = st.rho1 * j1.cos / st.rho2;
        u1 = st.rho3 * j3.cos / st.rho2;
    } else {
        u0 = (p.eps.eps1 * st.rho1 * j1.cos - j1.asin) / (p.eps.eps1 * st.rho2);
        u1 = (p.eps.eps2 * st.rho3 * j3.cos - j3.asin) / (p.eps.eps2 * st.rho2);
    }
    const cplx v0 = -j1.asin, v1 = j3.asin;  // slopes at H1 (A = 1) and H2 (F = 1)
    if (!p.exp_basis) {
        // |alpha2| h2 is small: carry the bottom data across layer 2 directly.
        const TrigJet j2 = trig_jet(p.s[1], st.thickness(2));
        const cplx ub = u0 * j2.cos + v0 * j2.sinc, vb = -u0 * j2.asin + v0 * j2.cos;
        const double den = std::norm(ub) + std::norm(vb);
        const cplx lambda = (std::conj(ub) * u1 + std::conj(vb) * v1) / den;
        if (!(den > 0.0) || !std::isfinite(std::abs(lambda))) {
            throw Error(ErrorCode::SingularMinor, "coefficient block is rank deficient");
        }
        p.A = lambda;
        p.P = lambda * u0;
        p.Q = lambda * v0;
        return;
    }
    const cplx ia = kI * p.alpha[1];
    const cplx E = std::exp(ia * st.thickness(2));
    const cplx d0 = v0 / ia, d1 = v1 / ia;  // slopes over i alpha2
    // bottom: Xlo = p_b, Xhi E = m_b;  top: Xlo E = p_t, Xhi = m_t
    const cplx p_b = 0.5 * (u0 + d0), m_b = 0.5 * (u0 - d0);
    const cplx p_t = 0.5 * (u1 + d1), m_t = 0.5 * (u1 - d1);
    const double c_pb = conditioning(u0, d0), c_mb = conditioning(u0, -d0);
    const double c_pt = conditioning(u1, d1), c_mt = conditioning(u1, -d1);

    // lambda = A / F
    const double q_lo = std::min(c_pb, c_pt), q_hi = std::min(c_mb, c_mt);
    cplx lambda;
    if (q_lo >= q_hi && p_b != 0.0) {
        lambda = p_t / (E * p_b);
    } else if (m_b != 0.0) {
        lambda = m_t * E / m_b;
    } else {
        throw Error(ErrorCode::SingularMinor, "coefficient block is rank deficient");
    }
    if (!std::isfinite(std::abs(lambda))) {
        throw Error(ErrorCode::SingularMinor, "mode vanishes in layer 3; F = 1 normalisation impossible");
    }
    p.A = lambda;
    p.Xlo = c_pb >= c_pt ? lambda * p_b : p_t / E;
    p.Xhi = c_mt >= c_mb ? m_t : lambda * m_b / E;
}

// Least squares on the equilibrated interface matrix with one coefficient
// fixed; used when a linking parameter vanishes and the chain is cut.
void solve_svd(ModeProfile& p) {
    Matrix4 N = coefficient_matrix(p);
    for (int i = 0; i < 4; ++i) {
        const double r = N.row(i).norm();
        if (r > 0.0) N.row(i) /= r;
    }
    auto solve_fixed = [&](int fixed, Vector4& v) {
        using Mat43 = Eigen::Matrix<cplx, 4, 3>;
        Mat43 M;
        double colscale[3];
        int cols[3];
        for (int j = 0, c = 0; j < 4; ++j) {
            if (j == fixed) continue;
            cols[c] = j;
            colscale[c] = N.col(j).norm();
            if (colscale[c] == 0.0) return 0.0;
            M.col(c) = N.col(j) / colscale[c];
            ++c;
        }
        Eigen::JacobiSVD<Mat43> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const Eigen::Matrix<cplx, 3, 1> x = svd.solve(Vector4(-N.col(fixed)));
        v(fixed) = 1.0;
        for (int c = 0; c < 3; ++c) v(cols[c]) = x(c) / colscale[c];
        return sv(2) / sv(0);
    };
    Vector4 v;
    double cond = solve_fixed(3, v);
    if (!(cond > 1e-8)) {
        Vector4 va;
        const double ca = solve_fixed(0, va);
        if (ca > cond) {
            if (!(std::abs(va(3)) > 0.0) || !std::isfinite(std::abs(va(0) / va(3)))) {
                throw Error(ErrorCode::SingularMinor, "mode vanishes in layer 3; F = 1 normalisation impossible");
            }
            v = va / va(3);
            cond = ca;
        }
    }
    if (!(cond > 1e-13)) throw Error(ErrorCode::SingularMinor, "coefficient block is rank deficient");
    p.A = v(0);
    if (p.exp_basis) {
        p.Xlo = v(1);
        p.Xhi = v(2);
    } else {
        p.P = v(1);
        p.Q = v(2);
    }
}

}  // namespace

ModeProfile solve_coefficients_WK(cplx W, cplx K, const LayerStack& stack, const LinkingParams& eps) {
    ModeProfile p;
    p.W = W;
    p.K = K;
    p.omega = principal_sqrt(W);
    p.k = wavenumber_from_K(K);
    p.eps = eps;
    p.stack = stack;
    for (int j = 0; j < 3; ++j) {
        p.s[j] = alpha_squared(W, K, j + 1, stack);
        p.alpha[j] = principal_sqrt(p.s[j]);
    }
    p.exp_basis = std::abs(p.alpha[1]) * stack.thickness(2) >= kExpBasisSwitch;

    const cplx a2 = p.alpha[1];
    const bool chain = (eps.infinite || (eps.eps1 != 0.0 && eps.eps2 != 0.0));
    if (chain) {
        solve_chain(p);
    } else {
        solve_svd(p);
    }
    p.F = 1.0;
    if (p.exp_basis) {
        const cplx E = std::exp(kI * a2 * stack.thickness(2));
        p.P = p.Xlo + p.Xhi * E;
        p.Q = kI * a2 * (p.Xlo - p.Xhi * E);
    }

    // The chain meets every interface by construction; only the matching
    // ratio can be off, and then (W, K) is off the diagram.
    if (secular_residual(W, K, eps, stack) > 1e-8) {
        throw Error(ErrorCode::OutOfRange, "(W, K) is not on the dispersion diagram");
    }
    if (!chain && nullspace_residual(p) > 1e-6) {
        throw Error(ErrorCode::SingularMinor, "mode vanishes in layer 3; F = 1 normalisation impossible");
    }

    const double H1 = stack.H1;
    const cplx sn = std::sin(a2 * H1), cs = std::cos(a2 * H1);
    p.B = p.P * sn + p.Q * cs / a2;
    p.C = p.P * cs - p.Q * sn / a2;
    return p;
}

ModeProfile solve_coefficients(cplx omega, cplx k, const LayerStack& stack, const LinkingParams& eps) {
    ModeProfile p = solve_coefficients_WK(omega * omega, k * k, stack, eps);
    p.omega = omega;
    p.k = k;
    return p;
}

double nullspace_residual(const ModeProfile& p) {
    // Row-normalised, so each interface condition counts equally; within a row
    // the residual is relative to the terms it sums.
    Matrix4 N = coefficient_matrix(p);
    for (int i = 0; i < 4; ++i) {
        const double r = N.row(i).norm();
        if (r > 0.0) N.row(i) /= r;
    }
    const Vector4 v = coefficient_vector(p);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        double mag = 1e-12 * v.norm();  // coefficients at rounding level carry no signal
        for (int j = 0; j < 4; ++j) mag += std::abs(N(i, j) * v(j));
        if (mag > 0.0) worst = std::max(worst, std::abs((N.row(i) * v).value()) / mag);
    }
    return worst;
}

namespace {

int layer_for(const LayerStack& s, double y, Side side) {
    if (side == Side::Above) {
        if (y == s.H1) return 2;
        if (y == s.H2) return 3;
    }
    return s.layer_at(y);
}

}  // namespace

cplx eval_profile(const ModeProfile& p, double y, Side side) {
    const LayerStack& s = p.stack;
    switch (layer_for(s, y, side)) {
        case 1: return p.A * trig_jet(p.s[0], y).cos;
        case 2: {
            if (p.exp_basis) {
                const cplx ia = kI * p.alpha[1];
                return p.Xlo * std::exp(ia * (y - s.H1)) + p.Xhi * std::exp(ia * (s.H2 - y));
            }
            const TrigJet t = trig_jet(p.s[1], y - s.H1);
            return p.P * t.cos + p.Q * t.sinc;
        }
        default: return p.F * trig_jet(p.s[2], s.H3 - y).cos;
    }
}

cplx eval_derivative(const ModeProfile& p, double y, Side side) {
    const LayerStack& s = p.stack;
    switch (layer_for(s, y, side)) {
        case 1: return -p.A * trig_jet(p.s[0], y).asin;
        case 2: {
            if (p.exp_basis) {
                const cplx ia = kI * p.alpha[1];
                return ia * (p.Xlo * std::exp(ia * (y - s.H1)) - p.Xhi * std::exp(ia * (s.H2 - y)));
            }
            const TrigJet t = trig_jet(p.s[1], y - s.H1);
            return -p.P * t.asin + p.Q * t.cos;
        }
        default: return p.F * trig_jet(p.s[2], s.H3 - y).asin;
    }
}

cplx layer_product_integral(cplx pf, cplx qf, cplx sf, cplx pg, cplx qg, cplx sg, double L) {
    const double L2 = L * L;
    if (std::abs(sg - sf) * L2 >= 1.0) {
        // Lagrange identity: (f'g - fg')' = (sg - sf) f g.
        const TrigJet a = trig_jet(sf, L), b = trig_jet(sg, L);
        const cplx f = pf * a.cos + qf * a.sinc, df = -pf * a.asin + qf * a.cos;
        const cplx g = pg * b.cos + qg * b.sinc, dg = -pg * b.asin + qg * b.cos;
        const cplx boundary = (df * g - f * dg) - (qf * pg - pf * qg);
        return boundary / (sg - sf);
    }
    if (std::max(std::abs(sf), std::abs(sg)) * L2 <= 2.25) {
        // Both factors are short power series in u = t / L.
        constexpr int kDeg = 48;
        std::array<cplx, kDeg> F{}, G{};
        const cplx xf = -sf * L2, xg = -sg * L2;
        cplx powf{1.0}, powg{1.0};
        double fact = 1.0;  // m!
        for (int m = 0; m < kDeg; ++m) {
            if (m > 0) fact *= m;
            if (m % 2 == 0) {
                F[m] = pf * powf / fact;
                G[m] = pg * powg / fact;
            } else {
                F[m] = qf * L * powf / fact;
                G[m] = qg * L * powg / fact;
                powf *= xf;
                powg *= xg;
            }
        }
        cplx sum{0.0};
        for (int m = 0; m < kDeg; ++m) {
            for (int n = 0; n < kDeg; ++n) sum += F[m] * G[n] / double(m + n + 1);
        }
        return L * sum;
    }
    // Sum and difference frequencies; both |a| L and |b| L exceed 1 here.
    const cplx a = principal_sqrt(sf), b = principal_sqrt(sg);
    const cplx d = a - b, t = a + b;
    const cplx Sd = trig_jet(d * d, L).sinc, St = trig_jet(t * t, L).sinc;
    const cplx Gd = versine_ratio(d * d, L), Gt = versine_ratio(t * t, L);
    const cplx I_cc = 0.5 * (Sd + St);
    const cplx I_sc = (t * Gt + d * Gd) / (2.0 * a);
    const cplx I_cs = (t * Gt - d * Gd) / (2.0 * b);
    const cplx I_ss = (Sd - St) / (2.0 * a * b);
    return pf * pg * I_cc + qf * pg * I_sc + pf * qg * I_cs + qf * qg * I_ss;
}

namespace {

// (e^z - 1) / z
cplx phi1(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx term = 1.0, sum = 1.0;
        for (int n = 2; n < 20; ++n) {
            term *= z / double(n);
            sum += term;
        }
        return sum;
    }
    return (std::exp(z) - 1.0) / z;
}

// Integral over layer 2 of f g, f taken conjugated when asked. Distinct
// alpha^2 use the Lagrange identity with interface values, which each profile
// evaluates stably; close ones use the exponential closed form (or the
// (P, Q) forms when layer 2 is thin in phase).
cplx layer2_integral(const ModeProfile& f, const ModeProfile& g, bool conjugate_first) {
    const LayerStack& st = f.stack;
    const double h = st.thickness(2);
    auto cj = [&](cplx z) { return conjugate_first ? std::conj(z) : z; };
    const cplx sf = cj(f.s[1]), sg = g.s[1];
    if (std::abs(sg - sf) * h * h >= 1.0) {
        const cplx f0 = cj(eval_profile(f, st.H1, Side::Above)), df0 = cj(eval_derivative(f, st.H1, Side::Above));
        const cplx f1 = cj(eval_profile(f, st.H2)), df1 = cj(eval_derivative(f, st.H2));
        const cplx g0 = eval_profile(g, st.H1, Side::Above), dg0 = eval_derivative(g, st.H1, Side::Above);
        const cplx g1 = eval_profile(g, st.H2), dg1 = eval_derivative(g, st.H2);
        return ((df1 * g1 - f1 * dg1) - (df0 * g0 - f0 * dg0)) / (sg - sf);
    }
    if (f.exp_basis && g.exp_basis) {
        // f = X1 e^{i a t} + X2 e^{i a (h-t)}; the conjugate has a -> -conj(a).
        const cplx a = conjugate_first ? -std::conj(f.alpha[1]) : f.alpha[1], b = g.alpha[1];
        const cplx X1 = cj(f.Xlo), X2 = cj(f.Xhi), Y1 = g.Xlo, Y2 = g.Xhi;
        const cplx same = h * phi1(kI * (a + b) * h);
        const cplx I12 = std::exp(kI * b * h) * h * phi1(kI * (a - b) * h);  // e^{iat} e^{ib(h-t)}
        const cplx I21 = std::exp(kI * a * h) * h * phi1(kI * (b - a) * h);  // e^{ia(h-t)} e^{ibt}
        return (X1 * Y1 + X2 * Y2) * same + X1 * Y2 * I12 + X2 * Y1 * I21;
    }
    return layer_product_integral(cj(f.P), cj(f.Q), sf, g.P, g.Q, sg, h);
}

cplx weighted_integral(const ModeProfile& p1, const ModeProfile& p2, Weight weight, bool conjugate_first) {
    const LayerStack& s = p1.stack;
    auto cj = [&](cplx z) { return conjugate_first ? std::conj(z) : z; };
    auto w = [&](int j) {
        const double c = s.speed(j);
        return weight == Weight::Rho ? s.density(j) : s.density(j) / (c * c);
    };
    cplx total = w(1) * layer_product_integral(cj(p1.A), 0.0, cj(p1.s[0]), p2.A, 0.0, p2.s[0], s.thickness(1));
    total += w(2) * layer2_integral(p1, p2, conjugate_first);
    total += w(3) * layer_product_integral(cj(p1.F), 0.0, cj(p1.s[2]), p2.F, 0.0, p2.s[2], s.thickness(3));
    return total;
}

}  // namespace

cplx inner_product(const ModeProfile& p1, const ModeProfile& p2, Weight weight) {
    return weighted_integral(p1, p2, weight, false);
}

double energy_norm(const ModeProfile& p) { return weighted_integral(p, p, Weight::Rho, true).real(); }

namespace {

double energy_norm_c2(const ModeProfile& p) { return weighted_integral(p, p, Weight::RhoOverC2, true).real(); }

}  // namespace

cplx amplitude_P(const ModeProfile& p, double y0) {
    if (p.k == 0.0) throw Error(ErrorCode::Cutoff, "k = 0");
    const cplx norm = inner_product(p, p, Weight::Rho);
    if (std::abs(norm) < 1e-10 * energy_norm(p)) {
        throw Error(ErrorCode::ZeroNorm, "<U,U> vanishes: the mode sits at a branch point");
    }
    const double rho0 = p.stack.density(p.stack.layer_at(y0));
    return rho0 * eval_profile(p, y0) / (2.0 * cplx(0.0, 1.0) * p.k * norm);
}

cplx bilinear_S(const ModeProfile& p1, const ModeProfile& p2) {
    const LayerStack& s = p1.stack;
    const double H1 = s.H1, H2 = s.H2;
    auto jump1 = [&](const ModeProfile& p) {  // rho2 u(H1+0) - rho1 u(H1-0)
        return s.rho2 * eval_profile(p, H1, Side::Above) - s.rho1 * eval_profile(p, H1, Side::Below);
    };
    auto jump2 = [&](const ModeProfile& p) {  // rho3 u(H2+0) - rho2 u(H2-0)
        return s.rho3 * eval_profile(p, H2, Side::Above) - s.rho2 * eval_profile(p, H2, Side::Below);
    };
    return -eval_derivative(p1, H1) * jump1(p2) + eval_derivative(p2, H1) * jump1(p1) -
           eval_derivative(p1, H2, Side::Above) * jump2(p2) + eval_derivative(p2, H2, Side::Above) * jump2(p1);
}

cplx bilinear_S_finite(const ModeProfile& p1, const ModeProfile& p2) {
    const LayerStack& s = p1.stack;
    if (p1.eps.infinite || p2.eps.infinite) throw Error(ErrorCode::OutOfRange, "finite eps required");
    const cplx e1 = 1.0 / p1.eps.eps1 - 1.0 / p2.eps.eps1;
    const cplx e2 = 1.0 / p1.eps.eps2 - 1.0 / p2.eps.eps2;
    return e1 * eval_derivative(p1, s.H1) * eval_derivative(p2, s.H1) +
           e2 * eval_derivative(p1, s.H2, Side::Above) * eval_derivative(p2, s.H2, Side::Above);
}

cplx bilinear_S_decoupled(const ModeProfile& p1, const ModeProfile& p2) {
    const LayerStack& s = p1.stack;
    if (p2.eps.infinite) throw Error(ErrorCode::OutOfRange, "finite eps required for the second mode");
    auto jump1 = [&](const ModeProfile& p) {
        return s.rho2 * eval_profile(p, s.H1, Side::Above) - s.rho1 * eval_profile(p, s.H1, Side::Below);
    };
    auto jump2 = [&](const ModeProfile& p) {
        return s.rho3 * eval_profile(p, s.H2, Side::Above) - s.rho2 * eval_profile(p, s.H2, Side::Below);
    };
    return p2.eps.eps1 * jump1(p2) * jump1(p1) + p2.eps.eps2 * jump2(p2) * jump2(p1);
}

double bilinear_identity_residual(const ModeProfile& p1, const ModeProfile& p2) {
    const cplx S = bilinear_S(p1, p2);
    const cplx Ic = inner_product(p1, p2, Weight::RhoOverC2);
    const cplx Ir = inner_product(p1, p2, Weight::Rho);
    const cplx dW = p1.W - p2.W, dK = p1.K - p2.K;
    const cplx r = S + dW * Ic - dK * Ir;
    const double scale = std::abs(S) + std::abs(dW) * std::sqrt(energy_norm_c2(p1) * energy_norm_c2(p2)) +
                         std::abs(dK) * std::sqrt(energy_norm(p1) * energy_norm(p2));
    return scale > 0.0 ? std::abs(r) / scale : 0.0;
}

double group_velocity_bilinear(const ModeProfile& p) {
    if (!p.eps.infinite) throw Error(ErrorCode::OutOfRange, "group velocity needs ideal interfaces");
    if (p.k == 0.0) throw Error(ErrorCode::Cutoff, "k = 0");
    const cplx num = inner_product(p, p, Weight::Rho);
    const cplx den = inner_product(p, p, Weight::RhoOverC2);
    return (p.k / p.omega * num / den).real();
}

void write_profile_csv(const ModeProfile& p, int samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
    out << "y,re_u,im_u\n" << std::setprecision(17);
    for (int i = 0; i <= samples; ++i) {
        const double y = p.stack.H3 * i / samples;
        const cplx u = eval_profile(p, y);
        out << y << ',' << u.real() << ',' << u.imag() << '\n';
    }
}

}  // namespace wavedisp
