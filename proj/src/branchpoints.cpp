#include "wavedisp/branchpoints.hpp"

#include <cmath>
#include <exception>
#include <numbers>

namespace wavedisp {

namespace {

constexpr double kPi = std::numbers::pi;

double sigma(int j) { return j == 0 ? 2.0 : 1.0; }
double parity(int j) { return (j % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

BranchPointId BranchPointId::make(int mu, int nu, int m, int n) {
    if (mu < 1 || mu > 3 || nu < 1 || nu > 3) throw Error(ErrorCode::InvalidId, "family indices must be 1, 2 or 3");
    if (mu == nu) throw Error(ErrorCode::InvalidId, "families must differ");
    if (m < 0 || n < 0) throw Error(ErrorCode::InvalidId, "branch indices must be non-negative");
    if (m == 0 && n == 0) throw Error(ErrorCode::InvalidId, "m = n = 0 is not traced");
    if (mu > nu) return {nu, mu, n, m};
    return {mu, nu, m, n};
}

std::string BranchPointId::str() const {
    return "(" + std::to_string(mu) + "," + std::to_string(nu) + "," + std::to_string(m) + "," + std::to_string(n) + ")";
}

std::pair<double, double> crossing_point(const BranchPointId& id, const LayerStack& s) {
    const double cm = s.speed(id.mu), cn = s.speed(id.nu);
    if (cm == cn) throw Error(ErrorCode::DegenerateSpeeds, "c_mu == c_nu");
    const double hm = s.thickness(id.mu), hn = s.thickness(id.nu);
    const double m2 = double(id.m) * id.m, n2 = double(id.n) * id.n;
    const double W = kPi * kPi * (m2 / (hm * hm) - n2 / (hn * hn)) / (1.0 / (cm * cm) - 1.0 / (cn * cn));
    const double K = kPi * kPi * (m2 * cm * cm / (hm * hm) - n2 * cn * cn / (hn * hn)) / (cn * cn - cm * cm);
    return {W, K};
}

std::array<PerturbSeed, 2> perturb_seed_case1(const BranchPointId& id, double eps, const LayerStack& s) {
    if (id.is_case2()) throw Error(ErrorCode::InvalidId, "case-1 seeds need neighbouring layers");
    const auto [W0, K0] = crossing_point(id, s);
    const double ci = s.speed(id.mu), cj = s.speed(id.nu);
    const double ci2 = ci * ci, cj2 = cj * cj;
    const double g1 = s.density(id.mu) / (sigma(id.m) * s.thickness(id.mu));
    const double g2 = s.density(id.nu) / (sigma(id.n) * s.thickness(id.nu));
    const double sg = parity(id.m + id.n);
    const cplx I(0.0, 1.0);
    std::array<PerturbSeed, 2> out{};
    for (int k = 0; k < 2; ++k) {
        const double pm = k == 0 ? 1.0 : -1.0;
        const cplx root = std::sqrt(g1) - pm * sg * I * std::sqrt(g2);
        const cplx W1 = 2.0 * root * root / (1.0 / ci2 - 1.0 / cj2);
        const cplx K1 = 2.0 * (g1 * ci2 - g2 * cj2 - pm * I * sg * std::sqrt(g1 * g2) * (ci2 + cj2)) / (cj2 - ci2);
        out[k] = {W0 + eps * W1, K0 + eps * K1, W1, K1, 0.0, 0.0};
    }
    return out;
}

std::array<PerturbSeed, 2> perturb_seed_case2(const BranchPointId& id, double eps, const LayerStack& s,
                                              K2Variant variant) {
    if (!id.is_case2()) throw Error(ErrorCode::InvalidId, "case-2 seeds are for the (1,3) pair");
    const auto [W0, K0] = crossing_point(id, s);
    const int m = id.m, n = id.n;
    const double c1 = s.c1, c3 = s.c3, c12 = c1 * c1, c32 = c3 * c3;
    const double r1 = s.rho1, r2 = s.rho2, r3 = s.rho3;
    const double g1 = r1 / (sigma(m) * s.H1);
    const double g3 = r3 / (sigma(n) * s.thickness(3));
    const double W1 = 2.0 * (g1 - g3) / (1.0 / c12 - 1.0 / c32);
    const double K1 = 2.0 * (g1 * c12 - g3 * c32) / (c32 - c12);

    const cplx a2 = principal_sqrt(cplx(W0 / (s.c2 * s.c2) - K0, 0.0));
    const double h2 = s.thickness(2);
    // alpha2 sin(alpha2 h2) is even in alpha2 and real for real arguments.
    const cplx den = a2 * std::sin(a2 * h2);
    if (std::abs(std::sin(a2 * h2)) < 1e-10) throw Error(ErrorCode::ResonantMiddleLayer, "sin(alpha2 h2) vanishes");
    const cplx ct = 2.0 * r2 * std::cos(a2 * h2);
    const double fac = variant == K2Variant::AsPrinted ? c1 * c1 * c1 + c32 : c12 + c32;

    double A = 0.0, B = 0.0, sg = 0.0;
    const double pi2 = kPi * kPi;
    if (m > 0 && n > 0) {
        A = (r3 * r3 / (n * n) - r1 * r1 / (m * m)) / pi2;
        B = (c12 * r1 * r1 / (m * m) - c32 * r3 * r3 / (n * n)) / pi2;
        sg = parity(m + n);
    } else if (m == 0) {
        A = r3 * r3 / (pi2 * n * n) - r1 * r1 / 3.0;
        B = c12 * r1 * r1 / 3.0 - c32 * r3 * r3 / (pi2 * n * n);
        sg = parity(n);
    } else {
        // n = 0: mirror image of the m = 0 case (layers 1 and 3 swap roles).
        A = r3 * r3 / 3.0 - r1 * r1 / (pi2 * m * m);
        B = c12 * r1 * r1 / (pi2 * m * m) - c32 * r3 * r3 / 3.0;
        sg = parity(m);
    }

    const cplx I(0.0, 1.0);
    const double sq = std::sqrt(g1 * g3);
    std::array<PerturbSeed, 2> out{};
    for (int k = 0; k < 2; ++k) {
        const double pm = k == 0 ? 1.0 : -1.0;
        const cplx W2 = (A + ct * (g1 - g3) / den + pm * 4.0 * I * parity(m + n) * r2 * sq / den) /
                        (1.0 / c12 - 1.0 / c32);
        const cplx K2 = (B + ct * (g3 * c32 - g1 * c12) / den - pm * 2.0 * I * sg * r2 * fac * sq / den) / (c12 - c32);
        out[k] = {W0 + eps * W1 + eps * eps * W2, K0 + eps * K1 + eps * eps * K2, W1, K1, W2, K2};
    }
    return out;
}

BranchPointSolution newton_branch_point(cplx W0, cplx K0, const LinkingParams& eps, const LayerStack& stack,
                                        const BranchNewtonOptions& opt) {
    cplx W = W0, K = K0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const DetPartials p = det_partials(W, K, eps, stack);
        const cplx det = p.D_W * p.D_KK - p.D_K * p.D_WK;
        const double qscale = (std::abs(p.D_W) + std::abs(p.D_K)) * (std::abs(p.D_WK) + std::abs(p.D_KK));
        if (!(std::abs(det) > opt.singular_tol * qscale)) {
            throw Error(ErrorCode::SingularJacobian, "Jacobian of (D, D_K) is singular");
        }
        // Q [dW dK]^T = -[D D_K]^T
        const cplx dW = (-p.D * p.D_KK + p.D_K * p.D_K) / det;
        const cplx dK = (-p.D_W * p.D_K + p.D_WK * p.D) / det;
        W += dW;
        K += dK;
        if (!std::isfinite(std::abs(W)) || !std::isfinite(std::abs(K))) {
            throw Error(ErrorCode::NoConvergence, "Newton iterate diverged");
        }
        if (std::abs(dW) <= opt.step_tol * (1.0 + std::abs(W)) && std::abs(dK) <= opt.step_tol * (1.0 + std::abs(K))) {
            const DetPartials q = det_partials(W, K, eps, stack);
            BranchPointSolution sol{W, K, it, std::abs(q.D) / q.scale, std::abs(q.D_K) / q.scale_K};
            if (sol.residual_D < opt.residual_tol && sol.residual_DK < opt.residual_tol) return sol;
            throw Error(ErrorCode::NoConvergence, "steps stalled above the residual tolerance");
        }
    }
    throw Error(ErrorCode::NoConvergence, "iteration cap reached");
}

std::vector<std::pair<double, double>> eps_path(const BranchPointId& id, const PathSpec& spec) {
    if (!(spec.eps0 > 0.0 && spec.E > spec.eps0 && spec.nodes >= 2)) {
        throw Error(ErrorCode::OutOfRange, "path needs 0 < eps0 < E and at least two nodes");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(spec.nodes);
    const double r = std::log(spec.E / spec.eps0);
    for (int i = 0; i < spec.nodes; ++i) {
        const double e = i + 1 == spec.nodes ? spec.E : spec.eps0 * std::exp(r * i / (spec.nodes - 1));
        if (id.mu == 1 && id.nu == 2) out.emplace_back(e, e - spec.eps0);
        else if (id.mu == 2 && id.nu == 3) out.emplace_back(e - spec.eps0, e);
        else if (spec.offset_case2) out.emplace_back(e, std::max(spec.eps0, e - spec.eps0));
        else out.emplace_back(e, e);
    }
    return out;
}

namespace {

LinkingParams at(const std::pair<double, double>& e) { return LinkingParams::finite(e.first, e.second); }

// Solve at path point b starting from the solution at a, splitting [a, b]
// in log-eps on failure.
std::pair<cplx, cplx> advance(const std::pair<double, double>& a, const std::pair<double, double>& b,
                              std::pair<cplx, cplx> x, const LayerStack& stack, int depth, int max_depth) {
    try {
        const BranchPointSolution s = newton_branch_point(x.first, x.second, at(b), stack);
        if (std::abs(s.W - x.first) <= 5.0 + 0.5 * std::abs(x.first)) return {s.W, s.K};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConvergence && e.code() != ErrorCode::SingularJacobian) throw;
    }
    if (depth >= max_depth) throw Error(ErrorCode::TraceFailed, "refinement exhausted");
    auto geo = [](double u, double v) { return (u > 0.0 && v > 0.0) ? std::sqrt(u * v) : 0.5 * (u + v); };
    const std::pair<double, double> mid{geo(a.first, b.first), geo(a.second, b.second)};
    x = advance(a, mid, x, stack, depth + 1, max_depth);
    return advance(mid, b, x, stack, depth + 1, max_depth);
}

}  // namespace

BranchPointRecord trace_branch_point(const BranchPointId& id, const PathSpec& spec, int sign, const LayerStack& stack) {
    if (sign != 1 && sign != -1) throw Error(ErrorCode::OutOfRange, "sign must be +1 or -1");
    BranchPointRecord rec;
    rec.id = id;
    rec.sign = sign;
    rec.path = eps_path(id, spec);
    const auto seeds = id.is_case2() ? perturb_seed_case2(id, spec.eps0, stack, spec.variant)
                                     : perturb_seed_case1(id, spec.eps0, stack);

    // Polish both members at the first node and keep the one in the requested half plane.
    const LinkingParams first = at(rec.path.front());
    int chosen = -1;
    std::pair<cplx, cplx> x;
    try {
        for (int k = 0; k < 2; ++k) {
            const BranchPointSolution s = newton_branch_point(seeds[k].W, seeds[k].K, first, stack);
            if ((s.W.imag() > 0.0) == (sign > 0) && s.W.imag() != 0.0) {
                chosen = k;
                x = {s.W, s.K};
                break;
            }
        }
    } catch (const Error& e) {
        throw TraceFailure(std::string("seed polish failed: ") + e.what(), rec);
    }
    if (chosen < 0) throw TraceFailure("no seed in the requested half plane", rec);
    rec.seed = seeds[chosen];
    rec.trajectory.push_back(x);

    for (std::size_t i = 1; i < rec.path.size(); ++i) {
        try {
            x = advance(rec.path[i - 1], rec.path[i], x, stack, 0, spec.max_refine);
        } catch (const Error& e) {
            throw TraceFailure("trace stopped after node " + std::to_string(i - 1) + ": " + e.what(), rec);
        }
        rec.trajectory.push_back(x);
    }
    try {
        const BranchPointSolution s = newton_branch_point(x.first, x.second, LinkingParams::infinity(), stack);
        rec.final_point = {s.W, s.K};
    } catch (const Error& e) {
        throw TraceFailure(std::string("final solve failed: ") + e.what(), rec);
    }
    rec.complete = true;
    return rec;
}

std::vector<TraceOutcome> trace_many(const std::vector<BranchPointId>& ids, const PathSpec& spec, int sign,
                                     const LayerStack& stack, ExecPolicy policy) {
    std::vector<TraceOutcome> out(ids.size());
    auto run = [&](std::size_t i) {
        try {
            out[i].record = trace_branch_point(ids[i], spec, sign, stack);
            out[i].ok = true;
        } catch (const TraceFailure& e) {
            out[i].record = e.partial();
            out[i].error = e.what();
        } catch (const std::exception& e) {
            out[i].record.id = ids[i];
            out[i].error = e.what();
        }
    };
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < static_cast<long>(ids.size()); ++i) run(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < ids.size(); ++i) run(i);
    }
    return out;
}

std::vector<BranchPointId> ids_in_band(double w_max, double k_min, const LayerStack& stack) {
    std::vector<BranchPointId> out;
    const int pairs[3][2] = {{1, 2}, {2, 3}, {1, 3}};
    for (const auto& pr : pairs) {
        const int mu = pr[0], nu = pr[1];
        // Neumann branch j of family f has K <= W/c_f^2 - (pi j / h_f)^2,
        // so K0 > k_min bounds both indices.
        auto jmax = [&](int f) {
            const double c = stack.speed(f), h = stack.thickness(f);
            const double top = w_max / (c * c) - k_min;
            return top > 0.0 ? static_cast<int>(std::floor(h * std::sqrt(top) / kPi)) : 0;
        };
        for (int m = 0; m <= jmax(mu); ++m) {
            for (int n = 0; n <= jmax(nu); ++n) {
                if (m == 0 && n == 0) continue;
                const BranchPointId id{mu, nu, m, n};
                const auto [W0, K0] = crossing_point(id, stack);
                if (W0 > 0.0 && W0 <= w_max && K0 > k_min) out.push_back(id);
            }
        }
    }
    return out;
}

}  // namespace wavedisp
