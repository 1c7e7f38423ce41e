#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wavedisp/dispersion.hpp"
#include "wavedisp/errors.hpp"

using namespace wavedisp;

namespace {

const LayerStack kRef = LayerStack::reference();

std::vector<std::pair<cplx, cplx>> samples(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<cplx, cplx>> out;
    for (int i = 0; i < n; ++i) {
        const cplx W(200.0 * u(rng), 40.0 * u(rng));
        const cplx K(300.0 * u(rng), 40.0 * u(rng));
        out.emplace_back(W, K);
    }
    return out;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Error against the Hadamard bound of M: the rounding scale of det M when
// evanescent layers make the expansion cancel.
double hadamard_rel(const Matrix4& M, cplx a, cplx b) {
    double bound = 1.0;
    for (int i = 0; i < 4; ++i) bound *= M.row(i).norm();
    return std::abs(a - b) / bound;
}

}  // namespace

TEST_SUITE("dispersion") {

TEST_CASE("local and global determinants are related by alpha2") {
    for (const auto& [W, K] : samples(50, 1)) {
        const Alphas a = principal_alphas(W, K, kRef);
        const Matrix4 F = full_matrix(a, kRef).entries;
        CHECK(hadamard_rel(F, F.determinant(), a.a2 * secular(W, K, LinkingParams::infinity(), kRef)) < 1e-12);
        const LinkingParams e = LinkingParams::finite(cplx(0.3, 0.1), cplx(2.0, -0.5));
        const Matrix4 C = combined_matrix(W, K, e, kRef).entries;
        CHECK(hadamard_rel(C, C.determinant(), -a.a2 * secular(W, K, e, kRef)) < 1e-12);
        CHECK(hadamard_rel(C, C.determinant(), det_D_eps(W, K, e, kRef)) < 1e-12);
    }
}

TEST_CASE("linked family is D0 + eps1 D1 + eps2 D2") {
    const cplx W(50.0, 3.0), K(20.0, -1.0);
    const cplx e1(0.7, 0.2), e2(-1.5, 0.4);
    const Matrix4 sum = linked_part(MatrixKind::D0, W, K, kRef).entries +
                        e1 * linked_part(MatrixKind::D1, W, K, kRef).entries +
                        e2 * linked_part(MatrixKind::D2, W, K, kRef).entries;
    const Matrix4 comb = combined_matrix(W, K, LinkingParams::finite(e1, e2), kRef).entries;
    CHECK((sum - comb).norm() < 1e-12 * comb.norm());
    CHECK(combined_matrix(W, K, LinkingParams::finite(e1, e2), kRef).provenance == MatrixKind::Combined);
}

TEST_CASE("decoupled determinant factorises") {
    for (const auto& [W, K] : samples(200, 2)) {
        const Alphas a = principal_alphas(W, K, kRef);
        const cplx expect = -a.a1 * a.a2 * a.a2 * a.a3 * std::sin(a.a1 * kRef.thickness(1)) *
                            std::sin(a.a2 * kRef.thickness(2)) * std::sin(a.a3 * kRef.thickness(3));
        CHECK(rel(det_D_eps(W, K, LinkingParams::finite(0.0, 0.0), kRef), expect) < 1e-10);
    }
}

TEST_CASE("large eps recovers the ideal interface") {
    const cplx W(120.0, 5.0), K(60.0, 2.0);
    const cplx ideal = det_D(std::sqrt(W), std::sqrt(K), kRef);
    double prev = 1e300;
    for (double e : {1e2, 1e4, 1e6}) {
        const cplx d = det_D_eps(W, K, LinkingParams::finite(e, e), kRef) / (e * e);
        const double err = rel(d, -ideal);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("sign of alpha: raw determinant odd in alpha2, even in alpha1 and alpha3") {
    for (const auto& [W, K] : samples(20, 3)) {
        const Alphas a = principal_alphas(W, K, kRef);
        const cplx d = full_matrix(a, kRef).entries.determinant();
        CHECK(rel(full_matrix(Alphas{-a.a1, a.a2, a.a3}, kRef).entries.determinant(), d) < 1e-10);
        CHECK(rel(full_matrix(Alphas{a.a1, a.a2, -a.a3}, kRef).entries.determinant(), d) < 1e-10);
        CHECK(rel(full_matrix(Alphas{a.a1, -a.a2, a.a3}, kRef).entries.determinant(), -d) < 1e-10);
    }
}

TEST_CASE("conjugation symmetry") {
    for (const auto& [W, K] : samples(20, 4)) {
        const LinkingParams e = LinkingParams::finite(0.5, 3.0);
        CHECK(rel(secular(std::conj(W), std::conj(K), e, kRef), std::conj(secular(W, K, e, kRef))) < 1e-12);
        CHECK(rel(secular(std::conj(W), std::conj(K), LinkingParams::infinity(), kRef),
                  std::conj(secular(W, K, LinkingParams::infinity(), kRef))) < 1e-12);
    }
}

TEST_CASE("analytic partials agree with finite differences") {
    for (const auto& eps : {LinkingParams::infinity(), LinkingParams::finite(cplx(0.4, 0.1), cplx(2.0, 0.0))}) {
        for (const auto& [W, K] : samples(10, 5)) {
            const DetPartials p = det_partials(W, K, eps, kRef);
            const cplx h = 1e-4 * (1.0 + std::abs(W) + std::abs(K)) * 1e-2;
            const DetPartials wp = det_partials(W + h, K, eps, kRef), wm = det_partials(W - h, K, eps, kRef);
            const DetPartials kp = det_partials(W, K + h, eps, kRef), km = det_partials(W, K - h, eps, kRef);
            auto close = [&](cplx fd, cplx an, cplx mag) { return std::abs(fd - an) < 1e-6 * std::abs(mag) + 1e-12 * p.scale; };
            const double mag1 = std::max(std::abs(p.D_W), std::abs(p.D_K));
            const double mag2 = std::max({std::abs(p.D_WW), std::abs(p.D_WK), std::abs(p.D_KK)});
            CHECK(close((wp.D - wm.D) / (2.0 * h), p.D_W, mag1));
            CHECK(close((kp.D - km.D) / (2.0 * h), p.D_K, mag1));
            CHECK(close((wp.D_W - wm.D_W) / (2.0 * h), p.D_WW, mag2));
            CHECK(close((kp.D_W - km.D_W) / (2.0 * h), p.D_WK, mag2));
            CHECK(close((kp.D_K - km.D_K) / (2.0 * h), p.D_KK, mag2));
            CHECK(std::abs(p.D - secular(W, K, eps, kRef)) <= 1e-12 * p.scale);
        }
    }
}

TEST_CASE("uniform medium: roots are the rigid-wall modes") {
    const double H = 2.6;
    const LayerStack u = LayerStack::uniform(1.0, 2.0, H, 1.0, 1.0);
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 8, u);
    REQUIRE(roots.size() == 8);
    for (int n = 0; n < 8; ++n) {
        const double q = n * std::numbers::pi / H;
        CHECK(roots[n].real() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(roots[n].imag() == doctest::Approx(std::sqrt(400.0 + q * q)).epsilon(1e-10));
    }
    const auto prop = propagating_roots(10.0, u);
    CHECK(prop.size() == static_cast<std::size_t>(std::floor(10.0 * H / std::numbers::pi)) + 1);
}

TEST_CASE("reference roots at omega = 20i") {
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 19, kRef);
    REQUIRE(roots.size() == 19);
    const double frozen[] = {6.6393, 9.1181, 11.8699, 12.2349, 13.0084, 14.2665, 15.7235, 17.1236, 18.6934, 20.0609,
                             20.4048, 20.5633, 21.4820, 22.0846, 22.8269, 23.8234, 24.5035, 25.6536, 26.4369};
    for (int i = 0; i < 19; ++i) {
        CHECK(roots[i].real() == doctest::Approx(0.0));
        CHECK(roots[i].imag() == doctest::Approx(frozen[i]).epsilon(1e-4));
    }
    try {
        (void)find_roots_at_reference(cplx(0.0, 20.0), 0.0, 10.0, 19, kRef);
        FAIL("expected shortfall");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RootCountShortfall);
    }
}

TEST_CASE("first cutoff of the reference stack") {
    // D(W, 0) changes sign at the first cutoff.
    double a = 1.5, b = 1.7;
    auto f = [](double w) { return secular(w * w, 0.0, LinkingParams::infinity(), kRef).real(); };
    REQUIRE((f(a) < 0) != (f(b) < 0));
    for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (a + b);
        ((f(m) < 0) == (f(a) < 0) ? a : b) = m;
    }
    CHECK(a == doctest::Approx(1.6253655868).epsilon(1e-9));
    CHECK(propagating_roots(33.0, kRef).size() == 19);
}

TEST_CASE("Newton on K polishes a perturbed root") {
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 3, kRef);
    const cplx W(-400.0, 0.0);
    const cplx K = roots[2] * roots[2];
    const RootResult r = newton_K(W, K * 1.001, LinkingParams::infinity(), kRef);
    CHECK(r.converged);
    CHECK(std::abs(r.K - K) < 1e-9 * std::abs(K));
}

TEST_CASE("continuation: serial and parallel tables are identical; reversal returns") {
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 19, kRef);
    std::vector<std::pair<cplx, cplx>> seeds;
    for (const cplx& k : roots) seeds.emplace_back(cplx(0.0, 20.0), k);
    const auto mesh = polyline_nodes({cplx(0.0, 20.0), cplx(0.0, 1.0), cplx(20.0, 1.0)}, 0.1);
    CHECK(mesh.front() == cplx(0.0, 20.0));
    CHECK(mesh.back() == cplx(20.0, 1.0));
    ContinuationOptions ser, par;
    ser.policy = ExecPolicy::Serial;
    par.policy = ExecPolicy::Parallel;
    const BranchTable a = continue_branches(seeds, mesh, kRef, ser);
    const BranchTable b = continue_branches(seeds, mesh, kRef, par);
    REQUIRE(a.branch_count() == 19);
    bool same = true;
    for (std::size_t i = 0; i < 19; ++i) {
        for (std::size_t j = 0; j < mesh.size(); ++j) same = same && a.K[i][j] == b.K[i][j];
    }
    CHECK(same);

    const cplx K0 = a.K[5].back();
    const cplx back = continue_root(mesh.back(), cplx(0.0, 1.0), K0, kRef);
    std::size_t corner = 0;
    while (mesh[corner] != cplx(0.0, 1.0)) ++corner;
    CHECK(std::abs(back - a.K[5][corner]) < 1e-8 * std::abs(back));
}

TEST_CASE("duplicated seeds collide") {
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 2, kRef);
    const std::vector<std::pair<cplx, cplx>> seeds{{cplx(0.0, 20.0), roots[0]}, {cplx(0.0, 20.0), roots[0]}};
    try {
        (void)continue_branches(seeds, polyline_nodes({cplx(0.0, 20.0), cplx(0.0, 19.0)}, 0.1), kRef);
        FAIL("expected collision");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BranchCollision);
    }
}

TEST_CASE("finite-difference group velocity in a uniform medium") {
    const double H = 2.6, c = 1.3;
    const LayerStack u = LayerStack::uniform(1.0, 2.0, H, c, 1.0);
    const auto roots = find_roots_at_reference(cplx(0.0, 20.0), 0.0, 40.0, 4, u);
    std::vector<std::pair<cplx, cplx>> seeds;
    for (const cplx& k : roots) seeds.emplace_back(cplx(0.0, 20.0), k);
    const auto mesh = polyline_nodes({cplx(0.0, 20.0), cplx(0.0, 0.0), cplx(10.0, 0.0)}, 0.05);
    const BranchTable t = continue_branches(seeds, mesh, u);
    for (std::size_t j = mesh.size() - 20; j + 1 < mesh.size(); ++j) {
        for (std::size_t b = 0; b < 4; ++b) {
            const double omega = mesh[j].real();
            const double k = t.k(b, j).real();
            REQUIRE(k > 0.0);
            CHECK(group_velocity_fd(t, b, j) == doctest::Approx(c * c * k / omega).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS((void)group_velocity_fd(t, 0, mesh.size() - 1), Error);
}

TEST_CASE("label names") {
    CHECK(label_name(BranchLabel::Type1) == "Type1");
    CHECK(label_name(BranchLabel::Type23) == "Type2-3");
    CHECK(label_name(BranchLabel::Unclassified) == "unclassified");
}

TEST_CASE("classification of straight lines") {
    // Synthetic branches with K = W / c^2 - q on a flat line.
    std::vector<cplx> om;
    for (int i = 0; i <= 100; ++i) om.emplace_back(3.0 + 0.2 * i, 1.0);
    auto line = [&](double c) {
        std::vector<cplx> K;
        for (const cplx& w : om) K.push_back(w * w / (c * c) - 30.0);
        return K;
    };
    CHECK(classify_branch(om, line(1.0), kRef) == BranchLabel::Type1);
    CHECK(classify_branch(om, line(1.7), kRef) == BranchLabel::Type2);
    CHECK(classify_branch(om, line(3.2), kRef) == BranchLabel::Type3);
    CHECK_THROWS_AS((void)classify_branch(om, line(20.0), kRef), Error);
}

}  // TEST_SUITE
