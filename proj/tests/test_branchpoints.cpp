#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavedisp/branchpoints.hpp"

using namespace wavedisp;

namespace {

const LayerStack kRef = LayerStack::reference();

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidConfig;
}

double neumann_K(double W, int f, int j) {
    const double c = kRef.speed(f), q = j * std::numbers::pi / kRef.thickness(f);
    return W / (c * c) - q * q;
}

}  // namespace

TEST_SUITE("branchpoints") {

TEST_CASE("ids are validated and canonicalised") {
    const BranchPointId a = BranchPointId::make(3, 2, 0, 2);
    CHECK(a == BranchPointId{2, 3, 2, 0});
    CHECK(a.str() == "(2,3,2,0)");
    CHECK(BranchPointId::make(1, 3, 1, 1).is_case2());
    CHECK(code_of([] { (void)BranchPointId::make(2, 2, 1, 1); }) == ErrorCode::InvalidId);
    CHECK(code_of([] { (void)BranchPointId::make(1, 2, 0, 0); }) == ErrorCode::InvalidId);
    CHECK(code_of([] { (void)BranchPointId::make(1, 4, 1, 0); }) == ErrorCode::InvalidId);
    CHECK(code_of([] { (void)BranchPointId::make(1, 2, -1, 0); }) == ErrorCode::InvalidId);
}

TEST_CASE("crossing point lies on both Neumann lines") {
    for (const auto id : {BranchPointId{2, 3, 1, 0}, BranchPointId{2, 3, 3, 0}, BranchPointId{1, 2, 3, 3},
                          BranchPointId{1, 3, 2, 1}}) {
        const auto [W, K] = crossing_point(id, kRef);
        CHECK(K == doctest::Approx(neumann_K(W, id.mu, id.m)).epsilon(1e-12));
        CHECK(K == doctest::Approx(neumann_K(W, id.nu, id.n)).epsilon(1e-12));
    }
    const auto [W, K] = crossing_point({2, 3, 2, 0}, kRef);
    CHECK(W == doctest::Approx(158.9535373083).epsilon(1e-10));
    CHECK(K == doctest::Approx(15.5228063778).epsilon(1e-10));
    const LayerStack u = LayerStack::uniform(1.0, 2.0, 2.6, 1.0, 1.0);
    CHECK(code_of([&] { (void)crossing_point({1, 2, 1, 0}, u); }) == ErrorCode::DegenerateSpeeds);
}

TEST_CASE("eps path keeps the interface offset per family pair") {
    PathSpec spec;
    spec.nodes = 5;
    const auto p12 = eps_path({1, 2, 1, 0}, spec);
    REQUIRE(p12.size() == 5);
    CHECK(p12.front().first == doctest::Approx(spec.eps0));
    CHECK(p12.front().second == doctest::Approx(0.0));
    CHECK(p12.back().first == spec.E);
    const auto p23 = eps_path({2, 3, 1, 0}, spec);
    CHECK(p23.front().first == doctest::Approx(0.0));
    CHECK(p23.back().second == spec.E);
    const auto p13 = eps_path({1, 3, 1, 1}, spec);
    CHECK(p13[2].first == p13[2].second);
    spec.offset_case2 = true;
    const auto q13 = eps_path({1, 3, 1, 1}, spec);
    CHECK(q13.front().second == doctest::Approx(spec.eps0));
    CHECK(q13.back().second == doctest::Approx(spec.E - spec.eps0));
    spec.nodes = 1;
    CHECK(code_of([&] { (void)eps_path({1, 2, 1, 0}, spec); }) == ErrorCode::OutOfRange);
}

TEST_CASE("perturbation seeds come in conjugate pairs") {
    const auto s = perturb_seed_case1({1, 2, 1, 1}, 0.01, kRef);
    CHECK(std::abs(s[0].W - std::conj(s[1].W)) < 1e-12 * std::abs(s[0].W));
    CHECK(std::abs(s[0].K - std::conj(s[1].K)) < 1e-12 * (1.0 + std::abs(s[0].K)));
    CHECK(std::abs(s[0].W1 - cplx(42.81481481, -23.68872354)) < 1e-7);
    const auto t = perturb_seed_case2({1, 3, 1, 1}, 0.01, kRef);
    CHECK(std::abs(t[0].W - std::conj(t[1].W)) < 1e-12 * std::abs(t[0].W));
    CHECK(code_of([] { (void)perturb_seed_case1({1, 3, 1, 1}, 0.01, kRef); }) == ErrorCode::InvalidId);
}

TEST_CASE("seed error shrinks at second order in eps") {
    const BranchPointId id{2, 3, 2, 0};
    auto miss = [&](double e) {
        const PerturbSeed s = perturb_seed_case1(id, e, kRef)[0];
        const BranchPointSolution b = newton_branch_point(s.W, s.K, LinkingParams::finite(0.0, e), kRef);
        return std::abs(b.W - s.W);
    };
    const double r = miss(0.005) / miss(0.01);
    CHECK(r < 0.3);
    CHECK(r > 0.2);
}

TEST_CASE("branch point Newton solves D = D_K = 0") {
    const PerturbSeed s = perturb_seed_case1({2, 3, 1, 0}, 0.01, kRef)[0];
    const LinkingParams e = LinkingParams::finite(0.0, 0.01);
    const BranchPointSolution b = newton_branch_point(s.W, s.K, e, kRef);
    CHECK(b.residual_D < 1e-10);
    CHECK(b.residual_DK < 1e-10);
    const DetPartials p = det_partials(b.W, b.K, e, kRef);
    CHECK(std::abs(p.D) < 1e-10 * p.scale);
    CHECK(std::abs(p.D_K) < 1e-10 * p.scale_K);
}

TEST_CASE("traced branch points at ideal interfaces") {
    struct Frozen {
        BranchPointId id;
        cplx omega;
    };
    const Frozen table[] = {
        {{2, 3, 1, 0}, {7.3485218688, 2.8440602262}},
        {{2, 3, 2, 0}, {12.8196274746, 1.9748513264}},
        {{2, 3, 3, 0}, {18.9471425649, 1.3358322681}},
        {{1, 2, 3, 3}, {5.8296475282, 1.0668057136}},
        {{1, 2, 1, 1}, {3.1347360564, 0.8575396086}},
        {{1, 3, 1, 1}, {0.6311064795, 4.1356223873}},
    };
    const PathSpec spec;
    for (const Frozen& f : table) {
        const BranchPointRecord up = trace_branch_point(f.id, spec, +1, kRef);
        const BranchPointRecord dn = trace_branch_point(f.id, spec, -1, kRef);
        CHECK(up.complete);
        CHECK(up.trajectory.size() == spec.nodes);
        CHECK(std::abs(up.omega_star() - f.omega) < 1e-8 * std::abs(f.omega));
        CHECK(std::abs(dn.omega_star() - std::conj(f.omega)) < 1e-8 * std::abs(f.omega));
    }
}

TEST_CASE("trace_many: parallel equals serial bitwise") {
    const auto ids = ids_in_band(400.0, 0.0, kRef);
    REQUIRE(ids.size() > 4);
    const PathSpec spec;
    const auto a = trace_many(ids, spec, +1, kRef, ExecPolicy::Serial);
    const auto b = trace_many(ids, spec, +1, kRef, ExecPolicy::Parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].ok == b[i].ok);
        CHECK(a[i].record.id == ids[i]);
        CHECK(a[i].record.final_point == b[i].record.final_point);
    }
}

TEST_CASE("ids in a band satisfy the crossing filter in order") {
    const auto ids = ids_in_band(400.0, 0.0, kRef);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto [W, K] = crossing_point(ids[i], kRef);
        CHECK(W > 0.0);
        CHECK(W <= 400.0);
        CHECK(K > 0.0);
    }
    CHECK(std::find(ids.begin(), ids.end(), BranchPointId{2, 3, 2, 0}) != ids.end());
}

}
