#include <doctest.h>

#include <cmath>

#include "wavedisp/errors.hpp"
#include "wavedisp/transient.hpp"

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

std::vector<std::size_t> all_branches(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
}

cplx contour_integral(const FrequencyContour& c, auto&& f) {
    cplx s{0.0};
    for (std::size_t i = 0; i < c.nodes.size(); ++i) s += c.weights[i] * f(c.nodes[i]);
    return s;
}

}  // namespace

TEST_SUITE("transient") {

TEST_CASE("Gauss-Legendre is exact to degree 2n - 1") {
    for (int n : {1, 4, 10, 16}) {
        const GaussRule g = gauss_legendre(n);
        REQUIRE(g.x.size() == static_cast<std::size_t>(n));
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g.w[i] * std::pow(g.x[i], d);
            const double exact = d % 2 == 0 ? 2.0 / (d + 1) : 0.0;
            CHECK(s == doctest::Approx(exact).epsilon(1e-13));
        }
    }
}

TEST_CASE("excitation spectrum and its support") {
    const ExcitationSpectrum f;
    CHECK(std::abs(f(cplx(12.0, 0.0)) - 1.0) < 1e-15);
    const auto [lo, hi] = f.support(1e-12);
    CHECK(lo == 0.0);
    CHECK(std::abs(f(hi)) == doctest::Approx(1e-12).epsilon(1e-9));
    CHECK(hi == doctest::Approx(33.026087079).epsilon(1e-9));
}

TEST_CASE("contour shape and quadrature") {
    const SpacingPolicy pol;
    const FrequencyContour a = build_contour(0.0, 0.0, 0.0, pol, kRef);
    CHECK(a.vertices.size() == 2);
    CHECK(a.start() == cplx(0.0, 0.0));
    const FrequencyContour b = build_contour(1.0, 3.0, 26.0, pol, kRef);
    REQUIRE(b.vertices.size() == 6);
    CHECK(b.vertices[1] == cplx(2.0, 0.0));
    CHECK(b.vertices[2] == cplx(3.0, 1.0));
    CHECK(b.vertices[3] == cplx(26.0, 1.0));
    CHECK(b.vertices[4] == cplx(27.0, 0.0));
    CHECK(b.end() == a.end());
    // sum of weights is the chord; Cauchy makes analytic integrals agree
    CHECK(std::abs(contour_integral(b, [](cplx) { return cplx(1.0); }) - (b.end() - b.start())) < 1e-12);
    auto g = [&](cplx w) { return pol.spectrum(w) * std::exp(cplx(0.0, -0.5) * w); };
    const cplx ia = contour_integral(a, g), ib = contour_integral(b, g);
    CHECK(std::abs(ia - ib) < 1e-11 * std::abs(ia));
    CHECK(code_of([&] { (void)build_contour(1.0, 0.5, 26.0, pol, kRef); }) == ErrorCode::OutOfRange);
    CHECK(code_of([&] { (void)build_contour(1.0, 3.0, 40.0, pol, kRef); }) == ErrorCode::OutOfRange);
}

TEST_CASE("branch subsets") {
    CHECK(BranchSubset::parse("all").kind == BranchSubset::Kind::All);
    CHECK(BranchSubset::parse("type23").kind == BranchSubset::Kind::Type23);
    CHECK(BranchSubset::parse("type3").kind == BranchSubset::Kind::Type3);
    const BranchSubset ids = BranchSubset::parse("4,1,4");
    CHECK(ids.kind == BranchSubset::Kind::Ids);
    CHECK(code_of([] { (void)BranchSubset::parse("1,x"); }) == ErrorCode::MissingBranch);
    CHECK(code_of([] { (void)BranchSubset::parse(""); }) == ErrorCode::MissingBranch);

    BranchTable t;
    t.nodes = {cplx(0.0, 20.0)};
    t.K = std::vector<std::vector<cplx>>(3, std::vector<cplx>{cplx(0.0)});
    t.labels = {BranchLabel::Type1, BranchLabel::Type23, BranchLabel::Type2};
    CHECK(resolve_subset(BranchSubset::parse("type23"), t) == std::vector<std::size_t>{1, 2});
    CHECK(resolve_subset(BranchSubset::parse("2,0,2"), t) == std::vector<std::size_t>{0, 2});
    CHECK(code_of([&] { (void)resolve_subset(BranchSubset::parse("type3"), t); }) == ErrorCode::MissingBranch);
    CHECK(code_of([&] { (void)resolve_subset(BranchSubset::parse("3"), t); }) == ErrorCode::MissingBranch);
}

TEST_CASE("time grid, relative rms and precursor decay") {
    const auto t = time_grid(0.0, 15.0, 0.05);
    CHECK(t.size() == 301);
    CHECK(t.back() == doctest::Approx(15.0));
    const std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 2.0, 2.0}, tt{0.0, 1.0, 2.0};
    CHECK(relative_rms(tt, a, b, 0.0, 2.0) == doctest::Approx(1.0 / 3.0));
    CHECK(relative_rms(tt, a, b, 0.0, 1.0) == 0.0);
    CHECK(precursor_decay(cplx(1.0, 2.0), cplx(3.0, 1.0), 0.5) == doctest::Approx(0.0));
}

TEST_CASE("accumulation: parallel equals serial bitwise") {
    std::vector<QuadTerm> terms;
    for (int j = 0; j < 500; ++j) terms.push_back({cplx(0.07 * j, 0.3 * std::sin(j)), cplx(std::cos(j), 1.0 / (1 + j))});
    const auto t = time_grid(0.0, 15.0, 0.05);
    CHECK(accumulate_signal(terms, t, ExecPolicy::Serial) == accumulate_signal(terms, t, ExecPolicy::Parallel));
}

TEST_CASE("real-axis synthesis of the reference stack") {
    const SpacingPolicy pol;
    const FrequencyContour a = build_contour(0.0, 0.0, 0.0, pol, kRef);
    const ContourBranches br = track_branches(a, 19, kRef);
    const auto t = time_grid(0.0, 15.0, 0.05);
    SynthesisOptions opt;
    opt.policy = ExecPolicy::Serial;
    const Signal s = synthesize(a, br, all_branches(19), 10.0, kRef.H3, t, kRef, pol, opt);
    opt.policy = ExecPolicy::Parallel;
    const Signal p = synthesize(a, br, all_branches(19), 10.0, kRef.H3, t, kRef, pol, opt);
    CHECK(s.u_tilde == p.u_tilde);
    // independent prototype values of Re u at the surface
    const std::pair<double, double> frozen[] = {
        {2.0, 0.00011040477817368643}, {5.0, 0.20299524343930478}, {8.0, -0.40581004504524937},
        {11.0, 0.3354168447812053},    {14.0, 0.4248684269109743},
    };
    for (const auto& [tt, u] : frozen) {
        const auto i = static_cast<std::size_t>(std::lround(tt / 0.05));
        CHECK(std::abs(s.u[i] - u) < 1e-7);
    }
}

TEST_CASE("branch labels on the raised contour") {
    const SpacingPolicy pol;
    const FrequencyContour b = build_contour(1.0, 3.0, 26.0, pol, kRef);
    ContourBranches br = track_branches(b, 19, kRef);
    classify_on_top(br, b, kRef);
    using L = BranchLabel;
    const std::vector<L> expect{L::Type1,  L::Type2, L::Type2,  L::Type23, L::Type1, L::Type23, L::Type1,
                                L::Type23, L::Type1, L::Type2,  L::Type2,  L::Type1, L::Type2,  L::Type1,
                                L::Type2,  L::Type2, L::Type1,  L::Type2,  L::Type1};
    CHECK(br.table.labels == expect);
}

}
