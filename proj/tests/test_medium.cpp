#include <doctest.h>

#include <cmath>
#include <limits>

#include "wavedisp/errors.hpp"
#include "wavedisp/medium.hpp"
#include "wavedisp/trig.hpp"

using namespace wavedisp;

TEST_SUITE("medium") {

TEST_CASE("reference preset and layer lookup") {
    const LayerStack s = LayerStack::reference();
    CHECK(s.thickness(1) == 1.0);
    CHECK(s.thickness(2) == 1.0);
    CHECK(s.thickness(3) == doctest::Approx(0.6));
    CHECK(s.layer_at(0.0) == 1);
    CHECK(s.layer_at(1.0) == 1);  // interfaces go to the lower layer
    CHECK(s.layer_at(1.5) == 2);
    CHECK(s.layer_at(2.0) == 2);
    CHECK(s.layer_at(2.6) == 3);
    CHECK_THROWS_AS((void)s.layer_at(2.7), Error);
    CHECK(s.min_speed() == 1.0);
    CHECK(s.max_speed() == 3.2);
}

TEST_CASE("validation") {
    LayerStack s;
    s.H2 = 0.5;
    try {
        s.validate();
        FAIL("expected INVALID_CONFIG");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(is_validation_error(e.code()));
    }
    LayerStack t;
    t.c2 = -1.0;
    CHECK_THROWS_AS(t.validate(), Error);
    LayerStack u;
    u.rho3 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(u.validate(), Error);
}

TEST_CASE("config parsing") {
    const LayerStack s = parse_stack("# comment\npreset = reference\nc1 = 0.8  # slower top\n");
    CHECK(s.c1 == 0.8);
    CHECK(s.rho1 == 15.0);
    CHECK_THROWS_AS((void)parse_stack("H9 = 1\n"), Error);
    CHECK_THROWS_AS((void)parse_stack("H1 = abc\n"), Error);
    CHECK_THROWS_AS((void)parse_stack("preset = reference\nH2 = 0.5\n"), Error);
    CHECK(load_stack("reference").c3 == 3.2);
    CHECK_THROWS_AS((void)load_stack("/nonexistent/stack.cfg"), Error);
}

TEST_CASE("square roots pick the upper half plane") {
    CHECK(principal_sqrt(cplx(-4.0, -0.0)) == cplx(0.0, 2.0));
    CHECK(wavenumber_from_K(cplx(-4.0, -1e-300)).imag() > 0.0);
    CHECK(std::abs(wavenumber_from_K(cplx(-4.0, -1e-13)) - cplx(0.0, 2.0)) < 1e-12);
    CHECK(wavenumber_from_K(cplx(9.0, 0.0)) == cplx(3.0, 0.0));
    const LayerStack s;
    CHECK(alpha_squared(cplx(4.0), cplx(1.0), 2, s) == cplx(4.0 / (1.7 * 1.7) - 1.0));
}

TEST_CASE("trig jet matches closed forms and finite differences") {
    const double h = 0.6;
    for (cplx s : {cplx(0.3, 0.1), cplx(-2.0, 0.5), cplx(40.0, -3.0), cplx(-200.0, 1.0), cplx(1e-9, 0.0)}) {
        const TrigJet j = trig_jet(s, h);
        const cplx a = std::sqrt(s);
        const double tol = 1e-12 * (1.0 + std::abs(j.cos) + std::abs(j.asin));
        CHECK(std::abs(j.cos - std::cos(a * h)) < tol);
        CHECK(std::abs(j.sinc - std::sin(a * h) / a) < tol);
        CHECK(std::abs(j.asin - a * std::sin(a * h)) < tol);
        const cplx d = 1e-6 * (1.0 + std::abs(s));
        const TrigJet p = trig_jet(s + d, h), m = trig_jet(s - d, h);
        auto fd_ok = [&](cplx fd, cplx an, cplx ref) { return std::abs(fd - an) < 1e-6 * (1.0 + std::abs(ref)); };
        CHECK(fd_ok((p.cos - m.cos) / (2.0 * d), j.d_cos, j.cos));
        CHECK(fd_ok((p.sinc - m.sinc) / (2.0 * d), j.d_sinc, j.sinc));
        CHECK(fd_ok((p.asin - m.asin) / (2.0 * d), j.d_asin, j.asin));
        CHECK(fd_ok((p.d_cos - m.d_cos) / (2.0 * d), j.dd_cos, j.d_cos));
        CHECK(fd_ok((p.d_sinc - m.d_sinc) / (2.0 * d), j.dd_sinc, j.d_sinc));
        CHECK(fd_ok((p.d_asin - m.d_asin) / (2.0 * d), j.dd_asin, j.d_asin));
    }
}

TEST_CASE("series and closed forms agree across the switch") {
    const double h = 1.0;
    for (double r : {0.999, 1.001}) {
        const cplx s = std::polar(r / (h * h), 0.7);
        const TrigJet j = trig_jet(s, h);
        const cplx a = std::sqrt(s);
        CHECK(std::abs(j.sinc - std::sin(a * h) / a) < 1e-14);
        CHECK(std::abs(j.dd_sinc - trig_jet(s * (r < 1 ? 1.002 : 0.998), h).dd_sinc) < 1e-2);
    }
    CHECK(versine_ratio(0.0, 2.0) == cplx(2.0));
    const cplx s(5.0, 1.0);
    CHECK(std::abs(versine_ratio(s, 0.7) - (1.0 - std::cos(std::sqrt(s) * 0.7)) / s) < 1e-14);
}

}  // TEST_SUITE
