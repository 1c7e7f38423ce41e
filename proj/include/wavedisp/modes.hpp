#pragma once

#include <array>
#include <string>

#include "wavedisp/medium.hpp"

namespace wavedisp {

/// Transverse mode u(y) at a point (omega, k) of the dispersion diagram.
///
///   layer 1:  A cos(alpha1 y)
///   layer 2:  B sin(alpha2 y) + C cos(alpha2 y)
///           = P cos(alpha2 (y-H1)) + Q sin(alpha2 (y-H1)) / alpha2
///           = Xlo exp(i alpha2 (y-H1)) + Xhi exp(i alpha2 (H2-y))
///   layer 3:  F cos(alpha3 (y-H3)),  F = 1
///
/// Once |alpha2| h2 >= 1 layer 2 is carried in the two-sided exponential
/// form, whose terms are bounded by their values at the interfaces; the
/// (P, Q) form would have to cancel exp(|Im alpha2| h2) growth for a mode
/// that decays across the layer. (P, Q) are still reported, and (B, C) for
/// reference (undefined at alpha2 = 0).
struct ModeProfile {
    cplx omega, k, W, K;
    cplx A, B, C, F;
    cplx P, Q;
    cplx Xlo, Xhi;
    bool exp_basis = false;
    std::array<cplx, 3> s;      // alpha_j^2
    std::array<cplx, 3> alpha;  // principal roots
    LinkingParams eps;
    LayerStack stack;
};

/// F = 1 and the other coefficients by least squares on the four interface
/// conditions (with A fixed first and rescaled when F is exponentially small).
/// Throws SINGULAR_MINOR if the remaining block is rank deficient (or F must
/// vanish), OUT_OF_RANGE if (omega, k) is not on the diagram.
[[nodiscard]] ModeProfile solve_coefficients(cplx omega, cplx k, const LayerStack& stack,
                                             const LinkingParams& eps = LinkingParams::infinity());
/// Same in squared variables (k from K with the principal root).
[[nodiscard]] ModeProfile solve_coefficients_WK(cplx W, cplx K, const LayerStack& stack,
                                                const LinkingParams& eps = LinkingParams::infinity());

/// Residual ||N v|| / ||N|| of the coefficient vector against the local matrix.
[[nodiscard]] double nullspace_residual(const ModeProfile& p);

enum class Side { Below, Above };

/// u(y); at an interface `side` picks the limit from below (smaller y) or above.
[[nodiscard]] cplx eval_profile(const ModeProfile& p, double y, Side side = Side::Below);
[[nodiscard]] cplx eval_derivative(const ModeProfile& p, double y, Side side = Side::Below);

enum class Weight { Rho, RhoOverC2 };

/// Bilinear (not conjugated) integral of w u1 u2 over [0, H3], in closed form.
[[nodiscard]] cplx inner_product(const ModeProfile& p1, const ModeProfile& p2, Weight weight = Weight::Rho);
/// Integral of rho |u|^2.
[[nodiscard]] double energy_norm(const ModeProfile& p);

/// Integral over [0, L] of f g with f = pf cos(a t) + qf sin(a t)/a,
/// g = pg cos(b t) + qg sin(b t)/b, a^2 = sf, b^2 = sg. Exposed for testing.
[[nodiscard]] cplx layer_product_integral(cplx pf, cplx qf, cplx sf, cplx pg, cplx qg, cplx sg, double L);

/// rho(y0) U(y0) / (2 i k <U,U>). Throws CUTOFF at k = 0 and ZERO_NORM when
/// <U,U> vanishes relative to the energy norm (the branch-point condition).
[[nodiscard]] cplx amplitude_P(const ModeProfile& p, double y0);

/// Interface term S of the bilinear identity between modes of two (possibly
/// different) linked waveguides, from one-sided values and slopes.
[[nodiscard]] cplx bilinear_S(const ModeProfile& p1, const ModeProfile& p2);
/// Specialisation when both waveguides have finite, nonzero eps.
[[nodiscard]] cplx bilinear_S_finite(const ModeProfile& p1, const ModeProfile& p2);
/// Specialisation when p1 has eps = (0, 0) and p2 finite eps.
[[nodiscard]] cplx bilinear_S_decoupled(const ModeProfile& p1, const ModeProfile& p2);

/// S + (W1-W2) <rho/c^2 u1 u2> - (K1-K2) <rho u1 u2>, normalised by the
/// magnitudes of its terms.
[[nodiscard]] double bilinear_identity_residual(const ModeProfile& p1, const ModeProfile& p2);

/// sqrt(K/W) <rho u^2> / <rho/c^2 u^2>, real part. Throws CUTOFF at k = 0.
[[nodiscard]] double group_velocity_bilinear(const ModeProfile& p);

/// Sampled (y, Re u, Im u) CSV.
void write_profile_csv(const ModeProfile& p, int samples, const std::string& path);

}  // namespace wavedisp
