#pragma once

#include "wavedisp/medium.hpp"

namespace wavedisp {

/// Entire functions of s = alpha^2 on a layer of thickness h, with their
/// first two s-derivatives:
///   cos  = cos(alpha h)
///   sinc = sin(alpha h) / alpha
///   asin = alpha sin(alpha h)
/// None of them depends on the sign of alpha, which is what makes the
/// dispersion determinant single valued in (W, K).
struct TrigJet {
    cplx cos, sinc, asin;
    cplx d_cos, d_sinc, d_asin;
    cplx dd_cos, dd_sinc, dd_asin;
};

/// |s h^2| below which the power series replaces the closed forms.
inline constexpr double kSeriesSwitch = 1.0;

[[nodiscard]] TrigJet trig_jet(cplx s, double h);

/// (1 - cos(alpha h)) / alpha^2, entire in s; equals h^2/2 at s = 0.
[[nodiscard]] cplx versine_ratio(cplx s, double h);

}  // namespace wavedisp
