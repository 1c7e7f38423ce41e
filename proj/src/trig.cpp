#include "wavedisp/trig.hpp"

#include <cmath>

namespace wavedisp {

namespace {

constexpr int kTerms = 18;

// Series in x = s h^2:
//   cos  = sum (-x)^k / (2k)!
//   sinc = h sum (-x)^k / (2k+1)!
TrigJet series_jet(cplx s, double h) {
    const cplx x = s * h * h;
    const double h2 = h * h;
    cplx c{0}, sn{0}, dsn{0}, ddsn{0};
    cplx xk{1.0};   // x^k
    cplx xk1{0.0};  // x^(k-1)
    cplx xk2{0.0};  // x^(k-2)
    double fact_even = 1.0;  // (2k)!
    double fact_odd = 1.0;   // (2k+1)!
    for (int k = 0; k < kTerms; ++k) {
        if (k > 0) {
            fact_even *= (2.0 * k - 1.0) * (2.0 * k);
            fact_odd *= (2.0 * k) * (2.0 * k + 1.0);
        }
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        c += sign * xk / fact_even;
        sn += sign * xk / fact_odd;
        if (k >= 1) dsn += sign * double(k) * xk1 / fact_odd;
        if (k >= 2) ddsn += sign * double(k) * double(k - 1) * xk2 / fact_odd;
        xk2 = xk1;
        xk1 = xk;
        xk *= x;
    }
    TrigJet j;
    j.cos = c;
    j.sinc = h * sn;
    j.d_sinc = h * h2 * dsn;
    j.dd_sinc = h * h2 * h2 * ddsn;
    j.d_cos = -0.5 * h * j.sinc;
    j.dd_cos = -0.5 * h * j.d_sinc;
    j.asin = s * j.sinc;
    j.d_asin = 0.5 * (j.sinc + h * j.cos);
    j.dd_asin = 0.5 * (j.d_sinc + h * j.d_cos);
    return j;
}

}  // namespace

TrigJet trig_jet(cplx s, double h) {
    if (std::abs(s) * h * h < kSeriesSwitch) return series_jet(s, h);
    const cplx a = principal_sqrt(s);
    const cplx ah = a * h;
    TrigJet j;
    j.cos = std::cos(ah);
    j.sinc = std::sin(ah) / a;
    j.asin = s * j.sinc;
    j.d_cos = -0.5 * h * j.sinc;
    j.d_sinc = (h * j.cos - j.sinc) / (2.0 * s);
    j.d_asin = 0.5 * (j.sinc + h * j.cos);
    j.dd_cos = -0.5 * h * j.d_sinc;
    j.dd_sinc = (h * j.d_cos - 3.0 * j.d_sinc) / (2.0 * s);
    j.dd_asin = 0.5 * (j.d_sinc + h * j.d_cos);
    return j;
}

cplx versine_ratio(cplx s, double h) {
    const cplx x = s * h * h;
    if (std::abs(x) < kSeriesSwitch) {
        // h^2 sum (-x)^k / (2k+2)!
        cplx sum{0}, xk{1.0};
        double fact = 2.0;
        for (int k = 0; k < kTerms; ++k) {
            if (k > 0) fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
            sum += ((k % 2 == 0) ? 1.0 : -1.0) * xk / fact;
            xk *= x;
        }
        return h * h * sum;
    }
    const cplx a = principal_sqrt(s);
    return (1.0 - std::cos(a * h)) / s;
}

}  // namespace wavedisp
