#pragma once

#include <array>
#include <complex>
#include <string>

namespace wavedisp {

using cplx = std::complex<double>;

/// Three horizontal layers on 0 <= y <= H3 with Neumann walls at y = 0 and y = H3.
/// Layer j occupies [H_{j-1}, H_j] with H_0 = 0.
struct LayerStack {
    double H1 = 1.0, H2 = 2.0, H3 = 2.6;
    double c1 = 1.0, c2 = 1.7, c3 = 3.2;
    double rho1 = 15.0, rho2 = 1.0, rho3 = 1.0;

    /// The reference waveguide used throughout the examples and tests.
    [[nodiscard]] static LayerStack reference() { return {}; }

    /// Single-material stack; interfaces still sit at H1, H2.
    [[nodiscard]] static LayerStack uniform(double H1, double H2, double H3, double c, double rho) {
        return {H1, H2, H3, c, c, c, rho, rho, rho};
    }

    [[nodiscard]] double speed(int layer) const;
    [[nodiscard]] double density(int layer) const;
    [[nodiscard]] double thickness(int layer) const;
    /// Layer index (1..3) containing y; interfaces belong to the lower layer.
    [[nodiscard]] int layer_at(double y) const;
    [[nodiscard]] double min_speed() const;
    [[nodiscard]] double max_speed() const;

    /// Throws Error(InvalidConfig) unless 0 < H1 < H2 < H3 and all c, rho > 0 and finite.
    void validate() const;
};

/// Inverse interface masses. epsilon -> 0 decouples the layers, the infinite
/// limit restores ideal continuity of pressure.
struct LinkingParams {
    cplx eps1{0.0, 0.0};
    cplx eps2{0.0, 0.0};
    bool infinite = true;

    [[nodiscard]] static LinkingParams infinity() { return {}; }
    [[nodiscard]] static LinkingParams finite(cplx e1, cplx e2) { return {e1, e2, false}; }
};

/// W = omega^2, K = k^2. The dispersion relation is even in omega and k, so
/// the squared variables are the natural unknowns; omega and k are recovered
/// with the principal root.
struct SpectralVars {
    cplx W, K;

    [[nodiscard]] static SpectralVars from_omega_k(cplx omega, cplx k) { return {omega * omega, k * k}; }
    [[nodiscard]] cplx omega() const;
    [[nodiscard]] cplx k() const;
};

/// Principal square root that treats a negative zero imaginary part as +0,
/// so K on the positive real-negative axis maps to the positive imaginary k.
[[nodiscard]] cplx principal_sqrt(cplx z);

/// Wavenumber from K. Imaginary parts of K that are negative only through
/// roundoff are clamped to +0 before taking the root.
[[nodiscard]] cplx wavenumber_from_K(cplx K);

/// alpha_j^2 = W / c_j^2 - K.
[[nodiscard]] cplx alpha_squared(cplx W, cplx K, int layer, const LayerStack& stack);
/// Principal root of alpha_squared.
[[nodiscard]] cplx alpha(cplx W, cplx K, int layer, const LayerStack& stack);

/// Parse "key = value" lines (# comments). Recognized keys: H1 H2 H3 c1 c2 c3
/// rho1 rho2 rho3 and "preset" (only "reference"). Keys after a preset
/// override it. Throws Error(InvalidConfig).
[[nodiscard]] LayerStack parse_stack(const std::string& text);
/// Load from a file, or return the preset when `path_or_preset` names one.
[[nodiscard]] LayerStack load_stack(const std::string& path_or_preset);

}  // namespace wavedisp
