#include "wavedisp/medium.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wavedisp/errors.hpp"

namespace wavedisp {

double LayerStack::speed(int layer) const {
    switch (layer) {
        case 1: return c1;
        case 2: return c2;
        case 3: return c3;
    }
    throw Error(ErrorCode::OutOfRange, "layer index " + std::to_string(layer));
}

double LayerStack::density(int layer) const {
    switch (layer) {
        case 1: return rho1;
        case 2: return rho2;
        case 3: return rho3;
    }
    throw Error(ErrorCode::OutOfRange, "layer index " + std::to_string(layer));
}

double LayerStack::thickness(int layer) const {
    switch (layer) {
        case 1: return H1;
        case 2: return H2 - H1;
        case 3: return H3 - H2;
    }
    throw Error(ErrorCode::OutOfRange, "layer index " + std::to_string(layer));
}

int LayerStack::layer_at(double y) const {
    if (!(y >= 0.0 && y <= H3)) throw Error(ErrorCode::OutOfRange, "y outside [0, H3]");
    if (y <= H1) return 1;
    if (y <= H2) return 2;
    return 3;
}

double LayerStack::min_speed() const { return std::min({c1, c2, c3}); }
double LayerStack::max_speed() const { return std::max({c1, c2, c3}); }

void LayerStack::validate() const {
    for (double v : {H1, H2, H3, c1, c2, c3, rho1, rho2, rho3}) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "non-finite parameter");
    }
    if (!(H1 > 0.0 && H2 > H1 && H3 > H2)) {
        throw Error(ErrorCode::InvalidConfig, "interfaces must satisfy 0 < H1 < H2 < H3");
    }
    if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0)) throw Error(ErrorCode::InvalidConfig, "sound speeds must be positive");
    if (!(rho1 > 0.0 && rho2 > 0.0 && rho3 > 0.0)) throw Error(ErrorCode::InvalidConfig, "densities must be positive");
}

cplx SpectralVars::omega() const { return principal_sqrt(W); }
cplx SpectralVars::k() const { return wavenumber_from_K(K); }

cplx principal_sqrt(cplx z) {
    // std::sqrt follows the sign of a zero imaginary part; normalise it so the
    // cut is approached from above.
    if (z.imag() == 0.0) z = cplx(z.real(), 0.0);
    return std::sqrt(z);
}

cplx wavenumber_from_K(cplx K) {
    const double tiny = 1e-12 * (1.0 + std::abs(K));
    if (K.imag() < 0.0 && K.imag() > -tiny) K = cplx(K.real(), 0.0);
    return principal_sqrt(K);
}

cplx alpha_squared(cplx W, cplx K, int layer, const LayerStack& stack) {
    const double c = stack.speed(layer);
    return W / (c * c) - K;
}

cplx alpha(cplx W, cplx K, int layer, const LayerStack& stack) {
    return principal_sqrt(alpha_squared(W, K, layer, stack));
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "bad number for " + key + ": '" + value + "'");
    }
    if (used != value.size()) throw Error(ErrorCode::InvalidConfig, "trailing characters for " + key);
    return v;
}

}  // namespace

LayerStack parse_stack(const std::string& text) {
    LayerStack s = LayerStack::reference();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "preset") {
            if (value != "reference") throw Error(ErrorCode::InvalidConfig, "unknown preset '" + value + "'");
            s = LayerStack::reference();
            continue;
        }
        double* slot = nullptr;
        if (key == "H1") slot = &s.H1;
        else if (key == "H2") slot = &s.H2;
        else if (key == "H3") slot = &s.H3;
        else if (key == "c1") slot = &s.c1;
        else if (key == "c2") slot = &s.c2;
        else if (key == "c3") slot = &s.c3;
        else if (key == "rho1") slot = &s.rho1;
        else if (key == "rho2") slot = &s.rho2;
        else if (key == "rho3") slot = &s.rho3;
        else throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
        *slot = parse_number(key, value);
    }
    s.validate();
    return s;
}

LayerStack load_stack(const std::string& path_or_preset) {
    if (path_or_preset == "reference") return LayerStack::reference();
    std::ifstream f(path_or_preset);
    if (!f) throw Error(ErrorCode::InvalidConfig, "cannot open config '" + path_or_preset + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_stack(ss.str());
}

}  // namespace wavedisp
