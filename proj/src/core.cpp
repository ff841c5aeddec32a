#include "phasecool/core.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

namespace phasecool {

double OscillatorParams::quality() const {
    if (gamma <= 0.0) return std::numeric_limits<double>::infinity();
    return omega / gamma;
}

OscillatorParams make_oscillator(double omega, double gamma, double n_th) {
    if (!std::isfinite(omega) || !std::isfinite(gamma) || !std::isfinite(n_th))
        throw ValidationError("oscillator: parameters must be finite");
    if (omega <= 0.0)
        throw ValidationError("oscillator.omega: must be > 0 (got " + std::to_string(omega) + ")");
    if (gamma < 0.0)
        throw ValidationError("oscillator.gamma: must be >= 0 (got " + std::to_string(gamma) + ")");
    if (gamma >= omega)
        throw ValidationError("oscillator.gamma: regime guard gamma < omega violated (got gamma/omega = " +
                              std::to_string(gamma / omega) + ")");
    if (n_th < 0.0)
        throw ValidationError("oscillator.n_th: must be >= 0 (got " + std::to_string(n_th) + ")");
    return OscillatorParams{omega, gamma, n_th};
}

Drive make_drive(double b, double phi, const OscillatorParams& osc) {
    if (!std::isfinite(b) || !std::isfinite(phi))
        throw ValidationError("drive: parameters must be finite");
    if (std::abs(b) >= 1.0)
        throw ValidationError("drive.b: |b| < 1 violated (got " + std::to_string(b) + ")");
    Drive d;
    d.b = b;
    d.phi = wrap_phase(phi);
    d.gamma_mod = b * osc.omega;
    d.beyond_perturbative = b > 0.25;
    return d;
}

double occupancy_of(const QuadratureState& s, Convention c) {
    const double n = 0.5 * (s.q * s.q + s.p * s.p);
    return c == Convention::classical ? n : n - 0.5;
}

double wrap_phase(double phi) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    double x = std::fmod(phi, two_pi);
    if (x < 0.0) x += two_pi;
    if (x >= two_pi) x = 0.0;  // fmod rounding at the seam
    return x;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double GaussStream::uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double GaussStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

QuadratureState sample_thermal_state(double n_th, GaussStream& rng) {
    if (!(n_th >= 0.0))
        throw ValidationError("sample_thermal_state: n_th must be >= 0");
    const double sd = std::sqrt(n_th);
    QuadratureState s;
    s.q = sd * rng.normal();
    s.p = sd * rng.normal();
    return s;
}

} // namespace phasecool
