#pragma once
#include <complex>

#include "phasecool/core.hpp"

namespace phasecool {

// Steady-state spectral model near the mechanical resonance. Rates are in
// units of omega; delta is a frequency offset measured from the sideband
// centers at -omega / +omega.
struct SpectralConfig {
    double gamma = 0.0;      // intrinsic damping, > 0
    double gamma_mod = 0.0;  // induced rate Gamma = b*omega, >= 0
    double phi = 0.0;        // modulation phase, stored wrapped to [0, 2pi)
    double n_th = 0.0;       // bath occupancy, >= 0
};

SpectralConfig make_spectral(double gamma, double gamma_mod, double phi, double n_th);

// S_th(omega) = gamma*(omega/Omega)*[coth(ratio*omega/(2*Omega)) + 1] with
// ratio = hbar*Omega/(k_B*T). ratio = +inf selects the T = 0 limit.
double thermal_spectrum(double omega, double temperature_ratio, const OscillatorParams& params);

// Bath readouts from the two sideband strengths, inverted from
// S(-Omega) = 2*gamma*n_th and S(+Omega) = 2*gamma*(n_th + 1):
// gamma = [S(+) - S(-)]/2, n_th = S(-)/[S(+) - S(-)].
double damping_from_sidebands(double s_plus, double s_minus);
double occupancy_from_sidebands(double s_plus, double s_minus);

std::complex<double> susceptibility(double omega, const OscillatorParams& params);

// Near-resonance approximation; |delta| <= 0.1 (units of omega) enforced.
std::complex<double> modified_susceptibility(double delta, const SpectralConfig& cfg);

// Steady-state position variance <q^2>. The closed form branches at
// Gamma = gamma and requires |Gamma - gamma| >= 1e-6*gamma (pole guard);
// Gamma = 0 returns n_th + 1/2 exactly.
double position_variance_closed(const SpectralConfig& cfg);

// Same quantity by adaptive quadrature of the two-sideband power spectrum,
// kept as an independent cross-check of the closed form. The odd-in-delta
// cos(phi) part of the integrand is evaluated rather than dropped so its
// cancellation is verified, not assumed.
double position_variance_quadrature(const SpectralConfig& cfg);

// n_final = (gamma/Gamma)*(n_th + 1/2), the asymptotic limit for
// Gamma >= 10*gamma. Below that threshold the full closed form minus 1/2 is
// returned instead and *fallback_used (when non-null) is set.
double final_occupancy_limit(const SpectralConfig& cfg, bool* fallback_used = nullptr);

} // namespace phasecool
