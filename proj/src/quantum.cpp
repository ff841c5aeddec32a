#include "phasecool/quantum.hpp"

#include <cmath>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace phasecool {

namespace {

constexpr double kPoleGuard = 1e-6;  // minimum |Gamma - gamma| / gamma

void check_pole(const SpectralConfig& cfg) {
    if (std::abs(cfg.gamma_mod - cfg.gamma) < kPoleGuard * cfg.gamma)
        throw ValidationError("spectral: Gamma = gamma pole; closed-form branches diverge at "
                              "|Gamma - gamma|/gamma < 1e-6 (got Gamma/gamma = " +
                              std::to_string(cfg.gamma_mod / cfg.gamma) + ")");
}

struct VarianceIntegrand {
    double g;      // gamma
    double gm;     // Gamma
    double nth;
    double sinp;
    double cosp;
    double scale;  // tan substitution scale sqrt(|Gamma^2 - gamma^2|)/2

    // Two-sideband power spectrum divided by 2*pi, in the offset variable
    // delta; even part carries the occupancy, odd part is the cos(phi) term
    // that must integrate to zero.
    double spectrum(double delta) const {
        const double d2 = 4.0 * delta * delta;
        const double common = d2 + 2.0 * g * gm * sinp + gm * gm + g * g;
        const double even = (4.0 * g * (nth + 0.5) + 2.0 * gm) * common;
        const double odd = 2.0 * gm * 4.0 * delta * (g + gm) * cosp;
        const double re = d2 + gm * gm - g * g;
        const double im = 4.0 * g * delta;
        return (even + odd) / (re * re + im * im);
    }

    // delta = scale * tan(theta) flattens the Lorentzian-like tails.
    double operator()(double theta) const {
        const double c = std::cos(theta);
        const double sec2 = 1.0 / (c * c);
        return spectrum(scale * std::tan(theta)) * scale * sec2;
    }
};

double integrand_thunk(double theta, void* params) {
    return (*static_cast<const VarianceIntegrand*>(params))(theta);
}

// GSL's global error handler would abort the process; numeric trouble is
// reported through return codes and mapped to NumericsError instead.
void disable_gsl_abort() {
    static const auto once = [] {
        gsl_set_error_handler_off();
        return 0;
    }();
    (void)once;
}

} // namespace

SpectralConfig make_spectral(double gamma, double gamma_mod, double phi, double n_th) {
    if (!std::isfinite(gamma) || !std::isfinite(gamma_mod) || !std::isfinite(phi) ||
        !std::isfinite(n_th))
        throw ValidationError("spectral: parameters must be finite");
    if (gamma <= 0.0)
        throw ValidationError("spectral.gamma: must be > 0 (got " + std::to_string(gamma) + ")");
    if (gamma_mod < 0.0)
        throw ValidationError("spectral.gamma_mod: must be >= 0 (got " +
                              std::to_string(gamma_mod) + ")");
    if (n_th < 0.0)
        throw ValidationError("spectral.n_th: must be >= 0 (got " + std::to_string(n_th) + ")");
    return SpectralConfig{gamma, gamma_mod, wrap_phase(phi), n_th};
}

double thermal_spectrum(double omega, double temperature_ratio, const OscillatorParams& params) {
    if (!std::isfinite(omega) || omega == 0.0)
        throw ValidationError("thermal_spectrum: omega must be finite and nonzero");
    if (std::isnan(temperature_ratio) || temperature_ratio <= 0.0)
        throw ValidationError("thermal_spectrum: temperature_ratio must be > 0 (+inf allowed)");
    const double x = omega / params.omega;
    // coth saturates to +-1 for large arguments, covering ratio = +inf.
    const double arg = 0.5 * temperature_ratio * x;
    const double coth = std::isinf(arg) ? (arg > 0.0 ? 1.0 : -1.0) : 1.0 / std::tanh(arg);
    return params.gamma * x * (coth + 1.0);
}

double damping_from_sidebands(double s_plus, double s_minus) {
    return 0.5 * (s_plus - s_minus);
}

double occupancy_from_sidebands(double s_plus, double s_minus) {
    const double diff = s_plus - s_minus;
    if (diff <= 0.0)
        throw ValidationError("sidebands: S(+Omega) must exceed S(-Omega)");
    return s_minus / diff;
}

std::complex<double> susceptibility(double omega, const OscillatorParams& params) {
    const double om = params.omega;
    return om / std::complex<double>(om * om - omega * omega, -params.gamma * omega);
}

std::complex<double> modified_susceptibility(double delta, const SpectralConfig& cfg) {
    if (!std::isfinite(delta) || std::abs(delta) > 0.1)
        throw ValidationError("modified_susceptibility: near-resonance form needs |delta| <= 0.1 "
                              "(got " + std::to_string(delta) + ")");
    const double g = cfg.gamma;
    const double gm = cfg.gamma_mod;
    return 1.0 / std::complex<double>(4.0 * delta * delta + gm * gm - g * g, 4.0 * g * delta);
}

double position_variance_closed(const SpectralConfig& cfg) {
    const double g = cfg.gamma;
    const double gm = cfg.gamma_mod;
    if (gm == 0.0) return cfg.n_th + 0.5;
    check_pole(cfg);
    const double sinp = std::sin(cfg.phi);
    if (gm > g) {
        const double den = gm * gm - g * g;
        return g * (gm + g * sinp) / den * (cfg.n_th + 0.5) +
               gm * (gm + g * sinp) / (2.0 * den);
    }
    const double den = g * g - gm * gm;
    return g * (g + gm * sinp) / den * (cfg.n_th + 0.5) + gm * (g + gm * sinp) / (2.0 * den);
}

double position_variance_quadrature(const SpectralConfig& cfg) {
    const double g = cfg.gamma;
    const double gm = cfg.gamma_mod;
    if (gm != 0.0) check_pole(cfg);
    disable_gsl_abort();

    VarianceIntegrand f;
    f.g = g;
    f.gm = gm;
    f.nth = cfg.n_th;
    f.sinp = std::sin(cfg.phi);
    f.cosp = std::cos(cfg.phi);
    f.scale = 0.5 * std::sqrt(std::abs(gm * gm - g * g));
    if (f.scale == 0.0) f.scale = 0.5 * g;  // Gamma = 0 collapses the scale

    gsl_function gf;
    gf.function = &integrand_thunk;
    gf.params = &f;

    constexpr std::size_t kLimit = 2000;
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(kLimit);
    if (ws == nullptr) throw NumericsError("quadrature: workspace allocation failed");
    double result = 0.0;
    double abserr = 0.0;
    constexpr double kHalfPi = 1.57079632679489661923;
    const int status = gsl_integration_qag(&gf, -kHalfPi, kHalfPi, 0.0, 1e-10, kLimit,
                                           GSL_INTEG_GAUSS61, ws, &result, &abserr);
    gsl_integration_workspace_free(ws);
    const double variance = result / (2.0 * M_PI);
    if (status != GSL_SUCCESS)
        throw NumericsError("quadrature: did not converge (status " + std::to_string(status) +
                            ", estimate " + format_double(variance) + ", abserr " +
                            format_double(abserr / (2.0 * M_PI)) + ")");
    return variance;
}

double final_occupancy_limit(const SpectralConfig& cfg, bool* fallback_used) {
    if (cfg.gamma_mod <= 0.0)
        throw ValidationError("final_occupancy_limit: requires Gamma > 0");
    if (fallback_used != nullptr) *fallback_used = false;
    if (cfg.gamma_mod >= 10.0 * cfg.gamma)
        return cfg.gamma / cfg.gamma_mod * (cfg.n_th + 0.5);
    if (fallback_used != nullptr) *fallback_used = true;
    return position_variance_closed(cfg) - 0.5;
}

} // namespace phasecool
