#include "phasecool/mathieu.hpp"

#include <cmath>
#include <limits>

namespace phasecool {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

using cplx = std::complex<double>;

cplx d_coeff(int n, cplx beta, double b) {
    const cplx m = 2.0 * n + beta;
    return (1.0 - m * m) / b;
}

// Ratio continued fractions with truncation C_{+-2(N+1)} = 0:
//   R_n = C_{2n}/C_{2n-2} = 1/(D_{2n} - R_{n+1}),   R_{N+1} = 0
//   L_n = C_{-2n}/C_{-2n+2} = 1/(D_{-2n} - L_{n+1}), L_{N+1} = 0
// Central row (n = 0) gives the root condition G(x) = R_1 + L_1 - D_0 = 0.
cplx cf_r1(cplx x, double b, int order) {
    const cplx beta = -1.0 + x;
    cplx r = 0.0;
    for (int n = order; n >= 1; --n) r = 1.0 / (d_coeff(n, beta, b) - r);
    return r;
}

cplx cf_l1(cplx x, double b, int order) {
    const cplx beta = -1.0 + x;
    cplx l = 0.0;
    for (int n = order; n >= 1; --n) l = 1.0 / (d_coeff(-n, beta, b) - l);
    return l;
}

cplx root_condition(cplx x, double b, int order) {
    return cf_r1(x, b, order) + cf_l1(x, b, order) - d_coeff(0, -1.0 + x, b);
}

} // namespace

std::complex<double> TruncatedFloquet::coeff(int n) const {
    const int N = truncation_order;
    if (n < -N || n > N) return 0.0;
    return harmonics[static_cast<std::size_t>(n + N)];
}

double TruncatedFloquet::recursion_residual(double b) const {
    if (b == 0.0) return 0.0;  // recursion degenerates; exact solution is trivial
    const cplx beta = -1.0 + exponent_x;
    double worst = 0.0;
    for (int n = -truncation_order; n <= truncation_order; ++n) {
        const cplx res = coeff(n + 1) - d_coeff(n, beta, b) * coeff(n) + coeff(n - 1);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

TruncatedFloquet characteristic_exponent(double b, int truncation_order) {
    if (!(std::abs(b) < 0.5))
        throw ValidationError("characteristic_exponent: need |b| < 0.5, got " + format_double(b));
    if (truncation_order < 1)
        throw ValidationError("characteristic_exponent: truncation_order must be >= 1");

    TruncatedFloquet out;
    out.truncation_order = truncation_order;
    out.harmonics.assign(static_cast<std::size_t>(2 * truncation_order + 1), 0.0);
    out.harmonics[static_cast<std::size_t>(truncation_order)] = 1.0;  // C_0 = 1
    if (b == 0.0) {
        out.exponent_x = 0.0;
        return out;
    }

    cplx x(0.0, 0.5 * b);  // the root scales as i b/2
    const double h = 1e-7;
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
        const cplx g = root_condition(x, b, truncation_order);
        const cplx dg =
            (root_condition(x + h, b, truncation_order) - root_condition(x - h, b, truncation_order)) /
            (2.0 * h);
        if (std::abs(dg) == 0.0) break;
        const cplx dx = g / dg;
        x -= dx;
        if (std::abs(dx) < 1e-14 && std::abs(root_condition(x, b, truncation_order)) < 1e-11) {
            converged = true;
            break;
        }
    }
    if (!converged || !(std::abs(x) < 1.0))
        throw NumericsError("characteristic_exponent: no root with |x| < 1 at b = " +
                            format_double(b) + " (outside perturbative validity)");
    out.exponent_x = x;

    // harmonics as forward products of the ratio ladders:
    // C_{2n} = R_n ... R_1, C_{-2n} = L_n ... L_1
    {
        const cplx beta = -1.0 + x;
        std::vector<cplx> rlad(static_cast<std::size_t>(truncation_order + 2), 0.0);
        std::vector<cplx> llad(static_cast<std::size_t>(truncation_order + 2), 0.0);
        for (int n = truncation_order; n >= 1; --n) {
            rlad[static_cast<std::size_t>(n)] =
                1.0 / (d_coeff(n, beta, b) - rlad[static_cast<std::size_t>(n + 1)]);
            llad[static_cast<std::size_t>(n)] =
                1.0 / (d_coeff(-n, beta, b) - llad[static_cast<std::size_t>(n + 1)]);
        }
        cplx cpos = 1.0, cneg = 1.0;
        for (int n = 1; n <= truncation_order; ++n) {
            cpos *= rlad[static_cast<std::size_t>(n)];
            cneg *= llad[static_cast<std::size_t>(n)];
            out.harmonics[static_cast<std::size_t>(truncation_order + n)] = cpos;
            out.harmonics[static_cast<std::size_t>(truncation_order - n)] = cneg;
        }
    }
    return out;
}

MathieuSolution coefficients_from_initial(double q0, double p0, double phi, double b) {
    if (q0 == 0.0 && p0 == 0.0)
        throw ValidationError("coefficients_from_initial: (q0, p0) = (0, 0)");
    if (!(std::abs(b) < 1.0))
        throw ValidationError("coefficients_from_initial: need |b| < 1");

    const double phip = 0.5 * phi + 0.25 * kPi;
    const double c = std::cos(phip), s = std::sin(phip);
    const double half_b = 0.5 * b;
    // rows: [c, s; -(s + hb c), c + hb s]
    const double det = 1.0 + half_b * std::sin(2.0 * phip);
    if (std::abs(det) < 1e-12) {
        const double cond = (1.0 + std::abs(half_b)) / std::abs(det);
        throw NumericsError("coefficients_from_initial: singular system, condition ~" +
                            format_double(cond));
    }
    MathieuSolution sol;
    sol.a_minus = (q0 * (c + half_b * s) - s * p0) / det;
    sol.a_plus = (c * p0 + q0 * (s + half_b * c)) / det;
    sol.phi_prime = phip;
    sol.rate_minus = 0.5 * b;   // (gamma + Gamma)/2 at w = 1, gamma = 0
    sol.rate_plus = -0.5 * b;   // (gamma - Gamma)/2
    sol.q0 = q0;
    sol.p0 = p0;
    sol.b = b;
    return sol;
}

double analytic_trajectory(const MathieuSolution& sol, const OscillatorParams& params,
                           const Drive& drive, double t) {
    if (t < 0.0) throw ValidationError("analytic_trajectory: t must be >= 0");
    const double rm = 0.5 * (params.gamma + drive.gamma_mod);
    const double rp = 0.5 * (params.gamma - drive.gamma_mod);
    const double arg = params.omega * t + sol.phi_prime;
    return sol.a_minus * std::exp(-rm * t) * std::cos(arg) +
           sol.a_plus * std::exp(-rp * t) * std::sin(arg);
}

double optimal_phase(double q0, double p0, double b) {
    if (q0 == 0.0 && p0 == 0.0)
        throw ValidationError("optimal_phase: undefined for (q0, p0) = (0, 0)");
    if (!std::isfinite(q0) || !std::isfinite(p0) || !std::isfinite(b))
        throw ValidationError("optimal_phase: inputs must be finite");
    return wrap_phase(0.5 * kPi + 2.0 * std::atan2(2.0 * q0, 2.0 * p0 + b * q0));
}

double amplitude_ratio_estimate(double q0, double p0, double b) {
    if (q0 == 0.0)
        throw ValidationError("amplitude_ratio_estimate: q0 = 0 (estimate undefined)");
    if (b == 0.0)
        throw ValidationError("amplitude_ratio_estimate: b = 0 (estimate undefined)");
    return 2.0 * (q0 * q0 - p0 * p0) / (b * q0 * q0);
}

double turning_time(const MathieuSolution& sol, const Drive& drive) {
    if (!(drive.gamma_mod > 0.0))
        throw ValidationError("turning_time: Gamma must be > 0");
    const double am = std::abs(sol.a_minus), ap = std::abs(sol.a_plus);
    if (ap == 0.0) return std::numeric_limits<double>::infinity();
    if (am <= ap) return 0.0;
    return std::log(am / ap) / drive.gamma_mod;
}

} // namespace phasecool
