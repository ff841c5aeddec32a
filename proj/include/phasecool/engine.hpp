#pragma once
#include <functional>

#include "phasecool/core.hpp"

namespace phasecool {

// Two integrators for the driven-oscillator Langevin dynamics
//   dq = omega p dt
//   dp = [-omega + 2 Gamma cos(2 omega t + phi)] q dt - gamma p dt
//        + sqrt(2 gamma n_th) dW
//
// transfer_matrix: the explicit one-step matrix scheme, kept verbatim for
// equivalence tests. It injects O(omega^2 dt^2) energy per step (det M =
// 1 + omega^2 dt^2 at gamma = Gamma = 0), which corrupts long cooling runs.
//
// rotation_splitting: production default. Exact rotation by omega dt, exact
// damping factor e^{-gamma dt} on p, then the parametric kick
// 2 Gamma cos(2 omega t_prev + phi) q dt on p (cosine at step-start time,
// kick applied to the rotated position), then the noise kick on p.
enum class Integrator { transfer_matrix, rotation_splitting };

struct NoiseSpec {
    bool enabled = false;
    double n_th = 0.0;  // classical noise strength; kick amp = sqrt(2 gamma n_th dt)

    static NoiseSpec off() { return NoiseSpec{}; }
    static NoiseSpec classical(double n_th) { return NoiseSpec{true, n_th}; }
};

struct SimConfig {
    double dt = 1e-3;   // units 1/omega; 0 < dt <= 1e-2
    double t_end = 0.0;
    Integrator integrator = Integrator::rotation_splitting;
    NoiseSpec noise = NoiseSpec::off();
    int sample_stride = 1;  // record every k-th step
    std::uint64_t seed = 0;
};

void validate(const SimConfig& cfg);  // throws ValidationError

struct StepMatrix {
    double m00, m01, m10, m11;
    double det() const { return m00 * m11 - m01 * m10; }
};

// One-step matrix of the transfer_matrix scheme, cosine at the (n-1)-th grid
// time:  [[1, w dt], [-w dt + 2 Gamma cos(2 w (n-1) dt + phi) dt, 1 - g dt]].
// step_index >= 1.
StepMatrix evolution_matrix(long step_index, const SimConfig& cfg,
                            const OscillatorParams& params, const Drive& drive);

// Advance one step t_{n-1} -> t_n with the configured integrator. Noise, when
// enabled, enters only the p update: sqrt(2 gamma n_th) * sqrt(dt) * N(0,1).
QuadratureState step(const QuadratureState& s, long step_index, const SimConfig& cfg,
                     const OscillatorParams& params, const Drive& drive, GaussStream& rng);

struct PhasePoint {
    double t;
    double phi;
};
// Piecewise-constant phase vs time, sorted by t, first point at t <= 0. Each
// point takes effect at the time-grid step nearest its timestamp.
using PhaseSchedule = std::vector<PhasePoint>;

// Iterates step() from ic over [0, t_end], records every sample_stride-th
// state (plus t = 0) with the active phase. Noise stream seeded from cfg.seed.
TrajectoryRecord simulate(const QuadratureState& ic, const PhaseSchedule& schedule,
                          const SimConfig& cfg, const OscillatorParams& params,
                          const Drive& drive);

// Same, but drawing noise from a caller-owned stream (ensembles sample the IC
// and the noise from one per-trajectory stream). cfg.seed is recorded only.
TrajectoryRecord simulate_stream(const QuadratureState& ic, const PhaseSchedule& schedule,
                                 const SimConfig& cfg, const OscillatorParams& params,
                                 const Drive& drive, GaussStream& rng);

// Deterministic part of the undriven (b = 0) solution:
//   q(t) = e^{-gamma t/2} [q0 cos wt + p0 sin wt],
//   p(t) = e^{-gamma t/2} [p0 cos wt - q0 sin wt].
// n_th is accepted for interface symmetry with the stochastic steady-state
// identity <q^2>_ss = n_th; it does not enter the deterministic part.
QuadratureState unmodulated_closed_form(const QuadratureState& ic, double t,
                                        const OscillatorParams& params, double n_th);

// Noise-free ground-truth oracle: classic fourth-order one-step method on
//   q' = w p,  p' = -w q - gamma p + 2 Gamma cos(2 w t + phi) q
// at small fixed dt. Used as the reference in convergence and envelope tests.
TrajectoryRecord reference_integrate(const QuadratureState& ic, const Drive& drive,
                                     const OscillatorParams& params, double t_end,
                                     double dt = 1e-5, int sample_stride = 100);

using InitialSampler = std::function<QuadratureState(GaussStream&)>;

// count trajectories with per-trajectory seeds derive_seed(cfg.seed, i); the
// sampler draws the IC from the same per-trajectory stream as the noise.
// Aggregation order is fixed regardless of thread count.
EnsembleStats ensemble_run(const InitialSampler& sampler, const PhaseSchedule& schedule,
                           const SimConfig& cfg, const OscillatorParams& params,
                           const Drive& drive, int count);

// Deterministic-aggregation core shared by all ensemble flavors. series(seed)
// returns one or more occupancy series sampled at bin_times (multi-series for
// multimode: one per mode). Trajectories are summed serially inside fixed
// blocks of 8 in index order; blocks run in parallel and partial sums are
// merged serially in block order, so results are bit-identical at any thread
// count.
std::vector<EnsembleStats> ensemble_aggregate(
    const std::vector<double>& bin_times,
    const std::function<std::vector<std::vector<double>>(std::uint64_t seed)>& series,
    int count, std::uint64_t master_seed);

} // namespace phasecool
