#pragma once
#include <utility>
#include <vector>

#include "phasecool/engine.hpp"

namespace phasecool {

enum class FeedbackMode { single_shot, adaptive, delayed };

struct PhaseLogEntry {
    double t;    // nominal update time on the half-period grid
    double q;    // measured quadratures at the update step
    double p;
    double phi;  // phase applied from this time on
};

struct FeedbackPlan {
    // Fixed-interval runs: the snapped effective interval; per-segment runs:
    // the half-period grid unit pi/omega. Logged timestamps are exact
    // multiples of this value by construction.
    double delta_tau = 0.0;
    int max_updates = 0;  // 0 = updates continue for the whole run
    FeedbackMode mode = FeedbackMode::single_shot;
    std::vector<PhaseLogEntry> phase_log;  // entry 0 is the t = 0 optimization
};

// Measure once, set the optimal phase, never update. Zero state rejected.
FeedbackPlan plan_single_shot(const QuadratureState& ic, double b);

struct AdaptiveSettings {
    double delta_tau = 0.0;    // requested interval; ignored when per_segment
    int max_updates = 0;       // N; 0 = as many as fit in t_end
    bool per_segment = false;  // delta_tau_j = clamp(tau_j/2) from each measurement
    double cap = 1e6;          // upper clamp of the per-segment interval
};

// Interval cap sentinel: a perfectly nulled antidamped component gives an
// infinite turning time, reported as this value with the capped flag set.
inline constexpr double kIntervalCap = 1e6;

struct RecommendedInterval {
    double delta_tau = 0.0;
    bool floored = false;  // heating-dominated state, floor 10*dt applied
    bool capped = false;   // nulled antidamped part, cap sentinel applied
};

// Heuristic delta_tau = tau/2 where tau is the turning time of the state
// decomposed at the leading-order (b = 0 convention) optimal phase; with the
// exact-nulling phase the antidamped amplitude would always be zero and the
// estimate useless. Raw clamp to [10*dt, kIntervalCap]; snapping to the
// half-period grid happens inside run_adaptive.
RecommendedInterval recommended_interval(const QuadratureState& state, double b,
                                         const Drive& drive, double dt = 1e-3);

// Nearest half-period multiple of interval, at least one half period and at
// least 10*dt (update times must sit on the grid where the amplitude
// decomposition behind optimal_phase is valid).
double snap_half_period(double interval, const OscillatorParams& params, double dt);

// Phase-adaptive run: the initial phase is optimal_phase(ic), then at each
// update time the exact simulated (q, p) is read (noiseless, instantaneous)
// and the phase switches to its optimal value, taking effect from the next
// step. Update times sit on the half-period grid; the simulation fires at the
// nearest dt step of each nominal time. drive.phi is ignored.
//
// Fixed-interval mode requires delta_tau >= 10*dt and tags the plan `delayed`
// when the snapped interval exceeds the initial turning-time estimate.
std::pair<TrajectoryRecord, FeedbackPlan> run_adaptive(const QuadratureState& ic,
                                                       const AdaptiveSettings& settings,
                                                       const SimConfig& cfg,
                                                       const OscillatorParams& params,
                                                       const Drive& drive);

// Same, drawing noise from a caller-owned stream (ensemble use).
std::pair<TrajectoryRecord, FeedbackPlan> run_adaptive_stream(const QuadratureState& ic,
                                                              const AdaptiveSettings& settings,
                                                              const SimConfig& cfg,
                                                              const OscillatorParams& params,
                                                              const Drive& drive,
                                                              GaussStream& rng);

// Ensemble of adaptive trajectories under ensemble_run's determinism
// contract: per-trajectory seeds derive_seed(cfg.seed, i), the sampler draws
// the IC from the same stream as the noise, fixed-block aggregation.
EnsembleStats ensemble_run_adaptive(const InitialSampler& sampler,
                                    const AdaptiveSettings& settings, const SimConfig& cfg,
                                    const OscillatorParams& params, const Drive& drive,
                                    int count);

} // namespace phasecool
