#include "phasecool/feedback.hpp"

#include <cmath>
#include <string>

#include "phasecool/mathieu.hpp"

namespace phasecool {

namespace {

// Turning time of the leading-order (b = 0 convention) decomposition. The
// exact-nulling phase would always give A+ = 0 and an infinite estimate.
double turning_estimate(const QuadratureState& s, double b, const Drive& drive) {
    const double phi0 = optimal_phase(s.q, s.p, 0.0);
    const auto sol = coefficients_from_initial(s.q, s.p, phi0, b);
    return turning_time(sol, drive);
}

long long snap_count(double interval, double half_period, double dt) {
    long long k = std::llround(interval / half_period);
    if (k < 1) k = 1;
    const long long floor_k = static_cast<long long>(std::ceil(10.0 * dt / half_period));
    if (k < floor_k) k = floor_k;
    return k;
}

void validate_settings(const AdaptiveSettings& set, const SimConfig& cfg) {
    if (set.max_updates < 0)
        throw ValidationError("feedback.max_updates: must be >= 0 (got " +
                              std::to_string(set.max_updates) + ")");
    if (set.per_segment) {
        if (!std::isfinite(set.cap) || set.cap < 10.0 * cfg.dt)
            throw ValidationError("feedback.cap: must be finite and >= 10*dt");
    } else {
        if (!std::isfinite(set.delta_tau) || set.delta_tau < 10.0 * cfg.dt)
            throw ValidationError("feedback.delta_tau: measurement floor requires >= 10*dt (got " +
                                  format_double(set.delta_tau) + " at dt = " +
                                  format_double(cfg.dt) + ")");
    }
}

std::pair<TrajectoryRecord, FeedbackPlan> run_core(const QuadratureState& ic,
                                                   const AdaptiveSettings& set,
                                                   const SimConfig& cfg,
                                                   const OscillatorParams& params,
                                                   const Drive& drive, GaussStream& rng) {
    validate(cfg);
    validate_settings(set, cfg);
    if (ic.q == 0.0 && ic.p == 0.0)
        throw ValidationError("feedback: zero initial state has no defined phase");

    const double h = M_PI / params.omega;
    const double b = drive.b;

    FeedbackPlan plan;
    plan.max_updates = set.max_updates;
    plan.mode = FeedbackMode::adaptive;

    long long k_eff = 0;
    if (set.per_segment) {
        plan.delta_tau = h;
    } else {
        k_eff = snap_count(set.delta_tau, h, cfg.dt);
        plan.delta_tau = static_cast<double>(k_eff) * h;
        const double tau0 = turning_estimate(ic, b, drive);
        if (tau0 > 0.0 && std::isfinite(tau0) && plan.delta_tau > tau0)
            plan.mode = FeedbackMode::delayed;
    }

    Drive active = drive;
    active.phi = optimal_phase(ic.q, ic.p, b);
    plan.phase_log.push_back({0.0, ic.q, ic.p, active.phi});

    // Nominal update times are exact multiples of plan.delta_tau; the
    // simulation fires at the nearest dt step of each nominal time.
    long long updates = 0;
    long long k_next = 0;   // cumulative grid index (per-segment mode)
    double t_next = 0.0;
    long long fire = -1;
    auto schedule_next = [&](const QuadratureState& s) {
        if (set.max_updates > 0 && updates >= set.max_updates) {
            fire = -1;
            return;
        }
        if (set.per_segment) {
            const auto rec = recommended_interval(s, b, drive, cfg.dt);
            const double capped = std::min(rec.delta_tau, set.cap);
            k_next += snap_count(capped, h, cfg.dt);
            t_next = static_cast<double>(k_next) * plan.delta_tau;
        } else {
            t_next = static_cast<double>(updates + 1) * plan.delta_tau;
        }
        fire = std::llround(t_next / cfg.dt);
    };
    schedule_next(ic);

    const long long nsteps = std::llround(cfg.t_end / cfg.dt);
    TrajectoryRecord rec;
    rec.dt = cfg.dt;
    rec.seed = cfg.seed;
    rec.samples.reserve(static_cast<std::size_t>(nsteps / cfg.sample_stride) + 2);
    QuadratureState st = ic;
    auto record = [&](long long n) {
        rec.samples.push_back({static_cast<double>(n) * cfg.dt, st,
                               occupancy_of(st, Convention::classical), active.phi});
    };
    record(0);
    for (long long n = 1; n <= nsteps; ++n) {
        st = step(st, n, cfg, params, active, rng);
        if (n % cfg.sample_stride == 0) record(n);
        if (n == fire) {
            // the new phase takes effect from step n+1, mirroring the engine's
            // schedule semantics; the sample at this step keeps the old phase
            active.phi = optimal_phase(st.q, st.p, b);
            plan.phase_log.push_back({t_next, st.q, st.p, active.phi});
            ++updates;
            schedule_next(st);
        }
    }

    rec.meta["omega"] = format_double(params.omega);
    rec.meta["gamma"] = format_double(params.gamma);
    rec.meta["n_th"] = format_double(params.n_th);
    rec.meta["b"] = format_double(drive.b);
    rec.meta["gamma_mod"] = format_double(drive.gamma_mod);
    rec.meta["dt"] = format_double(cfg.dt);
    rec.meta["t_end"] = format_double(cfg.t_end);
    rec.meta["integrator"] =
        cfg.integrator == Integrator::transfer_matrix ? "transfer_matrix" : "rotation_splitting";
    rec.meta["noise"] = cfg.noise.enabled ? "classical" : "off";
    rec.meta["noise_n_th"] = format_double(cfg.noise.n_th);
    rec.meta["sample_stride"] = std::to_string(cfg.sample_stride);
    rec.meta["seed"] = std::to_string(cfg.seed);
    rec.meta["feedback"] = set.per_segment ? "per_segment" : "fixed_interval";
    rec.meta["delta_tau"] = format_double(plan.delta_tau);
    rec.meta["updates"] = std::to_string(updates);
    return {std::move(rec), std::move(plan)};
}

} // namespace

FeedbackPlan plan_single_shot(const QuadratureState& ic, double b) {
    if (ic.q == 0.0 && ic.p == 0.0)
        throw ValidationError("feedback: zero initial state has no defined phase");
    FeedbackPlan plan;
    plan.mode = FeedbackMode::single_shot;
    plan.phase_log.push_back({0.0, ic.q, ic.p, optimal_phase(ic.q, ic.p, b)});
    return plan;
}

RecommendedInterval recommended_interval(const QuadratureState& state, double b,
                                         const Drive& drive, double dt) {
    if (!(drive.gamma_mod > 0.0))
        throw ValidationError("recommended_interval: requires Gamma > 0");
    if (!std::isfinite(dt) || dt <= 0.0)
        throw ValidationError("recommended_interval: dt must be > 0");
    const double tau = turning_estimate(state, b, drive);
    const double floor = 10.0 * dt;
    RecommendedInterval out;
    if (!(tau > 0.0)) {  // heating-dominated: |A+| already >= |A-|
        out.delta_tau = floor;
        out.floored = true;
        return out;
    }
    const double half = 0.5 * tau;  // +inf passes through to the cap
    if (half >= kIntervalCap) {
        out.delta_tau = kIntervalCap;
        out.capped = true;
    } else if (half < floor) {
        out.delta_tau = floor;
        out.floored = true;
    } else {
        out.delta_tau = half;
    }
    return out;
}

double snap_half_period(double interval, const OscillatorParams& params, double dt) {
    if (!std::isfinite(interval) || interval <= 0.0)
        throw ValidationError("snap_half_period: interval must be finite and > 0");
    const double h = M_PI / params.omega;
    return static_cast<double>(snap_count(interval, h, dt)) * h;
}

std::pair<TrajectoryRecord, FeedbackPlan> run_adaptive(const QuadratureState& ic,
                                                       const AdaptiveSettings& settings,
                                                       const SimConfig& cfg,
                                                       const OscillatorParams& params,
                                                       const Drive& drive) {
    GaussStream rng(cfg.seed);
    return run_core(ic, settings, cfg, params, drive, rng);
}

std::pair<TrajectoryRecord, FeedbackPlan> run_adaptive_stream(const QuadratureState& ic,
                                                              const AdaptiveSettings& settings,
                                                              const SimConfig& cfg,
                                                              const OscillatorParams& params,
                                                              const Drive& drive,
                                                              GaussStream& rng) {
    return run_core(ic, settings, cfg, params, drive, rng);
}

EnsembleStats ensemble_run_adaptive(const InitialSampler& sampler,
                                    const AdaptiveSettings& settings, const SimConfig& cfg,
                                    const OscillatorParams& params, const Drive& drive,
                                    int count) {
    validate(cfg);
    validate_settings(settings, cfg);
    const long long nsteps = std::llround(cfg.t_end / cfg.dt);
    std::vector<double> bins;
    for (long long n = 0; n <= nsteps; n += cfg.sample_stride)
        bins.push_back(static_cast<double>(n) * cfg.dt);
    auto series = [&](std::uint64_t seed) {
        GaussStream rng(seed);
        const QuadratureState ic = sampler(rng);
        auto [rec, plan] = run_core(ic, settings, cfg, params, drive, rng);
        std::vector<double> occ;
        occ.reserve(rec.samples.size());
        for (const auto& s : rec.samples) occ.push_back(s.n);
        return std::vector<std::vector<double>>{std::move(occ)};
    };
    auto stats = ensemble_aggregate(bins, series, count, cfg.seed);
    return std::move(stats.front());
}

} // namespace phasecool
