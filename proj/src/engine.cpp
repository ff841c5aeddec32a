#include "phasecool/engine.hpp"

#include <omp.h>

#include <cmath>
#include <string>

#include "kernel.hpp"

namespace phasecool {

void validate(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || cfg.dt > 1e-2)
        throw ValidationError("sim.dt: need 0 < dt <= 1e-2 (units 1/omega), got " +
                              format_double(cfg.dt));
    if (!(cfg.t_end > 0.0))
        throw ValidationError("sim.t_end: must be > 0, got " + format_double(cfg.t_end));
    if (cfg.sample_stride < 1)
        throw ValidationError("sim.sample_stride: must be >= 1");
    if (cfg.noise.enabled && cfg.noise.n_th < 0.0)
        throw ValidationError("sim.noise: n_th must be >= 0");
}

StepMatrix evolution_matrix(long step_index, const SimConfig& cfg,
                            const OscillatorParams& params, const Drive& drive) {
    if (step_index < 1)
        throw ValidationError("evolution_matrix: step_index must be >= 1");
    const double w = params.omega, dt = cfg.dt;
    const double tprev = static_cast<double>(step_index - 1) * dt;
    const double force = 2.0 * drive.gamma_mod * std::cos(2.0 * w * tprev + drive.phi);
    return StepMatrix{1.0, w * dt, -w * dt + force * dt, 1.0 - params.gamma * dt};
}

QuadratureState step(const QuadratureState& s, long step_index, const SimConfig& cfg,
                     const OscillatorParams& params, const Drive& drive, GaussStream& rng) {
    if (step_index < 1)
        throw ValidationError("step: step_index must be >= 1");
    const double w = params.omega, dt = cfg.dt, g = params.gamma;
    const double tprev = static_cast<double>(step_index - 1) * dt;
    const double amp =
        cfg.noise.enabled ? std::sqrt(2.0 * g * cfg.noise.n_th * dt) : 0.0;
    QuadratureState out;
    if (cfg.integrator == Integrator::transfer_matrix) {
        const double force = 2.0 * drive.gamma_mod * std::cos(2.0 * w * tprev + drive.phi);
        out.q = s.q + w * dt * s.p;
        out.p = (-w * dt + force * dt) * s.q + (1.0 - g * dt) * s.p;
    } else {
        const kernel::Rotation rot{std::cos(w * dt), std::sin(w * dt), std::exp(-g * dt)};
        out.q = s.q;
        out.p = s.p;
        kernel::rotate_damp(out.q, out.p, rot);
        if (drive.gamma_mod != 0.0) {
            const double force = 2.0 * drive.gamma_mod * std::cos(2.0 * w * tprev + drive.phi);
            out.p += force * out.q * dt;
        }
    }
    if (cfg.noise.enabled) out.p += amp * rng.normal();
    return out;
}

namespace {

void check_schedule(const PhaseSchedule& schedule) {
    if (schedule.empty())
        throw ValidationError("phase schedule: empty (must cover [0, t_end])");
    if (schedule.front().t > 0.0)
        throw ValidationError("phase schedule: gap before first point (t0 = " +
                              format_double(schedule.front().t) + " > 0)");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i].t > schedule[i - 1].t))
            throw ValidationError("phase schedule: timestamps must be strictly increasing");
}

void fill_meta(TrajectoryRecord& rec, const SimConfig& cfg, const OscillatorParams& params,
               const Drive& drive) {
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
}

} // namespace

TrajectoryRecord simulate_stream(const QuadratureState& ic, const PhaseSchedule& schedule,
                                 const SimConfig& cfg, const OscillatorParams& params,
                                 const Drive& drive, GaussStream& rng) {
    validate(cfg);
    check_schedule(schedule);

    const double w = params.omega, dt = cfg.dt, g = params.gamma;
    const double gm = drive.gamma_mod;
    const long nsteps = std::llround(cfg.t_end / dt);
    const long stride = cfg.sample_stride;
    const kernel::Rotation rot{std::cos(w * dt), std::sin(w * dt), std::exp(-g * dt)};
    const bool noisy = cfg.noise.enabled;
    const double amp = noisy ? std::sqrt(2.0 * g * cfg.noise.n_th * dt) : 0.0;

    // schedule points fire at the grid step nearest their timestamp
    std::vector<long> fire(schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k)
        fire[k] = std::llround(schedule[k].t / dt);

    TrajectoryRecord rec;
    rec.dt = dt;
    rec.seed = cfg.seed;
    fill_meta(rec, cfg, params, drive);
    rec.samples.reserve(static_cast<std::size_t>(nsteps / stride) + 2);

    double q = ic.q, p = ic.p;
    std::size_t next_pt = 0;
    double phi = schedule.front().phi;
    while (next_pt < schedule.size() && fire[next_pt] <= 0) phi = schedule[next_pt++].phi;

    auto record = [&](long n) {
        const double t = static_cast<double>(n) * dt;
        rec.samples.push_back({t, {q, p}, 0.5 * (q * q + p * p), phi});
    };
    record(0);

    const bool rotation = cfg.integrator == Integrator::rotation_splitting;
    for (long n = 1; n <= nsteps; ++n) {
        while (next_pt < schedule.size() && fire[next_pt] <= n - 1) phi = schedule[next_pt++].phi;
        const double tprev = static_cast<double>(n - 1) * dt;
        if (rotation) {
            kernel::rotate_damp(q, p, rot);
            if (gm != 0.0) p += 2.0 * gm * std::cos(2.0 * w * tprev + phi) * q * dt;
        } else {
            const double force = 2.0 * gm * std::cos(2.0 * w * tprev + phi);
            const double qn = q + w * dt * p;
            p = (-w * dt + force * dt) * q + (1.0 - g * dt) * p;
            q = qn;
        }
        if (noisy) p += amp * rng.normal();
        if (n % stride == 0) record(n);
    }
    return rec;
}

TrajectoryRecord simulate(const QuadratureState& ic, const PhaseSchedule& schedule,
                          const SimConfig& cfg, const OscillatorParams& params,
                          const Drive& drive) {
    GaussStream rng(cfg.seed);
    return simulate_stream(ic, schedule, cfg, params, drive, rng);
}

QuadratureState unmodulated_closed_form(const QuadratureState& ic, double t,
                                        const OscillatorParams& params,
                                        [[maybe_unused]] double n_th) {
    if (t < 0.0) throw ValidationError("unmodulated_closed_form: t must be >= 0");
    const double e = std::exp(-0.5 * params.gamma * t);
    const double c = std::cos(params.omega * t), s = std::sin(params.omega * t);
    return QuadratureState{e * (ic.q * c + ic.p * s), e * (ic.p * c - ic.q * s)};
}

TrajectoryRecord reference_integrate(const QuadratureState& ic, const Drive& drive,
                                     const OscillatorParams& params, double t_end,
                                     double dt, int sample_stride) {
    if (!(dt > 0.0) || !(t_end > 0.0) || sample_stride < 1)
        throw ValidationError("reference_integrate: need dt > 0, t_end > 0, stride >= 1");
    const double w = params.omega, g = params.gamma, gm = drive.gamma_mod, phi = drive.phi;
    const long nsteps = std::llround(t_end / dt);

    auto dq = [&](double p) { return w * p; };
    auto dp = [&](double t, double q, double p) {
        return -w * q - g * p + 2.0 * gm * std::cos(2.0 * w * t + phi) * q;
    };

    TrajectoryRecord rec;
    rec.dt = dt;
    SimConfig meta_cfg;
    meta_cfg.dt = dt;
    meta_cfg.t_end = t_end;
    meta_cfg.sample_stride = sample_stride;
    fill_meta(rec, meta_cfg, params, drive);
    rec.meta["integrator"] = "reference_rk4";
    rec.samples.reserve(static_cast<std::size_t>(nsteps / sample_stride) + 2);

    double q = ic.q, p = ic.p;
    rec.samples.push_back({0.0, {q, p}, 0.5 * (q * q + p * p), phi});
    for (long n = 1; n <= nsteps; ++n) {
        const double t = static_cast<double>(n - 1) * dt;
        const double k1q = dq(p), k1p = dp(t, q, p);
        const double k2q = dq(p + 0.5 * dt * k1p), k2p = dp(t + 0.5 * dt, q + 0.5 * dt * k1q, p + 0.5 * dt * k1p);
        const double k3q = dq(p + 0.5 * dt * k2p), k3p = dp(t + 0.5 * dt, q + 0.5 * dt * k2q, p + 0.5 * dt * k2p);
        const double k4q = dq(p + dt * k3p), k4p = dp(t + dt, q + dt * k3q, p + dt * k3p);
        q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if (n % sample_stride == 0) {
            const double ts = static_cast<double>(n) * dt;
            rec.samples.push_back({ts, {q, p}, 0.5 * (q * q + p * p), phi});
        }
    }
    return rec;
}

std::vector<EnsembleStats> ensemble_aggregate(
    const std::vector<double>& bin_times,
    const std::function<std::vector<std::vector<double>>(std::uint64_t seed)>& series,
    int count, std::uint64_t master_seed) {
    if (count < 1) throw ValidationError("ensemble: count must be >= 1");
    if (bin_times.empty()) throw ValidationError("ensemble: no time bins");

    constexpr int kBlock = 8;  // fixed block size: determinism at any thread count
    const int nblocks = (count + kBlock - 1) / kBlock;
    const std::size_t nbins = bin_times.size();

    struct BlockSums {
        std::vector<std::vector<double>> sum, sumsq;  // [series][bin]
        int nseries = -1;
    };
    std::vector<BlockSums> blocks(static_cast<std::size_t>(nblocks));
    std::string first_error;
    bool failed = false;

#pragma omp parallel for schedule(dynamic, 1)
    for (int bi = 0; bi < nblocks; ++bi) {
        try {
            BlockSums& bs = blocks[static_cast<std::size_t>(bi)];
            const int lo = bi * kBlock;
            const int hi = std::min(count, lo + kBlock);
            for (int i = lo; i < hi; ++i) {
                auto occ = series(derive_seed(master_seed, static_cast<std::uint64_t>(i)));
                if (bs.nseries < 0) {
                    bs.nseries = static_cast<int>(occ.size());
                    bs.sum.assign(occ.size(), std::vector<double>(nbins, 0.0));
                    bs.sumsq.assign(occ.size(), std::vector<double>(nbins, 0.0));
                }
                if (static_cast<int>(occ.size()) != bs.nseries)
                    throw NumericsError("ensemble: inconsistent series count across trajectories");
                for (std::size_t s = 0; s < occ.size(); ++s) {
                    if (occ[s].size() != nbins)
                        throw NumericsError("ensemble: series length does not match time bins");
                    for (std::size_t j = 0; j < nbins; ++j) {
                        bs.sum[s][j] += occ[s][j];
                        bs.sumsq[s][j] += occ[s][j] * occ[s][j];
                    }
                }
            }
        } catch (const std::exception& e) {
#pragma omp critical
            {
                if (!failed) {
                    failed = true;
                    first_error = e.what();
                }
            }
        }
    }
    if (failed) throw NumericsError(first_error);

    const int nseries = blocks.front().nseries;
    for (const auto& bs : blocks)
        if (bs.nseries != nseries)
            throw NumericsError("ensemble: inconsistent series count across blocks");

    std::vector<EnsembleStats> out(static_cast<std::size_t>(nseries));
    for (int s = 0; s < nseries; ++s) {
        auto& st = out[static_cast<std::size_t>(s)];
        st.time_bins = bin_times;
        st.mean_n.assign(nbins, 0.0);
        st.var_n.assign(nbins, 0.0);
        st.count = count;
        st.master_seed = master_seed;
        for (int bi = 0; bi < nblocks; ++bi) {  // serial merge in block order
            const auto& bs = blocks[static_cast<std::size_t>(bi)];
            for (std::size_t j = 0; j < nbins; ++j) {
                st.mean_n[j] += bs.sum[static_cast<std::size_t>(s)][j];
                st.var_n[j] += bs.sumsq[static_cast<std::size_t>(s)][j];
            }
        }
        for (std::size_t j = 0; j < nbins; ++j) {
            const double mean = st.mean_n[j] / count;
            const double msq = st.var_n[j] / count;
            st.mean_n[j] = mean;
            st.var_n[j] = std::max(0.0, msq - mean * mean);
        }
    }
    return out;
}

EnsembleStats ensemble_run(const InitialSampler& sampler, const PhaseSchedule& schedule,
                           const SimConfig& cfg, const OscillatorParams& params,
                           const Drive& drive, int count) {
    validate(cfg);
    check_schedule(schedule);
    const long nsteps = std::llround(cfg.t_end / cfg.dt);
    std::vector<double> bins;
    for (long n = 0; n <= nsteps; n += cfg.sample_stride)
        bins.push_back(static_cast<double>(n) * cfg.dt);

    auto series = [&](std::uint64_t seed) {
        GaussStream rng(seed);
        const QuadratureState ic = sampler(rng);
        TrajectoryRecord rec = simulate_stream(ic, schedule, cfg, params, drive, rng);
        std::vector<double> occ(rec.samples.size());
        for (std::size_t i = 0; i < rec.samples.size(); ++i) occ[i] = rec.samples[i].n;
        return std::vector<std::vector<double>>{std::move(occ)};
    };
    return ensemble_aggregate(bins, series, count, cfg.seed).front();
}

} // namespace phasecool
