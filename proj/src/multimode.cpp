#include "phasecool/multimode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "phasecool/analysis.hpp"
#include "phasecool/mathieu.hpp"
#include "kernel.hpp"

namespace phasecool {

namespace {

// Deterministic working order: ascending (omega, gamma, n_th, input index).
// Streams, band membership and the per-step loop all follow this order, so a
// relabeling of the input modes permutes the outputs bit for bit.
std::vector<int> canonical_order(const std::vector<OscillatorParams>& modes) {
    std::vector<int> order(modes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ma = modes[static_cast<std::size_t>(a)];
        const auto& mb = modes[static_cast<std::size_t>(b)];
        return std::tie(ma.omega, ma.gamma, ma.n_th, a) < std::tie(mb.omega, mb.gamma, mb.n_th, b);
    });
    return order;
}

std::vector<std::vector<int>> partition_modes(const std::vector<OscillatorParams>& modes,
                                              double resolution) {
    if (modes.empty()) throw ValidationError("multimode: mode set must not be empty");
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw ValidationError("multimode: band resolution must be finite and > 0 (got " +
                              format_double(resolution) + ")");
    const auto order = canonical_order(modes);
    std::vector<std::vector<int>> bands;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const double w = modes[static_cast<std::size_t>(order[i])].omega;
        const double prev =
            i == 0 ? -1.0 : modes[static_cast<std::size_t>(order[i - 1])].omega;
        if (i == 0 || !(w - prev < resolution)) bands.emplace_back();
        bands.back().push_back(order[i]);
    }
    return bands;
}

double band_frequency(const std::vector<OscillatorParams>& modes, const std::vector<int>& band) {
    double sum = 0.0;
    for (int j : band) sum += modes[static_cast<std::size_t>(j)].omega;
    return sum / static_cast<double>(band.size());
}

void check_set(const ModeSet& set) {
    if (set.modes.empty()) throw ValidationError("multimode: mode set must not be empty");
    if (set.bands.empty() || set.drives.size() != set.bands.size())
        throw ValidationError("multimode: need exactly one drive per band (got " +
                              std::to_string(set.drives.size()) + " drives for " +
                              std::to_string(set.bands.size()) + " bands)");
    std::vector<char> seen(set.modes.size(), 0);
    for (const auto& band : set.bands) {
        if (band.empty()) throw ValidationError("multimode: empty band");
        for (int j : band) {
            if (j < 0 || j >= static_cast<int>(set.modes.size()) || seen[static_cast<std::size_t>(j)])
                throw ValidationError("multimode: bands must partition the mode indices");
            seen[static_cast<std::size_t>(j)] = 1;
        }
    }
    for (char s : seen)
        if (!s) throw ValidationError("multimode: bands must partition the mode indices");
}

void validate_settings(const MultimodeSettings& fb) {
    if (fb.update_half_periods < 1)
        throw ValidationError("multimode.update_half_periods: must be >= 1 (got " +
                              std::to_string(fb.update_half_periods) + ")");
    if (fb.max_updates < 0)
        throw ValidationError("multimode.max_updates: must be >= 0");
    if (!(fb.gate_rel >= 0.0) || !std::isfinite(fb.gate_rel))
        throw ValidationError("multimode.gate_rel: must be finite and >= 0");
}

// Same leading-order turning estimate as the single-mode controller; tags a
// band delayed when its re-null interval exceeds the initial estimate.
double turning_estimate(double q, double p, double b, const Drive& drive) {
    const double phi0 = optimal_phase(q, p, 0.0);
    const auto sol = coefficients_from_initial(q, p, phi0, b);
    return turning_time(sol, drive);
}

struct BandState {
    double w = 0.0;        // tone frequency
    double gm = 0.0;       // Gamma of the tone
    double b = 0.0;
    double phi = 0.0;
    double dtau = 0.0;     // K half periods
    double t_next = 0.0;
    double thr = 0.0;      // re-null gate threshold
    long long fire = -1;
    int checks = 0;
    int renulls = 0;
    bool active = false;   // contributes to the force and re-nulls its phase
    std::vector<int> members;  // canonical positions
};

MultimodeResult run_multi(const std::vector<QuadratureState>& ics, const ModeSet& set,
                          const MultimodeSettings& fb, const SimConfig& cfg,
                          std::vector<GaussStream>& streams) {
    validate(cfg);
    check_set(set);
    validate_settings(fb);
    if (cfg.integrator != Integrator::rotation_splitting)
        throw ValidationError("multimode: requires the rotation_splitting integrator");
    if (ics.size() != set.modes.size())
        throw ValidationError("multimode: initial state count must match mode count");

    const std::size_t nmodes = set.modes.size();
    const double dt = cfg.dt;
    const auto order = canonical_order(set.modes);
    std::vector<int> rank(nmodes);  // input index -> canonical position
    for (std::size_t j = 0; j < nmodes; ++j) rank[static_cast<std::size_t>(order[j])] = static_cast<int>(j);

    double wmax = 0.0;
    for (const auto& m : set.modes) wmax = std::max(wmax, m.omega);
    if (dt * wmax > 1e-2)
        throw ValidationError("sim.dt: must resolve the fastest mode, need dt*omega_max <= 1e-2 "
                              "(got " + format_double(dt * wmax) + ")");

    // per-mode constants and state, canonical order
    std::vector<kernel::Rotation> rot(nmodes);
    std::vector<double> amp(nmodes), q(nmodes), p(nmodes);
    const bool noisy = cfg.noise.enabled;
    for (std::size_t j = 0; j < nmodes; ++j) {
        const auto& m = set.modes[static_cast<std::size_t>(order[j])];
        rot[j] = {std::cos(m.omega * dt), std::sin(m.omega * dt), std::exp(-m.gamma * dt)};
        amp[j] = noisy ? std::sqrt(2.0 * m.gamma * m.n_th * dt) : 0.0;
        q[j] = ics[static_cast<std::size_t>(order[j])].q;
        p[j] = ics[static_cast<std::size_t>(order[j])].p;
    }

    const std::size_t nbands = set.bands.size();
    std::vector<BandState> bands(nbands);
    std::vector<int> band_of(nmodes);  // canonical position -> band
    std::vector<FeedbackPlan> plans(nbands);
    bool any_active = false;
    for (std::size_t k = 0; k < nbands; ++k) {
        BandState& bs = bands[k];
        bs.w = band_frequency(set.modes, set.bands[k]);
        bs.gm = set.drives[k].gamma_mod;
        bs.b = set.drives[k].b;
        bs.phi = set.drives[k].phi;
        bs.dtau = static_cast<double>(fb.update_half_periods) * (M_PI / bs.w);
        bs.members.reserve(set.bands[k].size());
        for (int j : set.bands[k]) {
            bs.members.push_back(rank[static_cast<std::size_t>(j)]);
            band_of[static_cast<std::size_t>(rank[static_cast<std::size_t>(j)])] =
                static_cast<int>(k);
        }
        const bool muted = set.bands[k].size() > 1 && !fb.drive_degenerate;
        bs.active = bs.gm != 0.0 && !muted;
        any_active = any_active || bs.active;

        FeedbackPlan& plan = plans[k];
        plan.delta_tau = bs.dtau;
        plan.max_updates = fb.max_updates;
        if (!bs.active) {
            plan.mode = FeedbackMode::single_shot;
            bs.fire = -1;
            continue;
        }
        double qd = 0.0, pd = 0.0;
        for (int m : bs.members) {
            qd += q[static_cast<std::size_t>(m)];
            pd += p[static_cast<std::size_t>(m)];
        }
        if (qd == 0.0 && pd == 0.0)
            throw ValidationError("multimode: zero initial summed quadratures in an actuated "
                                  "band have no defined phase");
        bs.thr = fb.gate_rel * occupancy_of({qd, pd}, Convention::classical);
        bs.phi = optimal_phase(qd, pd, bs.b);
        plan.phase_log.push_back({0.0, qd, pd, bs.phi});
        plan.mode = FeedbackMode::adaptive;
        const double tau0 = turning_estimate(qd, pd, bs.b, set.drives[k]);
        if (tau0 > 0.0 && std::isfinite(tau0) && bs.dtau > tau0) plan.mode = FeedbackMode::delayed;
        bs.t_next = static_cast<double>(bs.checks + 1) * bs.dtau;
        bs.fire = std::llround(bs.t_next / dt);
    }

    const long long nsteps = std::llround(cfg.t_end / dt);
    const long long stride = cfg.sample_stride;
    std::vector<TrajectoryRecord> recs(nmodes);  // canonical order until the end
    for (std::size_t j = 0; j < nmodes; ++j) {
        recs[j].dt = dt;
        recs[j].seed = cfg.seed;
        recs[j].samples.reserve(static_cast<std::size_t>(nsteps / stride) + 2);
    }
    auto record = [&](long long n) {
        const double t = static_cast<double>(n) * dt;
        for (std::size_t j = 0; j < nmodes; ++j) {
            const QuadratureState st{q[j], p[j]};
            recs[j].samples.push_back({t, st, occupancy_of(st, Convention::classical),
                                       bands[static_cast<std::size_t>(band_of[j])].phi});
        }
    };
    record(0);

    std::vector<double> force(nbands, 0.0);
    for (long long n = 1; n <= nsteps; ++n) {
        const double tprev = static_cast<double>(n - 1) * dt;
        double sum = 0.0;
        for (std::size_t k = 0; k < nbands; ++k) {
            if (!bands[k].active) continue;
            force[k] = 2.0 * bands[k].gm * std::cos(2.0 * bands[k].w * tprev + bands[k].phi);
            sum += force[k];
        }
        for (std::size_t j = 0; j < nmodes; ++j) {
            kernel::rotate_damp(q[j], p[j], rot[j]);
            if (fb.shared_drive) {
                if (any_active) p[j] += sum * q[j] * dt;
            } else {
                const auto k = static_cast<std::size_t>(band_of[j]);
                if (bands[k].active) p[j] += force[k] * q[j] * dt;
            }
            if (noisy) p[j] += amp[j] * streams[j].normal();
        }
        if (n % stride == 0) record(n);
        for (std::size_t k = 0; k < nbands; ++k) {
            BandState& bs = bands[k];
            if (n != bs.fire) continue;
            double qd = 0.0, pd = 0.0;
            for (int m : bs.members) {
                qd += q[static_cast<std::size_t>(m)];
                pd += p[static_cast<std::size_t>(m)];
            }
            if (occupancy_of({qd, pd}, Convention::classical) >= bs.thr) {
                bs.phi = optimal_phase(qd, pd, bs.b);
                plans[k].phase_log.push_back({bs.t_next, qd, pd, bs.phi});
                ++bs.renulls;
            }
            ++bs.checks;
            if (fb.max_updates > 0 && bs.renulls >= fb.max_updates) {
                bs.fire = -1;
            } else {
                bs.t_next = static_cast<double>(bs.checks + 1) * bs.dtau;
                bs.fire = std::llround(bs.t_next / dt);
            }
        }
    }

    for (std::size_t j = 0; j < nmodes; ++j) {
        const auto& m = set.modes[static_cast<std::size_t>(order[j])];
        const auto k = static_cast<std::size_t>(band_of[j]);
        auto& meta = recs[j].meta;
        meta["omega"] = format_double(m.omega);
        meta["gamma"] = format_double(m.gamma);
        meta["n_th"] = format_double(m.n_th);
        meta["b"] = format_double(bands[k].b);
        meta["gamma_mod"] = format_double(bands[k].gm);
        meta["dt"] = format_double(dt);
        meta["t_end"] = format_double(cfg.t_end);
        meta["integrator"] = "rotation_splitting";
        meta["noise"] = noisy ? "classical" : "off";
        meta["noise_n_th"] = format_double(noisy ? m.n_th : 0.0);
        meta["sample_stride"] = std::to_string(cfg.sample_stride);
        meta["seed"] = std::to_string(cfg.seed);
        meta["feedback"] = "multimode";
        meta["delta_tau"] = format_double(bands[k].dtau);
        meta["updates"] = std::to_string(bands[k].renulls);
        meta["mode_index"] = std::to_string(order[j]);
        meta["band_index"] = std::to_string(k);
        meta["n_modes"] = std::to_string(nmodes);
        meta["band_active"] = bands[k].active ? "true" : "false";
        meta["update_half_periods"] = std::to_string(fb.update_half_periods);
        meta["shared_drive"] = fb.shared_drive ? "true" : "false";
        meta["drive_degenerate"] = fb.drive_degenerate ? "true" : "false";
        meta["gate_rel"] = format_double(fb.gate_rel);
    }

    MultimodeResult out;
    out.records.resize(nmodes);
    for (std::size_t j = 0; j < nmodes; ++j)
        out.records[static_cast<std::size_t>(order[j])] = std::move(recs[j]);
    out.band_plans = std::move(plans);
    return out;
}

std::vector<GaussStream> stream_plan(std::uint64_t root, std::size_t nmodes) {
    std::vector<GaussStream> streams;
    streams.reserve(nmodes);
    streams.emplace_back(root);  // first mode consumes the trajectory stream itself
    for (std::size_t j = 1; j < nmodes; ++j)
        streams.emplace_back(derive_seed(root, static_cast<std::uint64_t>(j)));
    return streams;
}

} // namespace

std::vector<std::vector<int>> band_partition(const ModeSet& set, double resolution) {
    if (set.modes.empty()) throw ValidationError("multimode: mode set must not be empty");
    if (resolution <= 0.0) {
        for (const auto& d : set.drives) resolution = std::max(resolution, std::abs(d.gamma_mod));
        if (resolution <= 0.0)
            throw ValidationError("multimode: default band resolution Gamma_max is zero with all "
                                  "drives off; pass an explicit resolution > 0");
    }
    return partition_modes(set.modes, resolution);
}

ModeSet make_mode_set(const std::vector<OscillatorParams>& modes, double b, double resolution) {
    if (modes.empty()) throw ValidationError("multimode: mode set must not be empty");
    ModeSet set;
    set.modes.reserve(modes.size());
    for (const auto& m : modes) set.modes.push_back(make_oscillator(m.omega, m.gamma, m.n_th));
    if (resolution <= 0.0) {
        for (const auto& m : set.modes) resolution = std::max(resolution, std::abs(b) * m.omega);
        if (resolution <= 0.0)
            throw ValidationError("multimode: default band resolution Gamma_max is zero at b = 0; "
                                  "pass an explicit resolution > 0");
    }
    set.resolution = resolution;
    set.bands = partition_modes(set.modes, resolution);
    set.drives.reserve(set.bands.size());
    for (const auto& band : set.bands) {
        const double w = band_frequency(set.modes, band);
        set.drives.push_back(make_drive(b, 0.0, make_oscillator(w, 0.0, 0.0)));
    }
    return set;
}

MultimodeResult simulate_multimode(const std::vector<QuadratureState>& ics, const ModeSet& set,
                                   const MultimodeSettings& fb, const SimConfig& cfg) {
    auto streams = stream_plan(cfg.seed, set.modes.size());
    return run_multi(ics, set, fb, cfg, streams);
}

std::vector<EnsembleStats> ensemble_multimode(const ModeSet& set, const MultimodeSettings& fb,
                                              const SimConfig& cfg, int count) {
    validate(cfg);
    check_set(set);
    validate_settings(fb);
    const std::size_t nmodes = set.modes.size();
    const auto order = canonical_order(set.modes);
    const long long nsteps = std::llround(cfg.t_end / cfg.dt);
    std::vector<double> bins;
    for (long long n = 0; n <= nsteps; n += cfg.sample_stride)
        bins.push_back(static_cast<double>(n) * cfg.dt);

    auto series = [&](std::uint64_t seed) {
        auto streams = stream_plan(seed, nmodes);
        std::vector<QuadratureState> ics(nmodes);
        for (std::size_t j = 0; j < nmodes; ++j) {
            const auto& m = set.modes[static_cast<std::size_t>(order[j])];
            ics[static_cast<std::size_t>(order[j])] = sample_thermal_state(m.n_th, streams[j]);
        }
        SimConfig traj_cfg = cfg;
        traj_cfg.seed = seed;
        auto res = run_multi(ics, set, fb, traj_cfg, streams);
        std::vector<std::vector<double>> occ(nmodes);
        for (std::size_t j = 0; j < nmodes; ++j) {
            occ[j].reserve(res.records[j].samples.size());
            for (const auto& s : res.records[j].samples) occ[j].push_back(s.n);
        }
        return occ;
    };
    auto stats = ensemble_aggregate(bins, series, count, cfg.seed);
    for (auto& st : stats) st.master_seed = cfg.seed;
    return stats;
}

double isolated_baseline(const ModeSet& set, int mode_index, const MultimodeSettings& fb,
                         const SimConfig& cfg, int count, double tail_from) {
    check_set(set);
    if (mode_index < 0 || mode_index >= static_cast<int>(set.modes.size()))
        throw ValidationError("multimode: mode_index out of range");
    std::size_t band = 0;
    for (std::size_t k = 0; k < set.bands.size(); ++k)
        for (int j : set.bands[k])
            if (j == mode_index) band = k;
    const double b = set.drives[band].b;
    const auto& mode = set.modes[static_cast<std::size_t>(mode_index)];
    const double res = set.resolution > 0.0 ? set.resolution : mode.omega;
    const ModeSet solo = make_mode_set({mode}, b, res);
    const auto stats = ensemble_multimode(solo, fb, cfg, count);
    return tail_mean(stats[0].time_bins, stats[0].mean_n, tail_from);
}

} // namespace phasecool
