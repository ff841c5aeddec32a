// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line with the measured numbers; the process exits nonzero if any fail.
// Tolerances are part of the contract and are pinned here, next to the
// protocol constants that produce the measurements.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <omp.h>
#include <string>
#include <vector>

#include "phasecool/analysis.hpp"
#include "phasecool/config.hpp"
#include "phasecool/feedback.hpp"
#include "phasecool/io.hpp"
#include "phasecool/mathieu.hpp"
#include "phasecool/multimode.hpp"
#include "phasecool/quantum.hpp"

using namespace phasecool;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point t_start;

double elapsed() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
}

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %02d %s: %s [t=%.0fs]\n", id, pass ? "PASS" : "FAIL",
                detail.c_str(), elapsed());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- 1: closed two-component form tracks a high-resolution integration -----
// Undamped oscillator, optimal phase, fixed IC; occupancy envelope of the
// reference run vs the analytic envelope, worst window relative error.
void criterion1() {
    const double tol = 0.05;
    double worst = 0.0;
    for (double b : {0.01, 0.05}) {
        auto osc = make_oscillator(1.0, 0.0, 0.0);
        const double phi = optimal_phase(1.0, 0.0, b);
        auto drive = make_drive(b, phi, osc);
        auto sol = coefficients_from_initial(1.0, 0.0, phi, b);
        const double t_hi = std::min(turning_time(sol, drive), 50.0 / osc.omega);

        auto ref = reference_integrate({1.0, 0.0}, drive, osc, t_hi, 1e-5, 100);
        const auto env = per_period_maxima(ref.samples, osc.omega);
        const double rate_m = osc.gamma + drive.gamma_mod;
        const double rate_p = osc.gamma - drive.gamma_mod;
        for (const auto& ep : env) {
            if (ep.t > t_hi) break;
            // the crest of a decaying envelope sits at the window start, half
            // a window before the reported center timestamp
            const double t0 = ep.t - 0.5 * std::numbers::pi / osc.omega;
            const double closed = 0.5 * (sol.a_minus * sol.a_minus * std::exp(-rate_m * t0) +
                                         sol.a_plus * sol.a_plus * std::exp(-rate_p * t0));
            worst = std::max(worst, std::abs(ep.value - closed) / closed);
        }
    }
    report(1, worst <= tol,
           "closed-form envelope vs reference integration, worst rel err " + num(worst) +
               " (tol " + num(tol) + ")");
}

// --- 2: fitted envelope decay rate equals the induced rate ----------------
// Log-envelope regression over [0, t_min/2]; later windows mix in the
// regrowing antidamped residual.
void criterion2() {
    std::string detail = "fitted rate vs b*omega:";
    bool pass = true;
    for (double b : {0.05, 0.1, 0.25}) {
        const double tol = b > 0.2 ? 0.25 : 0.10;
        auto osc = make_oscillator(1.0, 0.0, 0.0);
        const double phi = optimal_phase(1.0, 0.0, b);
        auto drive = make_drive(b, phi, osc);
        SimConfig cfg;
        cfg.dt = 1e-3;
        cfg.t_end = 8.0 / b;
        cfg.sample_stride = 5;
        auto rec = simulate({1.0, 0.0}, {{0.0, phi}}, cfg, osc, drive);

        const double t_min = occupancy_minimum_time(rec.samples);
        const auto fit = fit_cooling_rate(per_period_maxima(rec.samples, osc.omega),
                                          0.5 * t_min);
        const double rel = std::abs(fit.rate - b * osc.omega) / (b * osc.omega);
        pass = pass && rel <= tol;
        detail += " b=" + num(b) + " err " + num(rel) + " (tol " + num(tol) + ")";
    }
    report(2, pass, detail);
}

// --- 3: single-shot gain across random thermal initial states -------------
// Median of n0/n_min over 20 thermal draws; the median is the ensemble-typical
// statistic (the mean is dominated by near-nulled outliers).
void criterion3() {
    std::string detail = "single-shot median cooling factor:";
    bool pass = true;
    auto osc = make_oscillator(1.0, 0.0, 1e4);
    int block = 0;
    for (double b : {0.05, 0.1}) {
        std::vector<double> factors;
        for (int i = 0; i < 20; ++i) {
            GaussStream rng(derive_seed(909, static_cast<std::uint64_t>(100 * block + i)));
            const QuadratureState ic = sample_thermal_state(osc.n_th, rng);
            const FeedbackPlan plan = plan_single_shot(ic, b);
            const double phi = plan.phase_log.front().phi;
            auto drive = make_drive(b, phi, osc);
            const auto interval = recommended_interval(ic, b, drive, 1e-3);
            SimConfig cfg;
            cfg.dt = 1e-3;
            cfg.t_end = interval.capped ? 50.0 / osc.omega : 2.5 * interval.delta_tau;
            cfg.sample_stride = 5;
            auto rec = simulate(ic, {{0.0, phi}}, cfg, osc, drive);
            double n_min = rec.samples.front().n;
            for (const Sample& s : rec.samples) n_min = std::min(n_min, s.n);
            factors.push_back(occupancy_of(ic, Convention::classical) / n_min);
        }
        const double med = median(factors);
        const double lo = 0.2 / b, hi = 5.0 / b;
        pass = pass && med >= lo && med <= hi;
        detail += " b=" + num(b) + " median " + num(med) + " (bounds [" + num(lo) + ", " +
                  num(hi) + "])";
        ++block;
    }
    report(3, pass, detail);
}

// --- 4: six per-segment feedback steps reach n < 1 from n0 = 1e4 ----------
// "Final" is the occupancy at the sixth update instant, read from the phase
// log; past the last update the (noise-free) run only re-heats on paper via
// the antidamped residual, so the protocol value is the one at the step.
void criterion4() {
    auto osc = make_oscillator(1.0, 0.0, 1e4);
    auto drive = make_drive(0.1, 0.0, osc);
    GaussStream rng(404);
    const QuadratureState ic = sample_thermal_state(osc.n_th, rng);

    AdaptiveSettings settings;
    settings.per_segment = true;
    settings.max_updates = 6;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 400.0;
    cfg.sample_stride = 100;
    auto [rec, plan] = run_adaptive(ic, settings, cfg, osc, drive);

    if (plan.phase_log.size() < 7) {
        report(4, false,
               "six-step cooldown: only " + num(static_cast<double>(plan.phase_log.size() - 1)) +
                   " updates fit in t_end");
        return;
    }
    const auto& last = plan.phase_log[6];
    const double n6 = occupancy_of({last.q, last.p}, Convention::classical);
    report(4, n6 < 1.0,
           "occupancy after 6 per-segment updates " + num(n6) + " from n0 " +
               num(occupancy_of(ic, Convention::classical)) + " (bound 1)");
}

// --- 5: undriven thermalization of <q^2> ----------------------------------
// 500 noisy trajectories over 10 damping times; late-time ensemble <q^2>
// must sit on the bath value.
void criterion5() {
    const double tol = 0.10;
    auto osc = make_oscillator(1.0, 1e-3, 100.0);
    auto drive = make_drive(0.0, 0.0, osc);
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0 / osc.gamma;
    cfg.integrator = Integrator::rotation_splitting;
    cfg.noise = NoiseSpec::classical(osc.n_th);
    cfg.sample_stride = 1000;
    cfg.seed = 505;

    // one dry trajectory fixes the bin timestamps
    std::vector<double> bins;
    {
        GaussStream rng(0);
        auto rec = simulate_stream({0.0, 0.0}, {{0.0, 0.0}}, cfg, osc, drive, rng);
        for (const Sample& s : rec.samples) bins.push_back(s.t);
    }
    auto series = [&](std::uint64_t seed) {
        GaussStream rng(seed);
        const QuadratureState ic = sample_thermal_state(osc.n_th, rng);
        auto rec = simulate_stream(ic, {{0.0, 0.0}}, cfg, osc, drive, rng);
        std::vector<double> qq;
        qq.reserve(rec.samples.size());
        for (const Sample& s : rec.samples) qq.push_back(s.state.q * s.state.q);
        return std::vector<std::vector<double>>{qq};
    };
    auto stats = ensemble_aggregate(bins, series, 500, cfg.seed).front();
    const double late = tail_mean(stats.time_bins, stats.mean_n, 0.8 * cfg.t_end);
    const double rel = std::abs(late - osc.n_th) / osc.n_th;
    report(5, rel <= tol,
           "late <q^2> " + num(late) + " vs bath " + num(osc.n_th) + ", rel err " + num(rel) +
               " (tol " + num(tol) + ")");
}

// --- 6: noisy feedback ensemble reaches the classical limit ---------------
// Update interval 2*pi keeps Gamma*dtau small so the frequent-update floor
// gamma*n_th/(gamma+Gamma) applies.
void criterion6() {
    const double tol = 0.30;
    auto osc = make_oscillator(1.0, 1e-6, 1e4);
    auto drive = make_drive(0.05, 0.0, osc);
    AdaptiveSettings settings;
    settings.delta_tau = 2.0 * std::numbers::pi;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 20.0 / drive.gamma_mod;
    cfg.noise = NoiseSpec::classical(osc.n_th);
    cfg.sample_stride = 100;
    cfg.seed = 606;
    const double n_th = osc.n_th;
    InitialSampler sampler = [n_th](GaussStream& rng) {
        return sample_thermal_state(n_th, rng);
    };
    // 200 trajectories: the tail mean of 100 scatters +-5 points of relative
    // error across seeds, which crowds the tolerance
    auto stats = ensemble_run_adaptive(sampler, settings, cfg, osc, drive, 200);
    const double late = tail_mean(stats.time_bins, stats.mean_n, 0.8 * cfg.t_end);
    const double target = osc.gamma / drive.gamma_mod * (osc.n_th + 0.5);
    const double rel = std::abs(late - target) / target;
    report(6, rel <= tol,
           "late mean occupancy " + num(late) + " vs limit " + num(target) + ", rel err " +
               num(rel) + " (tol " + num(tol) + ")");
}

// --- 7: closed variance formula vs direct quadrature ----------------------
void criterion7() {
    const double tol = 1e-6, tol0 = 1e-8;
    const double gamma = 1e-3, n_th = 100.0;
    const double phis[] = {0.0, std::numbers::pi / 2, std::numbers::pi,
                           3 * std::numbers::pi / 2};
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double ratio = 2.0 * std::pow(5e4, i / 19.0);
        for (double phi : phis) {
            auto cfg = make_spectral(gamma, ratio * gamma, phi, n_th);
            const double closed = position_variance_closed(cfg);
            const double quad = position_variance_quadrature(cfg);
            worst = std::max(worst, std::abs(closed - quad) / std::abs(closed));
        }
    }
    const double undriven = position_variance_closed(make_spectral(gamma, 0.0, 0.0, n_th));
    const double rel0 = std::abs(undriven - (n_th + 0.5)) / (n_th + 0.5);
    report(7, worst <= tol && rel0 <= tol0,
           "closed vs quadrature worst rel diff " + num(worst) + " (tol " + num(tol) +
               "), undriven recovery rel err " + num(rel0) + " (tol " + num(tol0) + ")");
}

// --- 8: quantum limit value ------------------------------------------------
void criterion8() {
    const double expected = 0.20001, tol = 1e-5;
    const auto cfg = make_spectral(1e-6, 0.05, std::numbers::pi / 2, 1e4);
    const double limit = final_occupancy_limit(cfg);
    report(8, std::abs(limit - expected) <= tol,
           "final occupancy limit " + format_double(limit) + " vs " + format_double(expected) +
               " (tol " + num(tol) + ")");
}

// --- 9: simultaneous multimode cooling -------------------------------------
// Frozen protocol: b=0.03, spacing 0.3, K=8 half-periods between updates,
// no measurement gate. K balances antidamped regrowth between updates (large
// K) against phase-jump spectral broadening reaching neighbour bands (small
// K); b and the spacing bound the static off-resonant cross-talk.
void criterion9() {
    const double factor = 2.0;
    const double b = 0.03, gamma_rel = 1e-6, n_th = 1e5;
    const int count = 48;
    MultimodeSettings fb;
    fb.update_half_periods = 8;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 700.0;
    cfg.noise = NoiseSpec::classical(0.0);  // per-mode strength from each bath
    cfg.sample_stride = 700;
    const double tail = 0.7 * cfg.t_end;

    auto build = [&](const std::vector<double>& omegas) {
        std::vector<OscillatorParams> modes;
        for (double w : omegas) modes.push_back(make_oscillator(w, gamma_rel * w, n_th));
        return make_mode_set(modes, b);
    };

    // resolved comb: every mode within a factor of its isolated baseline
    std::vector<double> grid_res;
    for (int j = 0; j < 8; ++j) grid_res.push_back(0.7 + 0.3 * j);
    auto set_res = build(grid_res);
    bool pass = true;
    double worst_ratio = 0.0;
    {
        std::vector<double> iso(8);
        for (int j = 0; j < 8; ++j) {
            SimConfig c = cfg;
            c.seed = 200 + static_cast<std::uint64_t>(j);
            iso[static_cast<std::size_t>(j)] = isolated_baseline(set_res, j, fb, c, count, tail);
        }
        SimConfig c = cfg;
        c.seed = 5;
        auto stats = ensemble_multimode(set_res, fb, c, count);
        for (int j = 0; j < 8; ++j) {
            const auto& st = stats[static_cast<std::size_t>(j)];
            const double ratio =
                tail_mean(st.time_bins, st.mean_n, tail) / iso[static_cast<std::size_t>(j)];
            worst_ratio = std::max(worst_ratio, std::max(ratio, 1.0 / ratio));
            pass = pass && ratio <= factor && ratio >= 1.0 / factor;
        }
    }

    // degenerate pair: members hold near n0 while the resolved modes cool.
    // n0 is the ensemble's own initial mean, not the nominal bath value: a
    // 48-draw mean of exponentially distributed occupancies sits 10-50% off
    // the bath value, and the criterion tests drift, not sampling noise.
    double worst_member = 0.0, worst_cool = 0.0;
    {
        auto set_deg = build({0.7, 1.0, 1.3, 1.6, 1.6, 1.9, 2.2, 2.5});
        SimConfig c = cfg;
        c.seed = 6;
        auto stats = ensemble_multimode(set_deg, fb, c, count);
        for (int j : {3, 4}) {
            const auto& st = stats[static_cast<std::size_t>(j)];
            const double ratio = tail_mean(st.time_bins, st.mean_n, tail) / st.mean_n[0];
            worst_member = std::max(worst_member, std::max(ratio, 1.0 / ratio));
            pass = pass && ratio <= factor && ratio >= 1.0 / factor;
        }
        for (int j : {0, 1, 2, 5, 6, 7}) {
            const auto& st = stats[static_cast<std::size_t>(j)];
            const double frac = tail_mean(st.time_bins, st.mean_n, tail) / st.mean_n[0];
            worst_cool = std::max(worst_cool, frac);
            pass = pass && frac <= 0.01;  // cooled: at least 100x below n0
        }
    }
    report(9, pass,
           "resolved-vs-isolated worst factor " + num(worst_ratio) + " (bound " + num(factor) +
               "), degenerate members worst factor " + num(worst_member) + " (bound " +
               num(factor) + "), resolved-in-degenerate worst n/n0 " + num(worst_cool) +
               " (bound 0.01)");
}

// --- 10: bitwise determinism across thread counts --------------------------
void criterion10() {
    auto osc = make_oscillator(1.0, 1e-4, 50.0);
    auto drive = make_drive(0.05, 0.0, osc);
    AdaptiveSettings settings;
    settings.delta_tau = 2.0 * std::numbers::pi;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 60.0;
    cfg.noise = NoiseSpec::classical(osc.n_th);
    cfg.sample_stride = 50;
    cfg.seed = 1010;
    const double n_th = osc.n_th;
    InitialSampler sampler = [n_th](GaussStream& rng) {
        return sample_thermal_state(n_th, rng);
    };

    std::vector<OscillatorParams> modes = {make_oscillator(0.9, 1e-4, 40.0),
                                           make_oscillator(1.7, 1e-4, 40.0)};
    auto set = make_mode_set(modes, 0.05);
    MultimodeSettings fb;
    fb.update_half_periods = 2;

    std::vector<std::string> bytes;
    for (int threads : {1, 3}) {
        omp_set_num_threads(threads);
        std::string all = ensemble_csv(
            ensemble_run_adaptive(sampler, settings, cfg, osc, drive, 24));
        for (const auto& st : ensemble_multimode(set, fb, cfg, 16)) all += ensemble_csv(st);
        bytes.push_back(std::move(all));
    }
    report(10, bytes[0] == bytes[1],
           bytes[0] == bytes[1]
               ? "ensemble and multimode outputs byte-identical at 1 vs 3 threads"
               : "outputs differ between thread counts");
}

} // namespace

int main() {
    t_start = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
