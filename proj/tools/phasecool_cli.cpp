// Command-line front end. Subcommands map onto the library studies; every
// run writes CSV data plus a summary sidecar and prints the paths written.
// Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 I/O failure.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <omp.h>
#include <optional>

#include "phasecool/analysis.hpp"
#include "phasecool/config.hpp"
#include "phasecool/errors.hpp"
#include "phasecool/feedback.hpp"
#include "phasecool/io.hpp"
#include "phasecool/mathieu.hpp"
#include "phasecool/multimode.hpp"
#include "phasecool/presets.hpp"
#include "phasecool/quantum.hpp"

using namespace phasecool;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

void apply_threads(const GlobalArgs& args) {
    int n = args.threads;
    if (n <= 0) {
        if (const char* env = std::getenv("PHASECOOL_THREADS")) n = std::atoi(env);
    }
    if (n > 0) omp_set_num_threads(n);
}

ExperimentConfig load(const GlobalArgs& args) {
    if (args.config_path.empty())
        throw ValidationError("a config file is required (--config PATH)");
    ExperimentConfig cfg = load_config(args.config_path);
    if (args.seed) cfg.sim.seed = *args.seed;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& suffix) {
    ensure_directory(cfg.out_dir);
    return cfg.out_dir + "/" + cfg.prefix + suffix;
}

void emit(const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << f << "\n";
}

QuadratureState initial_state(const ExperimentConfig& cfg, GaussStream& rng) {
    if (cfg.initial.kind == InitialSpec::Kind::fixed)
        return {cfg.initial.q, cfg.initial.p};
    return sample_thermal_state(cfg.initial.n0, rng);
}

int cmd_simulate(const GlobalArgs& args) {
    const ExperimentConfig cfg = load(args);
    GaussStream rng(cfg.sim.seed);
    const QuadratureState ic = initial_state(cfg, rng);

    TrajectoryRecord rec;
    std::vector<std::pair<std::string, std::string>> results;
    results.emplace_back("n0", format_double(occupancy_of(ic, Convention::classical)));

    if (cfg.feedback == FeedbackKind::none) {
        rec = simulate_stream(ic, {{0.0, cfg.drive.phi}}, cfg.sim, cfg.oscillator, cfg.drive,
                              rng);
    } else if (cfg.feedback == FeedbackKind::single_shot) {
        const FeedbackPlan plan = plan_single_shot(ic, cfg.drive.b);
        const double phi = plan.phase_log.front().phi;
        auto drive = make_drive(cfg.drive.b, phi, cfg.oscillator);
        rec = simulate_stream(ic, {{0.0, phi}}, cfg.sim, cfg.oscillator, drive, rng);
        results.emplace_back("phi_optimal", format_double(phi));
        results.emplace_back("turning_time", format_double(plan.delta_tau));
    } else {
        auto [r, plan] = run_adaptive_stream(ic, cfg.feedback_settings, cfg.sim, cfg.oscillator,
                                             cfg.drive, rng);
        rec = std::move(r);
        results.emplace_back("delta_tau", format_double(plan.delta_tau));
        results.emplace_back("phase_updates", std::to_string(plan.phase_log.size() - 1));
    }

    std::vector<double> t, n;
    for (const Sample& s : rec.samples) t.push_back(s.t), n.push_back(s.n);
    double n_min = n.front();
    for (double v : n) n_min = std::min(n_min, v);
    results.emplace_back("min_n", format_double(n_min));
    results.emplace_back("t_min", format_double(occupancy_minimum_time(rec.samples)));
    results.emplace_back("final_n_tail", format_double(tail_mean(t, n, 0.8 * cfg.sim.t_end)));

    const std::string data = out_path(cfg, "_traj.csv");
    const std::string csv = trajectory_csv(rec);
    write_text_file(data, csv);
    results.emplace_back("checksum_" + cfg.prefix + "_traj.csv", checksum_hex(csv));
    const std::string summary = out_path(cfg, "_summary.txt");
    write_text_file(summary, summary_text(manifest_text(cfg), results));
    emit({data, summary});
    return 0;
}

int cmd_ensemble(const GlobalArgs& args) {
    const ExperimentConfig cfg = load(args);
    if (cfg.ensemble_count < 1)
        throw ValidationError("ensemble.count must be >= 1 for the ensemble command");

    const InitialSpec init = cfg.initial;
    InitialSampler sampler = [init](GaussStream& rng) -> QuadratureState {
        if (init.kind == InitialSpec::Kind::fixed) return {init.q, init.p};
        return sample_thermal_state(init.n0, rng);
    };

    EnsembleStats stats;
    if (cfg.feedback == FeedbackKind::none) {
        stats = ensemble_run(sampler, {{0.0, cfg.drive.phi}}, cfg.sim, cfg.oscillator,
                             cfg.drive, cfg.ensemble_count);
    } else if (cfg.feedback == FeedbackKind::single_shot) {
        throw ValidationError(
            "single_shot feedback fixes the phase per trajectory; use the simulate command");
    } else {
        stats = ensemble_run_adaptive(sampler, cfg.feedback_settings, cfg.sim, cfg.oscillator,
                                      cfg.drive, cfg.ensemble_count);
    }

    std::vector<std::pair<std::string, std::string>> results;
    results.emplace_back("count", std::to_string(stats.count));
    results.emplace_back("final_mean_n", format_double(tail_mean(stats.time_bins, stats.mean_n,
                                                                 0.8 * cfg.sim.t_end)));

    const std::string data = out_path(cfg, "_ensemble.csv");
    const std::string csv = ensemble_csv(stats);
    write_text_file(data, csv);
    results.emplace_back("checksum_" + cfg.prefix + "_ensemble.csv", checksum_hex(csv));
    const std::string summary = out_path(cfg, "_summary.txt");
    write_text_file(summary, summary_text(manifest_text(cfg), results));
    emit({data, summary});
    return 0;
}

int cmd_multimode(const GlobalArgs& args) {
    const ExperimentConfig cfg = load(args);
    const ModeSet set = build_mode_set(cfg);
    const int count = std::max(1, cfg.ensemble_count);

    auto stats = ensemble_multimode(set, cfg.modes.settings, cfg.sim, count);

    std::vector<std::pair<std::string, std::string>> results;
    results.emplace_back("count", std::to_string(count));
    std::vector<std::string> files;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        const std::string name = cfg.prefix + "_mode" + std::to_string(j) + ".csv";
        const std::string data = out_path(cfg, "_mode" + std::to_string(j) + ".csv");
        const std::string csv = ensemble_csv(stats[j]);
        write_text_file(data, csv);
        results.emplace_back("checksum_" + name, checksum_hex(csv));
        results.emplace_back("mode" + std::to_string(j) + "_final_mean_n",
                             format_double(tail_mean(stats[j].time_bins, stats[j].mean_n,
                                                     0.8 * cfg.sim.t_end)));
        files.push_back(data);
    }
    const std::string summary = out_path(cfg, "_summary.txt");
    write_text_file(summary, summary_text(manifest_text(cfg), results));
    files.push_back(summary);
    emit(files);
    return 0;
}

int cmd_quantum(const GlobalArgs& args) {
    const ExperimentConfig cfg = load(args);
    const auto spectral = make_spectral(cfg.oscillator.gamma, cfg.drive.gamma_mod,
                                        cfg.drive.phi, cfg.oscillator.n_th);
    const double closed = position_variance_closed(spectral);
    const double quad = position_variance_quadrature(spectral);
    bool fallback = false;
    const double limit = final_occupancy_limit(spectral, &fallback);

    std::vector<std::pair<std::string, std::string>> results;
    results.emplace_back("variance_closed", format_double(closed));
    results.emplace_back("variance_quadrature", format_double(quad));
    results.emplace_back("rel_diff", format_double(std::abs(closed - quad) / std::abs(closed)));
    results.emplace_back("occupancy_limit", format_double(limit));
    results.emplace_back("limit_fallback", fallback ? "true" : "false");

    const std::string summary = out_path(cfg, "_quantum.txt");
    write_text_file(summary, summary_text(manifest_text(cfg), results));
    emit({summary});
    return 0;
}

int cmd_preset(const GlobalArgs& args, const std::string& name) {
    const std::string dir = args.out_dir.empty() ? "." : args.out_dir;
    emit(run_preset(name, dir, args.seed));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-adaptive parametric cooling of mechanical resonators"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    std::uint64_t seed_value = 0;
    app.add_option("--config", args.config_path, "experiment config file");
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
    app.add_option("--out-dir", args.out_dir, "output directory override");
    app.add_option("--threads", args.threads,
                   "worker threads (default: PHASECOOL_THREADS or OpenMP default)");

    auto* sim = app.add_subcommand("simulate", "single trajectory");
    auto* ens = app.add_subcommand("ensemble", "trajectory ensemble statistics");
    auto* multi = app.add_subcommand("multimode", "simultaneous multimode cooling ensemble");
    auto* quant = app.add_subcommand("quantum", "steady-state quantum variance and limit");
    auto* preset = app.add_subcommand("preset", "canned study with pinned parameters");
    std::string preset_name;
    preset->add_option("name", preset_name, "preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*seed_opt) args.seed = seed_value;
        apply_threads(args);
        if (sim->parsed()) return cmd_simulate(args);
        if (ens->parsed()) return cmd_ensemble(args);
        if (multi->parsed()) return cmd_multimode(args);
        if (quant->parsed()) return cmd_quantum(args);
        if (preset->parsed()) return cmd_preset(args, preset_name);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
