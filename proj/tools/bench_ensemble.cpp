// Throughput benchmark for the parallel ensemble path.
// Usage: bench_ensemble [count] [t_end]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <omp.h>

#include "phasecool/feedback.hpp"

using namespace phasecool;

int main(int argc, char** argv) {
    const int count = argc > 1 ? std::atoi(argv[1]) : 64;
    const double t_end = argc > 2 ? std::atof(argv[2]) : 100.0;

    auto osc = make_oscillator(1.0, 1e-6, 1e4);
    auto drive = make_drive(0.05, 0.0, osc);
    AdaptiveSettings settings;
    settings.delta_tau = 2.0 * std::numbers::pi;
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = t_end;
    cfg.noise = NoiseSpec::classical(osc.n_th);
    cfg.sample_stride = 100;
    cfg.seed = 7;
    InitialSampler sampler = [&](GaussStream& rng) {
        return sample_thermal_state(osc.n_th, rng);
    };

    const auto start = std::chrono::steady_clock::now();
    auto stats = ensemble_run_adaptive(sampler, settings, cfg, osc, drive, count);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;

    const double steps = static_cast<double>(count) * (t_end / cfg.dt);
    std::printf("threads=%d count=%d t_end=%g wall=%.3fs steps/s=%.3g final_mean_n=%.4g\n",
                omp_get_max_threads(), stats.count, t_end, wall.count(), steps / wall.count(),
                stats.mean_n.back());
    return 0;
}
