#include <omp.h>

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "phasecool/engine.hpp"

using namespace phasecool;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

SimConfig base_cfg(double dt, double t_end) {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    return cfg;
}

} // namespace

TEST_SUITE("engine") {

TEST_CASE("config validation") {
    auto ok = base_cfg(1e-3, 1.0);
    CHECK_NOTHROW(validate(ok));
    auto bad = ok; bad.dt = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = ok; bad.dt = 2e-2;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = ok; bad.t_end = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = ok; bad.sample_stride = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = ok; bad.noise = NoiseSpec::classical(-1.0);
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("one-step matrix entries and determinant") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(1e-3, 1.0);

    auto free_m = evolution_matrix(1, cfg, osc, Drive{});
    CHECK(free_m.m00 == 1.0);
    CHECK(free_m.m01 == 1e-3);
    CHECK(free_m.m10 == -1e-3);
    CHECK(free_m.m11 == 1.0);
    CHECK(free_m.det() == 1.0 + 1e-3 * 1e-3);  // exact, not approximate

    auto drive = make_drive(0.05, 0.0, osc);
    auto m1 = evolution_matrix(1, cfg, osc, drive);
    CHECK(m1.m10 == -1e-3 + 2.0 * drive.gamma_mod * 1e-3);  // cos(0) = 1

    CHECK_THROWS_AS(evolution_matrix(0, cfg, osc, drive), ValidationError);
}

TEST_CASE("undriven eigenvalues are (1 - gamma dt/2) e^{+-i w dt} to O(dt)") {
    auto osc = make_oscillator(1.0, 0.01, 0.0);
    auto cfg = base_cfg(1e-3, 1.0);
    auto m = evolution_matrix(1, cfg, osc, Drive{});
    double tr = m.m00 + m.m11, det = m.det();
    std::complex<double> disc(tr * tr - 4.0 * det, 0.0);
    auto lam = (tr + std::sqrt(disc)) / 2.0;
    CHECK(std::abs(std::abs(lam) - (1.0 - 0.01 * 1e-3 / 2.0)) < 2e-6);
    CHECK(std::abs(std::arg(lam) - 1e-3) < 1e-5);
}

TEST_CASE("transfer-matrix step equals the matrix action bitwise") {
    auto osc = make_oscillator(1.0, 1e-4, 0.0);
    auto drive = make_drive(0.05, 1.0, osc);
    auto cfg = base_cfg(1e-3, 1.0);
    cfg.integrator = Integrator::transfer_matrix;
    GaussStream rng(1);

    QuadratureState s{1.0, 0.0};
    QuadratureState v{1.0, 0.0};
    for (long n = 1; n <= 1000; ++n) {
        s = step(s, n, cfg, osc, drive, rng);
        auto m = evolution_matrix(n, cfg, osc, drive);
        v = {m.m00 * v.q + m.m01 * v.p, m.m10 * v.q + m.m11 * v.p};
        CHECK(s.q == v.q);
        CHECK(s.p == v.p);
    }
    // trivial single-step example
    GaussStream r2(1);
    auto tcfg = base_cfg(1e-3, 1.0);
    tcfg.integrator = Integrator::transfer_matrix;
    auto one = step({1.0, 0.0}, 1, tcfg, osc, Drive{}, r2);
    CHECK(one.q == 1.0);
    CHECK(one.p == -1e-3 * 1.0 + (1.0 - 1e-4 * 1e-3) * 0.0);
}

TEST_CASE("rotation splitting closes a full period to 1e-10") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(2.0 * kPi / 1000.0, 1.0);
    GaussStream rng(2);
    QuadratureState s{1.0, 0.0};
    for (long n = 1; n <= 1000; ++n) s = step(s, n, cfg, osc, Drive{}, rng);
    CHECK(std::abs(s.q - 1.0) < 1e-10);
    CHECK(std::abs(s.p) < 1e-10);
}

TEST_CASE("energy drift: transfer injects (1 + w^2 dt^2) per step, rotation conserves") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(1e-3, 1.0);
    GaussStream rng(3);

    cfg.integrator = Integrator::transfer_matrix;
    QuadratureState s{0.6, -0.8};
    double n_prev = occupancy_of(s, Convention::classical);
    for (long n = 1; n <= 200; ++n) {
        s = step(s, n, cfg, osc, Drive{}, rng);
        double n_now = occupancy_of(s, Convention::classical);
        CHECK(n_now == doctest::Approx(n_prev * (1.0 + 1e-6)).epsilon(1e-12));
        n_prev = n_now;
    }

    cfg.integrator = Integrator::rotation_splitting;
    s = {0.6, -0.8};
    double n0 = occupancy_of(s, Convention::classical);
    for (long n = 1; n <= 1000000; ++n) s = step(s, n, cfg, osc, Drive{}, rng);
    CHECK(std::abs(occupancy_of(s, Convention::classical) / n0 - 1.0) < 1e-9);
}

TEST_CASE("transfer-matrix deterministic part matches the eigen-decomposition") {
    auto osc = make_oscillator(1.0, 0.01, 0.0);
    auto cfg = base_cfg(1e-3, 1.0);
    cfg.integrator = Integrator::transfer_matrix;
    auto m = evolution_matrix(1, cfg, osc, Drive{});  // constant at Gamma = 0

    using C = std::complex<double>;
    double tr = m.m00 + m.m11, det = m.det();
    C lamp = (tr + std::sqrt(C(tr * tr - 4.0 * det, 0.0))) / 2.0;
    C lamm = (tr - std::sqrt(C(tr * tr - 4.0 * det, 0.0))) / 2.0;
    C v1p = m.m01, v2p = lamp - m.m00;
    C v1m = m.m01, v2m = lamm - m.m00;
    // expand ic in the eigenbasis by Cramer's rule
    QuadratureState ic{1.0, 0.4};
    C dd = v1p * v2m - v1m * v2p;
    C a = (C(ic.q) * v2m - v1m * C(ic.p)) / dd;
    C b = (v1p * C(ic.p) - C(ic.q) * v2p) / dd;

    C q_pred = a * std::pow(lamp, 1000) * v1p + b * std::pow(lamm, 1000) * v1m;
    C p_pred = a * std::pow(lamp, 1000) * v2p + b * std::pow(lamm, 1000) * v2m;

    auto rec = simulate(ic, {{0.0, 0.0}}, cfg, osc, Drive{});
    auto fin = rec.samples.back().state;
    CHECK(rec.samples.back().t == 1.0);
    CHECK(std::abs(fin.q - q_pred.real()) < 1e-8);
    CHECK(std::abs(fin.p - p_pred.real()) < 1e-8);
    CHECK(std::abs(q_pred.imag()) < 1e-12);
}

TEST_CASE("b = 0 simulate matches the closed form") {
    // gamma = 0: pure rotation, round-off only
    auto osc0 = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(1e-4, 10.0);
    cfg.sample_stride = 100;
    auto rec0 = simulate({1.0, 0.3}, {{0.0, 0.0}}, cfg, osc0, Drive{});
    for (auto& s : rec0.samples) {
        auto ref = unmodulated_closed_form({1.0, 0.3}, s.t, osc0, 0.0);
        CHECK(std::abs(s.state.q - ref.q) < 1e-11);
        CHECK(std::abs(s.state.p - ref.p) < 1e-11);
    }
    // weak damping: splitting puts the whole factor on p; deviation O(gamma/w)
    auto osc1 = make_oscillator(1.0, 1e-6, 0.0);
    auto rec1 = simulate({1.0, 0.3}, {{0.0, 0.0}}, cfg, osc1, Drive{});
    for (auto& s : rec1.samples) {
        auto ref = unmodulated_closed_form({1.0, 0.3}, s.t, osc1, 0.0);
        CHECK(std::abs(s.state.q - ref.q) < 1e-6);
        CHECK(std::abs(s.state.p - ref.p) < 1e-6);
    }
}

TEST_CASE("closed form point values") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto s0 = unmodulated_closed_form({0.3, -0.9}, 0.0, osc, 5.0);
    CHECK(s0.q == 0.3);
    CHECK(s0.p == -0.9);
    auto half = unmodulated_closed_form({1.0, 0.0}, kPi, osc, 0.0);
    CHECK(half.q == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(half.p) < 1e-12);
    auto oscg = make_oscillator(1.0, 1e-3, 0.0);
    auto turn = unmodulated_closed_form({1.0, 0.0}, 2.0 * kPi, oscg, 0.0);
    CHECK(turn.q == doctest::Approx(std::exp(-kPi * 1e-3)).epsilon(1e-10));
    CHECK(turn.q == doctest::Approx(0.99686).epsilon(1e-4));
    CHECK_THROWS_AS(unmodulated_closed_form({1.0, 0.0}, -0.1, osc, 0.0), ValidationError);
}

TEST_CASE("integrator accuracy ladder against the reference oracle") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto drive = make_drive(0.05, 3.0 * kPi / 2.0, osc);
    auto truth = reference_integrate({1.0, 0.0}, drive, osc, 1.0, 1e-5, 100000);
    double q_true = truth.samples.back().state.q;

    auto cfg = base_cfg(1e-5, 1.0);
    cfg.sample_stride = 100000;
    cfg.integrator = Integrator::rotation_splitting;
    double q_rot = simulate({1.0, 0.0}, {{0.0, drive.phi}}, cfg, osc, drive)
                       .samples.back().state.q;
    cfg.integrator = Integrator::transfer_matrix;
    double q_tm = simulate({1.0, 0.0}, {{0.0, drive.phi}}, cfg, osc, drive)
                      .samples.back().state.q;

    double err_rot = std::abs(q_rot - q_true);
    double err_tm = std::abs(q_tm - q_true);
    CHECK(err_rot < 5e-6);
    CHECK(err_tm < 1e-4);
    CHECK(err_rot < err_tm);
}

TEST_CASE("reference integrator: conservation and fourth-order convergence") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto rec = reference_integrate({1.0, 0.0}, Drive{}, osc, 100.0, 1e-4, 10000);
    for (auto& s : rec.samples)
        CHECK(std::abs(s.n - 0.5) < 1e-10);

    auto drive = make_drive(0.05, 1.0, osc);
    auto q_at = [&](double dt) {
        return reference_integrate({1.0, 0.0}, drive, osc, 10.0, dt, 1)
            .samples.back().state.q;
    };
    double e1 = std::abs(q_at(8e-3) - q_at(4e-3));
    double e2 = std::abs(q_at(4e-3) - q_at(2e-3));
    CHECK(e1 / e2 >= 14.0);
}

TEST_CASE("Wiener accumulation has variance n dt") {
    const int trials = 10000, nsteps = 256;
    const double dt = 1e-3;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < trials; ++i) {
        GaussStream rng(derive_seed(99, static_cast<std::uint64_t>(i)));
        double w = 0.0;
        for (int k = 0; k < nsteps; ++k) w += std::sqrt(dt) * rng.normal();
        sum += w;
        sumsq += w * w;
    }
    double mean = sum / trials;
    double var = sumsq / trials - mean * mean;
    double expect = nsteps * dt;
    double se = expect * std::sqrt(2.0 / (trials - 1));
    CHECK(std::abs(var - expect) < 5.0 * se);
}

TEST_CASE("phase schedule fires at the nearest grid step") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto drive = make_drive(0.05, 0.0, osc);
    auto cfg = base_cfg(1e-3, 0.02);
    cfg.integrator = Integrator::transfer_matrix;
    double phi1 = 0.3, phi2 = 2.9;
    auto rec = simulate({1.0, 0.0}, {{0.0, phi1}, {0.0123, phi2}}, cfg, osc, drive);
    REQUIRE(rec.samples.size() == 21);
    CHECK(rec.samples[12].phi_active == phi1);
    CHECK(rec.samples[13].phi_active == phi2);

    // manual replay with the same switching rule, bitwise
    QuadratureState v{1.0, 0.0};
    for (long n = 1; n <= 20; ++n) {
        double phi = (n - 1 >= 12) ? phi2 : phi1;
        double tprev = (n - 1) * 1e-3;
        double force = 2.0 * drive.gamma_mod * std::cos(2.0 * tprev + phi);
        v = {v.q + 1e-3 * v.p, (-1e-3 + force * 1e-3) * v.q + v.p};
        CHECK(rec.samples[static_cast<std::size_t>(n)].state.q == v.q);
        CHECK(rec.samples[static_cast<std::size_t>(n)].state.p == v.p);
    }
}

TEST_CASE("schedule validation happens before any stepping") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(1e-3, 1.0);
    CHECK_THROWS_AS(simulate({1.0, 0.0}, {}, cfg, osc, Drive{}), ValidationError);
    CHECK_THROWS_AS(simulate({1.0, 0.0}, {{0.5, 0.0}}, cfg, osc, Drive{}), ValidationError);
    CHECK_THROWS_AS(simulate({1.0, 0.0}, {{0.0, 0.0}, {0.0, 1.0}}, cfg, osc, Drive{}),
                    ValidationError);
}

TEST_CASE("sampling stride and timestamps") {
    auto osc = make_oscillator(1.0, 0.0, 0.0);
    auto cfg = base_cfg(1e-3, 0.1);
    cfg.sample_stride = 7;
    auto rec = simulate({1.0, 0.0}, {{0.0, 0.0}}, cfg, osc, Drive{});
    REQUIRE(rec.samples.size() == 15);  // n = 0, 7, ..., 98
    for (std::size_t i = 0; i < rec.samples.size(); ++i)
        CHECK(rec.samples[i].t == static_cast<double>(7 * i) * 1e-3);
}

TEST_CASE("fixed seed reproduces the trajectory bit for bit") {
    auto osc = make_oscillator(1.0, 1e-3, 0.0);
    auto drive = make_drive(0.05, 1.0, osc);
    auto cfg = base_cfg(1e-3, 2.0);
    cfg.noise = NoiseSpec::classical(3.0);
    cfg.seed = 4242;
    auto a = simulate({1.0, 0.0}, {{0.0, 1.0}}, cfg, osc, drive);
    auto b = simulate({1.0, 0.0}, {{0.0, 1.0}}, cfg, osc, drive);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].state.q == b.samples[i].state.q);
        CHECK(a.samples[i].state.p == b.samples[i].state.p);
    }
    cfg.seed = 4243;
    auto c = simulate({1.0, 0.0}, {{0.0, 1.0}}, cfg, osc, drive);
    CHECK(c.samples.back().state.q != a.samples.back().state.q);
}

TEST_CASE("thermal ensemble is stationary and scales with n_th") {
    auto osc = make_oscillator(1.0, 0.1, 100.0);
    auto cfg = base_cfg(1e-3, 20.0);
    cfg.sample_stride = 2000;
    cfg.seed = 777;

    auto late_mean = [&](double n_th) {
        cfg.noise = NoiseSpec::classical(n_th);
        auto sampler = [n_th](GaussStream& rng) { return sample_thermal_state(n_th, rng); };
        auto stats = ensemble_run(sampler, {{0.0, 0.0}}, cfg, osc, Drive{}, 800);
        double acc = 0.0;
        for (double v : stats.mean_n) acc += v;
        return acc / static_cast<double>(stats.mean_n.size());
    };
    double m100 = late_mean(100.0);
    CHECK(std::abs(m100 - 100.0) / 100.0 < 0.10);
    double m200 = late_mean(200.0);
    CHECK(m200 / m100 > 1.8);
    CHECK(m200 / m100 < 2.2);
}

TEST_CASE("cold start relaxes to the bath occupancy") {
    auto osc = make_oscillator(1.0, 0.1, 100.0);
    auto cfg = base_cfg(1e-3, 60.0);
    cfg.sample_stride = 60000;
    cfg.noise = NoiseSpec::classical(100.0);
    cfg.seed = 901;
    auto sampler = [](GaussStream&) { return QuadratureState{0.0, 0.0}; };
    auto stats = ensemble_run(sampler, {{0.0, 0.0}}, cfg, osc, Drive{}, 400);
    double target = 100.0 * (1.0 - std::exp(-0.1 * 60.0));
    CHECK(std::abs(stats.mean_n.back() - target) < 15.0);
}

TEST_CASE("count = 1 ensemble reduces to one simulate call") {
    auto osc = make_oscillator(1.0, 0.05, 10.0);
    auto cfg = base_cfg(1e-3, 1.0);
    cfg.noise = NoiseSpec::classical(10.0);
    cfg.sample_stride = 100;
    cfg.seed = 31337;
    auto sampler = [](GaussStream& rng) { return sample_thermal_state(10.0, rng); };
    auto stats = ensemble_run(sampler, {{0.0, 0.0}}, cfg, osc, Drive{}, 1);

    GaussStream rng(derive_seed(31337, 0));
    auto ic = sample_thermal_state(10.0, rng);
    auto rec = simulate_stream(ic, {{0.0, 0.0}}, cfg, osc, Drive{}, rng);
    REQUIRE(stats.mean_n.size() == rec.samples.size());
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        CHECK(stats.mean_n[i] == rec.samples[i].n);
        CHECK(stats.var_n[i] == 0.0);
        CHECK(stats.time_bins[i] == rec.samples[i].t);
    }
}

TEST_CASE("ensemble statistics do not depend on the thread count") {
    auto osc = make_oscillator(1.0, 0.05, 5.0);
    auto cfg = base_cfg(1e-3, 2.0);
    cfg.noise = NoiseSpec::classical(5.0);
    cfg.sample_stride = 500;
    cfg.seed = 5150;
    auto sampler = [](GaussStream& rng) { return sample_thermal_state(5.0, rng); };

    int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto one = ensemble_run(sampler, {{0.0, 0.0}}, cfg, osc, Drive{}, 37);
    omp_set_num_threads(4);
    auto four = ensemble_run(sampler, {{0.0, 0.0}}, cfg, osc, Drive{}, 37);
    omp_set_num_threads(saved);

    REQUIRE(one.mean_n.size() == four.mean_n.size());
    for (std::size_t i = 0; i < one.mean_n.size(); ++i) {
        CHECK(one.mean_n[i] == four.mean_n[i]);
        CHECK(one.var_n[i] == four.var_n[i]);
        CHECK(one.var_n[i] >= 0.0);
    }
}

TEST_CASE("aggregation core propagates per-trajectory failures") {
    auto bad = [](std::uint64_t) -> std::vector<std::vector<double>> {
        throw NumericsError("boom");
    };
    CHECK_THROWS_AS(ensemble_aggregate({0.0, 1.0}, bad, 10, 1), NumericsError);
    CHECK_THROWS_AS(ensemble_aggregate({}, bad, 10, 1), ValidationError);
    CHECK_THROWS_AS(
        ensemble_aggregate({0.0}, [](std::uint64_t) {
            return std::vector<std::vector<double>>{{1.0}};
        }, 0, 1),
        ValidationError);
}

} // TEST_SUITE
