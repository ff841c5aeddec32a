#pragma once
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "phasecool/errors.hpp"

namespace phasecool {

// Unit conventions: all internal quantities are dimensionless. omega sets the
// time unit; times are in 1/omega, rates in units of omega. Configs may give
// omega in any external unit; outputs always report t in 1/omega.

struct OscillatorParams {
    double omega = 1.0;  // natural angular frequency (> 0)
    double gamma = 0.0;  // intrinsic damping; validated regime gamma << omega
    double n_th = 0.0;   // bath mean occupancy (>= 0)

    double quality() const;  // Q = omega/gamma; +inf at gamma = 0
};

// Validates: omega > 0, 0 <= gamma < omega, n_th >= 0, all finite.
OscillatorParams make_oscillator(double omega, double gamma, double n_th);

struct Drive {
    double b = 0.0;          // modulation depth, |b| < 1
    double phi = 0.0;        // modulation phase, wrapped to [0, 2pi)
    double gamma_mod = 0.0;  // induced rate Gamma = b * omega
    bool beyond_perturbative = false;  // raised when b > 0.25
};

Drive make_drive(double b, double phi, const OscillatorParams& osc);

struct QuadratureState {
    double q = 0.0;
    double p = 0.0;
};

enum class Convention { classical, quantum };

// classical: n = (q^2 + p^2)/2. quantum subtracts the zero-point 1/2 and may
// be negative for a single realization (meaningful only in ensemble mean).
double occupancy_of(const QuadratureState& s, Convention c);

double wrap_phase(double phi);  // into [0, 2pi)

// Shortest round-trip decimal representation, locale-independent.
std::string format_double(double v);

// Gaussian stream: mt19937_64 + polar transform, hand-rolled so the byte
// stream behind checksummed outputs does not depend on the standard library's
// normal_distribution implementation. One stream has exactly one consumer.
class GaussStream {
  public:
    explicit GaussStream(std::uint64_t seed) : rng_(seed) {}
    double normal();  // N(0,1)

  private:
    double uniform();  // [0,1), 53-bit
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Counter-style seed derivation (splitmix64 finalizer over master + index):
// neighboring trajectory indices get unrelated streams, independent of
// execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// q, p independent zero-mean Gaussians with variance n_th each (classical
// normalization: ensemble-mean occupancy equals n_th). Draw order: q then p.
QuadratureState sample_thermal_state(double n_th, GaussStream& rng);

struct Sample {
    double t;
    QuadratureState state;
    double n;           // classical-convention occupancy
    double phi_active;  // drive phase in effect at this instant
};

struct TrajectoryRecord {
    std::vector<Sample> samples;  // timestamps strictly increasing
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> meta;  // parameter snapshot for sidecars
};

struct EnsembleStats {
    std::vector<double> time_bins;
    std::vector<double> mean_n;
    std::vector<double> var_n;  // population variance per bin, >= 0
    int count = 0;
    std::uint64_t master_seed = 0;
};

} // namespace phasecool
