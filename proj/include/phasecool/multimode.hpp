#pragma once
#include <vector>

#include "phasecool/feedback.hpp"

namespace phasecool {

// Several mechanical modes cooled at once by a single spring-constant
// modulation that carries one tone per resolved frequency band:
//   F(t) = sum_k 2 Gamma_k cos(2 Omega_k t + phi_k),
// applied multiplicatively to every mode's own position (p_j += F q_j dt).
// Bands whose members share one frequency cannot be told apart by the
// detector; the controller sees only their summed quadratures.

struct ModeSet {
    std::vector<OscillatorParams> modes;  // input order
    std::vector<Drive> drives;            // one per band, ascending band frequency
    std::vector<std::vector<int>> bands;  // member input indices per band
    double resolution = 0.0;              // separation used by the partition
};

// Groups modes whose sorted frequencies differ by less than `resolution`
// (chain linkage, so a near-degenerate ladder collapses into one band).
// resolution <= 0 selects the default Gamma_max = max_k |gamma_mod_k| taken
// from set.drives; a set with all drives off needs an explicit resolution.
// Singleton bands are resolved, multi-member bands are degenerate.
std::vector<std::vector<int>> band_partition(const ModeSet& set, double resolution = 0.0);

// Builds the set from raw mode parameters and a common modulation depth b:
// partitions bands (default resolution b * max omega), then attaches one
// Drive per band at the band's mean frequency with phase 0.
ModeSet make_mode_set(const std::vector<OscillatorParams>& modes, double b,
                      double resolution = 0.0);

struct MultimodeSettings {
    // Re-null cadence: band k is measured every update_half_periods half
    // periods pi/Omega_k, so Gamma_k * delta_tau_k is uniform across bands.
    int update_half_periods = 16;
    int max_updates = 0;           // per-band re-null budget; 0 = unlimited
    bool shared_drive = true;      // false: each mode feels only its own band's tone
    bool drive_degenerate = false; // actuate degenerate bands (blind to members)
    // Re-null gate: skip the phase update while the band's detected occupancy
    // is below gate_rel times its own t = 0 value. 0 disables the gate.
    double gate_rel = 0.0;
};

struct MultimodeResult {
    std::vector<TrajectoryRecord> records;  // per mode, input order
    // Per band, ascending frequency. Actuated bands log their re-nulls
    // (entry 0 is the t = 0 optimization of the summed quadratures); muted
    // degenerate bands keep their configured phase and an empty log.
    std::vector<FeedbackPlan> band_plans;
};

// One trajectory of the coupled system. Noise streams per mode: the first
// mode (ascending frequency) draws from GaussStream(cfg.seed), mode j > 0
// from GaussStream(derive_seed(cfg.seed, j)), so a one-mode set consumes
// exactly the single-mode stream and reproduces run_adaptive bit for bit.
// Outputs are independent of the input mode order up to the same relabeling.
// Rotation-splitting only; cfg.noise.n_th is ignored, each mode uses its own
// OscillatorParams.n_th as the classical noise strength.
MultimodeResult simulate_multimode(const std::vector<QuadratureState>& ics, const ModeSet& set,
                                   const MultimodeSettings& fb, const SimConfig& cfg);

// Ensemble under the stochastic engine's determinism contract: trajectory i
// uses derive_seed(cfg.seed, i) as its stream plan root and samples each
// mode's thermal IC (variance n_th_j per quadrature) from that mode's own
// stream before the noise. Returns per-mode stats in input order.
std::vector<EnsembleStats> ensemble_multimode(const ModeSet& set, const MultimodeSettings& fb,
                                              const SimConfig& cfg, int count);

// Mean late-time occupancy (time bins with t >= tail_from) of mode_index run
// alone with only its own band's tone, same feedback settings and master
// seed. The reference point for cross-talk checks.
double isolated_baseline(const ModeSet& set, int mode_index, const MultimodeSettings& fb,
                         const SimConfig& cfg, int count, double tail_from);

} // namespace phasecool
