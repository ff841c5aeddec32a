#pragma once
#include <string>
#include <vector>

#include "phasecool/multimode.hpp"

namespace phasecool {

// Experiment description loaded from a structured key-value text file with
// nested sections: [oscillator], [drive], [sim], [initial], [feedback],
// [modes], [ensemble], [output]. Parsing is strict: unknown sections, unknown
// keys and duplicate keys are rejected with file:line:column positions, and
// every physical invariant is re-validated before any computation starts.
// A [results] section is skipped entirely so a run's summary sidecar (config
// echo plus results) loads back as a valid config.

enum class FeedbackKind { none, single_shot, fixed_interval, per_segment };

struct InitialSpec {
    enum class Kind { thermal, fixed };
    Kind kind = Kind::thermal;
    double q = 1.0;   // fixed-state quadratures
    double p = 0.0;
    double n0 = -1.0; // thermal occupancy; resolved to oscillator n_th at load
};

struct MultimodeSpec {
    bool present = false;          // [modes] section given
    std::vector<double> omegas;
    double gamma_rel = 0.0;        // gamma_j = gamma_rel * omega_j
    double n_th = 0.0;
    double resolution = 0.0;       // 0 = default Gamma_max
    MultimodeSettings settings;
};

struct ExperimentConfig {
    OscillatorParams oscillator;
    Drive drive;
    SimConfig sim;                 // sim.seed is the master seed
    InitialSpec initial;
    FeedbackKind feedback = FeedbackKind::none;
    AdaptiveSettings feedback_settings;
    MultimodeSpec modes;
    int ensemble_count = 0;
    std::string out_dir = ".";
    std::string prefix = "run";
};

// Parse + validate from text; `origin` names the source in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");

// Reads the file (IoError names the path on failure) and parses it.
ExperimentConfig load_config(const std::string& path);

// Complete config echo in the same format parse_config reads: the run
// manifest. load of the manifest reproduces the config exactly.
std::string manifest_text(const ExperimentConfig& cfg);

// Mode set described by [modes], with the drive depth taken from [drive].
ModeSet build_mode_set(const ExperimentConfig& cfg);

} // namespace phasecool
