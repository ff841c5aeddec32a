#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phasecool/core.hpp"

namespace phasecool {

// Plain-text artifacts: CSV data files plus a key-value summary sidecar.
// Every number is written with format_double, so write -> read is bit exact
// and a rerun with the same config and master seed produces byte-identical
// data files. Data files carry no timestamps for that reason.

// Raw file helpers; IoError names the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
void ensure_directory(const std::string& path);

// Trajectory CSV, header exactly: t,q,p,n,phi
std::string trajectory_csv(const TrajectoryRecord& rec);
void write_trajectory(const std::string& path, const TrajectoryRecord& rec);

struct TrajectoryTable {
    std::vector<double> t, q, p, n, phi;
};
TrajectoryTable parse_trajectory_csv(const std::string& text, const std::string& origin);
TrajectoryTable read_trajectory(const std::string& path);

// Ensemble CSV, header exactly: t,mean_n,var_n
std::string ensemble_csv(const EnsembleStats& stats);
void write_ensemble(const std::string& path, const EnsembleStats& stats);

struct EnsembleTable {
    std::vector<double> t, mean_n, var_n;
};
EnsembleTable parse_ensemble_csv(const std::string& text, const std::string& origin);
EnsembleTable read_ensemble(const std::string& path);

// Summary sidecar: full config echo (the manifest) with run results appended
// as a [results] section, so the sidecar parses back as a config.
std::string summary_text(const std::string& manifest,
                         const std::vector<std::pair<std::string, std::string>>& results);

// FNV-1a 64-bit over the exact file bytes; hex form is 16 lowercase digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string checksum_hex(const std::string& bytes);

} // namespace phasecool
