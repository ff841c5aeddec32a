#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phasecool {

// Canned studies with pinned parameters and master seeds. Each writes its
// data files plus a summary sidecar (full config echo, run results, and an
// fnv1a64 checksum per data file) into out_dir and returns the paths written,
// summary last. Reruns at the default seed are byte-identical, so the
// recorded checksums double as a regression lock.
//
// Names: fig2_single_shot, fig2_sweep_b, fig3_feedback, fig3_ensemble,
//        fig4_multimode, quantum_limit.
const std::vector<std::string>& preset_names();

std::vector<std::string> run_preset(const std::string& name, const std::string& out_dir,
                                    std::optional<std::uint64_t> seed_override = std::nullopt);

} // namespace phasecool
