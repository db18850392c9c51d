// Per-scan synthesis: parameter sampling, placement and sequential implantation.
//
// Every random draw of tumor i comes from sub-streams derived from
// (seed, i), so a tumor's shape and texture do not depend on how many
// placement attempts earlier tumors needed, and a provenance record with
// pinned centers replays bit-exactly.

#pragma once

#include <string>
#include <vector>

#include "tumorsynth/config.hpp"
#include "tumorsynth/grid.hpp"
#include "tumorsynth/vessels.hpp"

namespace tumorsynth {

/// Scan-level work shared by every synthesis on the same scan.
struct PreparedScan {
    std::string scan_id;
    ScalarVolume ct;
    LabelVolume liver;
    ParenchymaStats stats;
    VesselMask vessels;
};

PreparedScan prepare_scan(ScalarVolume ct, LabelVolume liver, const GenConfig& cfg, std::string scan_id = {});

struct SynthesisResult {
    ScalarVolume ct;
    LabelVolume labels;
    ProvenanceRecord provenance;
};

/// Draws the tumor list for a preset ("tiny", "small", "medium", "large" or
/// "mix"). Centers are left unpinned. `resolved` receives the sized preset used.
std::vector<TumorSpec> sample_tumor_specs(const std::string& preset, uint64_t seed, const ParenchymaStats& stats,
                                          const GenConfig& cfg, std::string* resolved = nullptr);

/// Samples a preset and implants its tumors. Tumors whose placement is
/// exhausted are skipped and listed in the provenance; SynthesisFailed if none
/// is placed.
SynthesisResult synthesize(const PreparedScan& scan, const std::string& preset, uint64_t seed, const GenConfig& cfg);
SynthesisResult synthesize(const ScalarVolume& ct, const LabelVolume& liver, const std::string& preset,
                           uint64_t seed, const GenConfig& cfg);

/// Implants explicit specs. Unpinned centers are sampled from the tumor's
/// placement stream (and skipped when exhausted); a pinned center that hits a
/// vessel or an earlier tumor core raises CollisionError.
SynthesisResult synthesize_with_spec(const PreparedScan& scan, const std::vector<TumorSpec>& specs, uint64_t seed,
                                     const GenConfig& cfg);
SynthesisResult synthesize_with_spec(const ScalarVolume& ct, const LabelVolume& liver,
                                     const std::vector<TumorSpec>& specs, uint64_t seed, const GenConfig& cfg);

/// Re-runs a provenance record; the result is bit-identical to the original.
SynthesisResult replay(const PreparedScan& scan, const ProvenanceRecord& record, const GenConfig& cfg);

}  // namespace tumorsynth
