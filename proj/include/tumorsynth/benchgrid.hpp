// Controlled out-of-distribution benchmark: one synthetic tumor per variant,
// swept along shape, size, texture, intensity and location.
//
// For each dimension the controlling parameters are moved by k standard
// deviations from their in-distribution mean (measured from mix-preset draws
// on the same scan); every other parameter stays at its mean. Radius is swept
// in log space, since the presets space it geometrically, and elastic strength
// is measured relative to the radius so that a size sweep keeps the shape.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tumorsynth/config.hpp"
#include "tumorsynth/generator.hpp"

namespace tumorsynth {

inline const std::vector<std::string>& grid_dimensions() {
    static const std::vector<std::string> dims{"shape", "size", "texture", "intensity", "location"};
    return dims;
}

/// Five graded levels, in units of in-distribution standard deviations.
inline std::vector<double> default_grid_levels() { return {-2.0, -1.0, 0.0, 1.0, 2.0}; }

struct MomentStats {
    double mean = 0.0;
    double std = 0.0;
    bool operator==(const MomentStats&) const = default;
};

/// In-distribution moments of the swept parameters on one scan.
struct InDistribution {
    std::size_t draws = 0;
    std::size_t tumors = 0;
    MomentStats radius_mm;
    MomentStats log_radius;       // natural log of radius_mm
    MomentStats sigma_e;
    MomentStats relative_sigma_e; // sigma_e / radius_mm
    MomentStats axis_spread;  // (max - min) / 2 of half-axis / radius
    MomentStats sigma_c;
    MomentStats eta;
    MomentStats mu_t;
    bool operator==(const InDistribution&) const = default;
};

InDistribution measure_in_distribution(const ParenchymaStats& stats, const GenConfig& cfg, uint64_t seed,
                                       std::size_t draws = 1000);

struct GridVariant {
    std::string id;
    std::string scan_id;
    std::string dimension;
    std::size_t level_index = 0;
    double level = 0.0;          // requested offset in standard deviations
    uint64_t seed = 0;
    TumorSpec spec;
    std::vector<std::string> annotations;  // clamping notes
    std::string ct_path;         // relative to the manifest directory
    std::string label_path;
    bool operator==(const GridVariant&) const = default;
};

struct GridScanEntry {
    std::string scan_id;
    InDistribution in_distribution;
    double mu_p = 0.0;
    double sigma_p = 0.0;
    bool operator==(const GridScanEntry&) const = default;
};

struct GridManifest {
    uint64_t seed = 0;
    std::vector<std::string> dimensions;
    std::vector<double> levels;
    std::vector<GridScanEntry> scans;
    std::vector<GridVariant> variants;
    bool operator==(const GridManifest&) const = default;
};

void to_json(nlohmann::json& j, const GridManifest& m);
void from_json(const nlohmann::json& j, GridManifest& m);

struct GridOptions {
    uint64_t seed = 0;
    std::vector<std::string> dimensions = grid_dimensions();
    std::vector<double> levels = default_grid_levels();
    std::size_t in_distribution_draws = 1000;
    std::filesystem::path out_dir;  // volumes are not written when empty
    unsigned jobs = 1;
};

/// Resolves every variant's spec without synthesizing anything.
GridManifest plan_grid(const std::vector<PreparedScan>& scans, const GenConfig& cfg, const GridOptions& opt);

/// Plans, synthesizes each variant (in parallel up to opt.jobs) and, when
/// opt.out_dir is set, writes the volumes and manifest.json there.
GridManifest build_grid(const std::vector<PreparedScan>& scans, const GenConfig& cfg, const GridOptions& opt);

/// Synthesizes a single planned variant.
SynthesisResult synthesize_variant(const PreparedScan& scan, const GridVariant& v, const GenConfig& cfg);

struct GridCell {
    std::string dimension;
    std::size_t level_index = 0;
    double level = 0.0;
    double mean_dsc = 0.0;  // x100
    std::size_t count = 0;
};

struct GridEvaluation {
    std::vector<GridCell> cells;               // dimension-major, manifest order
    std::map<std::string, double> variant_dsc; // x100
};

/// Mean tumor DSC (x100) per (dimension, level). Predictions are
/// `<variant id>.nii.gz` or `<variant id>.nii` in `predictions_dir`; ground
/// truth is read relative to `manifest_dir`. EvaluationError lists every
/// variant without a prediction.
GridEvaluation evaluate_grid(const GridManifest& manifest, const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& predictions_dir);

std::string format_grid_table(const GridEvaluation& eval);

}  // namespace tumorsynth
