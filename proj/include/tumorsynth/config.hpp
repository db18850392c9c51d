// Generator hyper-parameters, size presets and per-tumor parameter records.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

/// One row of the size-preset table.
struct SizePreset {
    std::string name;
    double radius_mm = 0.0;
    Range sigma_e;       // U[lo, hi]
    int count_min = 1;   // N ~ F[count_min, count_max]
    int count_max = 1;
    bool operator==(const SizePreset&) const = default;
};

/// The four sized presets: tiny, small, medium, large.
const std::vector<SizePreset>& default_size_presets();

struct GenConfig {
    // vessel segmentation
    double b = 15.0;
    double sigma_a_base = 0.5;
    double sigma_a_slope = 0.025;
    // texture
    double sigma_b = 0.6;
    double mu_t_min = 30.0;     // mu_t ~ U(mu_t_min, mu_p - mu_t_margin)
    double mu_t_margin = 10.0;
    Range eta{1.1, 1.5};
    // shape
    Range sigma_c{0.6, 1.2};
    Range half_axis_factor{0.75, 1.25};
    double elastic_alpha0 = 1.0;        // displacement RMS in voxels per unit sigma_e
    double elastic_min_smoothing = 4.0; // lower bound of the control-field smoothing std (voxels)
    // post-processing
    double gamma_max_factor = 1.3;
    double intensity = 30.0;            // I
    double lb = 0.4;
    double ub = 0.7;
    double sigma_d = 0.8;
    double d = 120.0;
    bool mass_effect = true;
    bool capsule = true;
    // engine
    int max_attempts = 200;
    double label_threshold = 0.5;
    bool shared_mu_t = true;            // one mu_t per scan for sized presets
    std::vector<SizePreset> presets = default_size_presets();

    /// Throws ArgumentError naming the first violated constraint.
    void validate() const;

    /// Sized preset by name; "mix" is not a row and is rejected here.
    const SizePreset& preset(const std::string& name) const;
};

/// Accepted preset names, including "mix".
bool is_preset_name(const std::string& name, const GenConfig& cfg);

/// Fully resolved parameters of one tumor.
struct TumorSpec {
    uint64_t stream_index = 0;          // selects the tumor's random sub-streams
    std::optional<Index3> center;       // pinned voxel center; sampled when absent
    double radius_mm = 8.0;
    Vec3 half_axes_mm{8.0, 8.0, 8.0};
    double mu_t = 60.0;
    double eta = 1.3;
    double sigma_c = 0.9;
    double sigma_e = 1.0;
    double sigma_p_scale = 1.0;         // texture std = sigma_p * sigma_p_scale
    double intensity = 30.0;            // I
    double capsule_d = 120.0;
    double lb = 0.4;
    double ub = 0.7;
    bool mass_effect = true;
    bool capsule = true;
    bool render = true;                 // false keeps placement but paints nothing
    std::string preset;
    int attempts = 0;                   // placement draws used when sampled

    /// Throws ArgumentError for values no pipeline stage can accept.
    void validate() const;
    /// Values that are legal but outside the configured sampling ranges.
    std::vector<std::string> range_warnings(const GenConfig& cfg, double mu_p) const;

    bool operator==(const TumorSpec&) const = default;
};

struct SkippedTumor {
    uint64_t stream_index = 0;
    int attempts = 0;
    bool operator==(const SkippedTumor&) const = default;
};

struct ProvenanceRecord {
    std::string scan_id;
    uint64_t seed = 0;
    std::string preset;          // requested preset
    std::string resolved_preset; // sized preset actually used ("mix" resolves to one of four)
    double mu_p = 0.0;
    double sigma_p = 0.0;
    double liver_mean = 0.0;
    std::vector<TumorSpec> tumors;
    std::vector<SkippedTumor> skipped;
    std::vector<std::string> warnings;
    bool operator==(const ProvenanceRecord&) const = default;
};

}  // namespace tumorsynth
