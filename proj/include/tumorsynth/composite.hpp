// Implanting a tumor into the scan: blending, mass-effect warp, capsule rim.

#pragma once

#include <utility>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

struct CapsuleParams {
    double lb = 0.4;
    double ub = 0.7;
    double sigma_d = 0.8;
    double d = 120.0;

    void validate() const;
};

struct MassEffectParams {
    Vec3 center{0.0, 0.0, 0.0};  // voxel coordinates
    double gamma_max_mm = 10.0;
    double intensity = 30.0;     // I in [0, 100]

    void validate() const;
};

/// f' = (1 - t'') f + t'' T''; label becomes tumor where t'' >= threshold on liver voxels.
std::pair<ScalarVolume, LabelVolume> blend_tumor(const ScalarVolume& ct, const LabelVolume& labels,
                                                 const SoftMask& soft_shape, const ScalarVolume& texture,
                                                 double label_threshold = 0.5);

/// Source distance for an output voxel at distance gamma from the center:
/// (1 - (1 - gamma / gamma_max)^2 * I / 100) * gamma, for gamma < gamma_max.
double mass_effect_source_distance(double gamma, double gamma_max, double intensity);

/// Local scaling warp inside the gamma_max ball (distances in mm). Scalars
/// are sampled trilinearly, labels by nearest neighbor. I = 0 is the identity.
std::pair<ScalarVolume, LabelVolume> mass_effect_warp(const ScalarVolume& ct, const LabelVolume& labels,
                                                      const MassEffectParams& params);

/// Edge band e = [lb <= t'' <= ub], blurred by sigma_d, added with weight d.
ScalarVolume apply_capsule(const ScalarVolume& ct, const SoftMask& soft_shape, const CapsuleParams& params);

}  // namespace tumorsynth
