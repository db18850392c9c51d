// Tumor shape: random ellipsoid, elastic deformation, soft edge.

#pragma once

#include "tumorsynth/grid.hpp"
#include "tumorsynth/rng.hpp"

namespace tumorsynth {

struct ShapeParams {
    Vec3 center{0.0, 0.0, 0.0};  // voxel coordinates
    double radius_mm = 8.0;
    Vec3 half_axes_mm{8.0, 8.0, 8.0};
    double sigma_e = 0.0;
    double sigma_c = 0.9;

    void validate() const;
};

/// 1 where sum(((p - c) * spacing / a)^2) <= 1, else 0.
SoftMask ellipsoid_mask(const ShapeParams& params, const Geometry& geometry);

struct ElasticOptions {
    double alpha0 = 1.0;         // displacement RMS (voxels) per unit sigma_e
    double smoothing = 0.0;      // control-field smoothing std in voxels; 0 picks it from the mask size
    double min_smoothing = 4.0;
};

/// Smoothing std used when ElasticOptions::smoothing is 0: half the mask's
/// equivalent-sphere radius in voxels, never below min_smoothing.
double auto_elastic_smoothing(const SoftMask& mask, double min_smoothing);

/// Warps a binary mask through a smooth random displacement field.
///
/// Each channel starts as i.i.d. U(-1, 1) on a control grid (one node per
/// `step` voxels, step = floor(smoothing / min_smoothing)), is Gaussian-smoothed
/// with std smoothing / step nodes, normalized to unit RMS and scaled to
/// alpha0 * sigma_e voxels. The mask is pulled back through the field with
/// trilinear sampling, re-binarized at 0.5 and reduced to its largest
/// 6-connected component. sigma_e = 0 returns the input.
SoftMask elastic_deform(const SoftMask& mask, double sigma_e, Rng& rng, const ElasticOptions& options = {});

/// Largest 6-connected component of {mask >= 0.5}, as a binary mask.
SoftMask keep_largest_component(const SoftMask& mask);

/// Gaussian blur of the binary mask with std sigma_c voxels (> 0).
SoftMask soft_edge(const SoftMask& mask, double sigma_c);

}  // namespace tumorsynth
