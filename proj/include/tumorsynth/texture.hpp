// Tumor texture: Gaussian noise, cubic upscaling by eta, then a light blur.

#pragma once

#include "tumorsynth/grid.hpp"
#include "tumorsynth/rng.hpp"

namespace tumorsynth {

struct TextureParams {
    double mu_t = 60.0;     // mean tumor HU
    double sigma_p = 10.0;  // noise std, matched to the parenchyma
    double eta = 1.3;       // grain scale, >= 1
    double sigma_b = 0.6;   // final blur std in voxels

    void validate() const;
};

/// i.i.d. N(mu_t, sigma_p^2) samples on a grid of `geometry`.
ScalarVolume generate_noise(const Geometry& geometry, const TextureParams& params, Rng& rng);

/// Separable Catmull-Rom resampling to ceil(dims * eta). Output voxel o reads
/// input position o / eta; samples beyond the ends are linearly extrapolated,
/// so linear fields are reproduced exactly. eta = 1 returns the input.
ScalarVolume upscale_cubic(const ScalarVolume& field, double eta);

/// Noise at ceil(dims / eta), upscaled by eta, center-cropped to `geometry`'s
/// dims and blurred by sigma_b.
ScalarVolume generate_texture(const Geometry& geometry, const TextureParams& params, Rng& rng);

}  // namespace tumorsynth
