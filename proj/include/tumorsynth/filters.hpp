#pragma once

#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

/// Normalized 1D Gaussian taps for offsets -R..R, R = ceil(4*sigma). sigma = 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma_voxels);

/// Separable Gaussian blur with sigma in voxels, edge-replicated borders.
/// sigma = 0 returns the input unchanged; a negative sigma is an ArgumentError.
ScalarVolume gaussian_blur(const ScalarVolume& volume, double sigma_voxels);

/// As above; the result is clamped to [0, 1].
SoftMask gaussian_blur(const SoftMask& mask, double sigma_voxels);

/// Blur of a float grid under any tag, without clamping.
template <typename Tag>
Grid<float, Tag> gaussian_blur_raw(const Grid<float, Tag>& grid, double sigma_voxels);

/// Trilinear interpolation at continuous voxel coordinates. Each coordinate
/// must lie in [0, dim-1]; otherwise BoundsError.
double sample_trilinear(const ScalarVolume& volume, const Vec3& point);

/// Same, for any float grid. Points are clamped to the grid instead of throwing.
template <typename Tag>
double sample_trilinear_clamped(const Grid<float, Tag>& grid, const Vec3& point);

}  // namespace tumorsynth
