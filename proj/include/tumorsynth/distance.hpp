#pragma once

#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

/// Exact squared Euclidean distance (mm^2) from every voxel to the nearest
/// voxel where `sites[i]` is true, honoring anisotropic spacing. Computed with
/// the separable lower-envelope algorithm of Felzenszwalb and Huttenlocher.
/// Voxels have +inf when there are no sites.
std::vector<double> squared_distance_transform(const std::vector<bool>& sites, const Geometry& geometry);

}  // namespace tumorsynth
