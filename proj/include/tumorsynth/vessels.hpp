// Hepatic parenchyma statistics and threshold-based vessel segmentation.
//
// Vessels are voxels of the smoothed scan brighter than the mean liver
// intensity plus a margin b. The smoothing width grows with the parenchyma
// noise level: sigma_a = 0.5 + 0.025 * sigma_p (in voxels).

#pragma once

#include <cstddef>

#include "tumorsynth/config.hpp"
#include "tumorsynth/grid.hpp"

namespace tumorsynth {

struct ParenchymaStats {
    double liver_mean = 0.0;  // mean HU over every liver voxel (vessels included)
    double mu_p = 0.0;        // mean HU of liver voxels outside the vessel mask
    double sigma_p = 0.0;     // population std of the same voxels
    std::size_t voxel_count = 0;
};

/// sigma_a from the parenchyma std.
double vessel_smoothing_sigma(double sigma_p);

/// Two-pass estimate: pass 1 over all liver voxels, pass 2 after excluding
/// the vessels segmented with the pass-1 statistics.
ParenchymaStats estimate_parenchyma_stats(const ScalarVolume& ct, const LabelVolume& liver, const GenConfig& cfg);

/// v = 1 where the smoothed scan exceeds liver_mean + b and the label is liver.
VesselMask segment_vessels(const ScalarVolume& ct, const LabelVolume& liver, const ParenchymaStats& stats,
                           const GenConfig& cfg);

}  // namespace tumorsynth
