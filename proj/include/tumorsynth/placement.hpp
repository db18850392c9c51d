// Tumor center selection that avoids vessels.
//
// A candidate center is drawn uniformly from the liver voxels and rejected if
// the axis-aligned box of half-width r (per-axis voxel radii) around it holds
// any blocked voxel. Blocked voxels are vessels, plus earlier tumor cores when
// the generator adds them.

#pragma once

#include <cstdint>
#include <vector>

#include "tumorsynth/grid.hpp"
#include "tumorsynth/rng.hpp"

namespace tumorsynth {

struct PlacementRequest {
    double radius_mm = 8.0;
    int max_attempts = 200;
};

struct Placement {
    Index3 center{0, 0, 0};
    int attempts = 0;
};

/// ceil(radius_mm / spacing) per axis.
Index3 voxel_radii(double radius_mm, const Vec3& spacing);

/// True iff the closed box [c - r, c + r], clipped to the volume, holds no vessel voxel.
bool collision_free(const VesselMask& vessels, const Index3& center, const Index3& radius_voxels);

/// Summed-volume table over the bounding box of blocked voxels: O(1) box queries.
class CollisionIndex {
public:
    explicit CollisionIndex(const VesselMask& blocked);
    bool collision_free(const Index3& center, const Index3& radius_voxels) const;
    std::size_t blocked_count() const { return total_; }

private:
    uint64_t sum(const Index3& lo, const Index3& hi) const;  // half-open, local coords

    Box box_;
    Index3 dims_{0, 0, 0};  // box size + 1 per axis
    std::vector<uint32_t> table_;
    std::size_t total_ = 0;
};

/// Reusable sampler over one liver mask.
class LocationSampler {
public:
    LocationSampler(const LabelVolume& liver, const VesselMask& blocked);

    /// Throws PlacementExhausted after req.max_attempts rejected draws.
    Placement sample(const PlacementRequest& req, Rng& rng) const;
    bool collision_free(const Index3& center, double radius_mm) const;
    std::size_t candidate_count() const { return candidates_.size(); }

private:
    Geometry geometry_;
    std::vector<uint32_t> candidates_;  // linear indices of liver voxels, scan order
    CollisionIndex index_;
};

/// One-shot form of LocationSampler::sample.
Placement sample_location(const LabelVolume& liver, const VesselMask& vessels, const PlacementRequest& req, Rng& rng);

}  // namespace tumorsynth
