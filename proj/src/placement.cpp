#include "tumorsynth/placement.hpp"

#include <cmath>

namespace tumorsynth {

Index3 voxel_radii(double radius_mm, const Vec3& spacing) {
    if (!(radius_mm > 0.0)) throw ArgumentError("placement radius must be positive");
    Index3 r;
    for (int a = 0; a < 3; ++a) r[a] = static_cast<int>(std::ceil(radius_mm / spacing[a] - 1e-9));
    return r;
}

bool collision_free(const VesselMask& vessels, const Index3& c, const Index3& r) {
    const Box box = Box{{c[0] - r[0], c[1] - r[1], c[2] - r[2]}, {c[0] + r[0] + 1, c[1] + r[1] + 1, c[2] + r[2] + 1}}
                        .clipped_to(vessels.dims());
    for (int z = box.lo[2]; z < box.hi[2]; ++z)
        for (int y = box.lo[1]; y < box.hi[1]; ++y)
            for (int x = box.lo[0]; x < box.hi[0]; ++x)
                if (vessels(x, y, z)) return false;
    return true;
}

CollisionIndex::CollisionIndex(const VesselMask& blocked) {
    box_ = bounding_box(blocked, [](uint8_t v) { return v != 0; });
    if (box_.empty()) return;
    const Index3 s = box_.size();
    dims_ = {s[0] + 1, s[1] + 1, s[2] + 1};
    table_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], 0);
    auto at = [&](int x, int y, int z) -> uint32_t& {
        return table_[static_cast<std::size_t>(x) + static_cast<std::size_t>(dims_[0]) * (y + static_cast<std::size_t>(dims_[1]) * z)];
    };
    for (int z = 1; z < dims_[2]; ++z)
        for (int y = 1; y < dims_[1]; ++y)
            for (int x = 1; x < dims_[0]; ++x) {
                const uint32_t v = blocked(box_.lo[0] + x - 1, box_.lo[1] + y - 1, box_.lo[2] + z - 1) ? 1 : 0;
                total_ += v;
                at(x, y, z) = v + at(x - 1, y, z) + at(x, y - 1, z) + at(x, y, z - 1) - at(x - 1, y - 1, z) -
                              at(x - 1, y, z - 1) - at(x, y - 1, z - 1) + at(x - 1, y - 1, z - 1);
            }
}

uint64_t CollisionIndex::sum(const Index3& lo, const Index3& hi) const {
    auto t = [&](int x, int y, int z) -> int64_t {
        return table_[static_cast<std::size_t>(x) + static_cast<std::size_t>(dims_[0]) * (y + static_cast<std::size_t>(dims_[1]) * z)];
    };
    const int64_t s = t(hi[0], hi[1], hi[2]) - t(lo[0], hi[1], hi[2]) - t(hi[0], lo[1], hi[2]) -
                      t(hi[0], hi[1], lo[2]) + t(lo[0], lo[1], hi[2]) + t(lo[0], hi[1], lo[2]) +
                      t(hi[0], lo[1], lo[2]) - t(lo[0], lo[1], lo[2]);
    return static_cast<uint64_t>(s);
}

bool CollisionIndex::collision_free(const Index3& c, const Index3& r) const {
    if (total_ == 0) return true;
    Index3 lo, hi;
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::clamp(c[a] - r[a] - box_.lo[a], 0, dims_[a] - 1);
        hi[a] = std::clamp(c[a] + r[a] + 1 - box_.lo[a], 0, dims_[a] - 1);
        if (hi[a] <= lo[a]) return true;
    }
    return sum(lo, hi) == 0;
}

LocationSampler::LocationSampler(const LabelVolume& liver, const VesselMask& blocked)
    : geometry_(liver.geometry()), index_(blocked) {
    if (!liver.geometry().same_lattice(blocked.geometry()))
        throw ArgumentError("liver mask and vessel mask geometries differ");
    for (std::size_t i = 0; i < liver.size(); ++i)
        if (liver[i] == kLiver) candidates_.push_back(static_cast<uint32_t>(i));
    if (candidates_.empty()) throw ArgumentError("liver mask has no voxels of label 1");
}

bool LocationSampler::collision_free(const Index3& center, double radius_mm) const {
    return index_.collision_free(center, voxel_radii(radius_mm, geometry_.spacing));
}

Placement LocationSampler::sample(const PlacementRequest& req, Rng& rng) const {
    if (req.max_attempts < 1) throw ArgumentError("max_attempts must be >= 1");
    const Index3 r = voxel_radii(req.radius_mm, geometry_.spacing);
    const auto nx = static_cast<std::size_t>(geometry_.dims[0]);
    const auto ny = static_cast<std::size_t>(geometry_.dims[1]);
    for (int attempt = 1; attempt <= req.max_attempts; ++attempt) {
        const std::size_t i = candidates_[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int64_t>(candidates_.size()) - 1))];
        const Index3 c{static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
        if (index_.collision_free(c, r)) return Placement{c, attempt};
    }
    throw PlacementExhausted(req.max_attempts);
}

Placement sample_location(const LabelVolume& liver, const VesselMask& vessels, const PlacementRequest& req, Rng& rng) {
    return LocationSampler(liver, vessels).sample(req, rng);
}

}  // namespace tumorsynth
