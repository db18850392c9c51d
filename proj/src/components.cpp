#include "tumorsynth/components.hpp"

namespace tumorsynth {

double equivalent_radius_mm(double volume_mm3) {
    return std::cbrt(3.0 * volume_mm3 / (4.0 * std::numbers::pi));
}

std::size_t ComponentSet::largest() const {
    std::size_t best = 0, best_n = 0;
    for (std::size_t i = 0; i < voxel_counts.size(); ++i)
        if (voxel_counts[i] > best_n) {
            best_n = voxel_counts[i];
            best = i + 1;
        }
    return best;
}

namespace detail {
std::vector<Index3> neighbor_offsets(Connectivity c) {
    std::vector<Index3> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (c == Connectivity::Six && manhattan != 1) continue;
                out.push_back({dx, dy, dz});
            }
    return out;
}
}  // namespace detail

ComponentSet connected_components(const LabelVolume& labels, uint8_t target, Connectivity conn) {
    if (target != kLiver && target != kTumor) throw ArgumentError("component target must be 1 or 2");
    return label_components(labels, [target](uint8_t v) { return v == target; }, conn);
}

}  // namespace tumorsynth
