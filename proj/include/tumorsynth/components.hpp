#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

struct ComponentTag {};
using ComponentLabels = Grid<int32_t, ComponentTag>;

enum class Connectivity { Six = 6, TwentySix = 26 };

/// Labeling of one foreground class. Ids are 1..count in order of each
/// component's first voxel in x-fastest scan order; 0 is background.
struct ComponentSet {
    int count = 0;
    ComponentLabels labels;
    std::vector<std::size_t> voxel_counts;  // indexed by id - 1
    std::vector<double> radii_mm;           // equivalent-sphere radius, indexed by id - 1

    std::size_t largest() const;  // id of the largest component (first on ties); 0 if none
};

double equivalent_radius_mm(double volume_mm3);

namespace detail {
std::vector<Index3> neighbor_offsets(Connectivity c);
}

/// Breadth-first labeling of every voxel for which `is_fg(value)` holds.
template <typename T, typename Tag, typename Pred>
ComponentSet label_components(const Grid<T, Tag>& grid, Pred is_fg, Connectivity conn) {
    ComponentSet out;
    out.labels = ComponentLabels(grid.geometry(), 0);
    const auto offsets = detail::neighbor_offsets(conn);
    const auto& geo = grid.geometry();
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!is_fg(grid[i]) || out.labels[i] != 0) continue;
        const int id = ++out.count;
        std::size_t n = 0;
        out.labels[i] = id;
        queue.push_back(i);
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            ++n;
            const Index3 c = grid.coords(cur);
            for (const auto& o : offsets) {
                const int x = c[0] + o[0], y = c[1] + o[1], z = c[2] + o[2];
                if (!geo.contains(x, y, z)) continue;
                const std::size_t j = grid.index(x, y, z);
                if (out.labels[j] != 0 || !is_fg(grid[j])) continue;
                out.labels[j] = id;
                queue.push_back(j);
            }
        }
        out.voxel_counts.push_back(n);
        out.radii_mm.push_back(equivalent_radius_mm(static_cast<double>(n) * geo.voxel_volume_mm3()));
    }
    return out;
}

/// Components of voxels equal to `target` (1 = liver, 2 = tumor).
ComponentSet connected_components(const LabelVolume& labels, uint8_t target, Connectivity conn);

}  // namespace tumorsynth
