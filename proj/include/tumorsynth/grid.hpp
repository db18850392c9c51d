// Dense 3D voxel grids shared by every stage of the synthesis pipeline.
//
// Data is stored x-fastest: index = x + dims.x * (y + dims.y * z). A grid
// carries its geometry (dims, spacing in mm, origin in mm) and the NIfTI
// orientation fields it was loaded with, which are passed through untouched.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tumorsynth/error.hpp"

namespace tumorsynth {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

/// NIfTI orientation fields, carried verbatim between load and save.
struct Orientation {
    int16_t qform_code = 0;
    int16_t sform_code = 0;
    float qfac = 1.0f;
    std::array<float, 3> quatern{0.0f, 0.0f, 0.0f};
    std::array<float, 3> qoffset{0.0f, 0.0f, 0.0f};
    std::array<std::array<float, 4>, 3> srow{};
    int16_t xyzt_units = 2;  // mm

    bool operator==(const Orientation&) const = default;
};

struct Geometry {
    Index3 dims{1, 1, 1};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    Orientation orientation{};

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    bool contains(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }

    /// Same dims and spacing (to float precision, as stored on disk); origin
    /// and orientation are not compared.
    bool same_lattice(const Geometry& other) const {
        if (dims != other.dims) return false;
        for (int a = 0; a < 3; ++a)
            if (std::abs(spacing[a] - other.spacing[a]) > 1e-6 * std::max(spacing[a], other.spacing[a])) return false;
        return true;
    }

    void validate() const;

    bool operator==(const Geometry&) const = default;
};

Geometry make_geometry(Index3 dims, Vec3 spacing = {1.0, 1.0, 1.0});

/// Half-open voxel box [lo, hi).
struct Box {
    Index3 lo{0, 0, 0};
    Index3 hi{0, 0, 0};

    Index3 size() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }
    bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
    std::size_t voxel_count() const {
        if (empty()) return 0;
        const auto s = size();
        return static_cast<std::size_t>(s[0]) * s[1] * s[2];
    }
    bool contains(int x, int y, int z) const {
        return x >= lo[0] && y >= lo[1] && z >= lo[2] && x < hi[0] && y < hi[1] && z < hi[2];
    }

    Box clipped_to(const Index3& dims) const;
    Box grown(const Index3& margin) const;
    Box united(const Box& other) const;

    bool operator==(const Box&) const = default;
};

struct ScalarTag {};
struct LabelTag {};
struct MaskTag {};
struct VesselTag {};

template <typename T, typename Tag>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    explicit Grid(Geometry geometry, T fill = T{}) : geometry_(std::move(geometry)) {
        geometry_.validate();
        data_.assign(geometry_.voxel_count(), fill);
    }

    Grid(Geometry geometry, std::vector<T> data) : geometry_(std::move(geometry)), data_(std::move(data)) {
        geometry_.validate();
        if (data_.size() != geometry_.voxel_count()) {
            throw ArgumentError("grid data length " + std::to_string(data_.size()) +
                                " does not match dims product " +
                                std::to_string(geometry_.voxel_count()));
        }
    }

    /// Same lattice as another grid, filled with a constant.
    template <typename U, typename OtherTag>
    static Grid like(const Grid<U, OtherTag>& other, T fill = T{}) {
        return Grid(other.geometry(), fill);
    }

    const Geometry& geometry() const { return geometry_; }
    const Index3& dims() const { return geometry_.dims; }
    const Vec3& spacing() const { return geometry_.spacing; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(geometry_.dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(geometry_.dims[1]) *
                                                      static_cast<std::size_t>(z));
    }
    Index3 coords(std::size_t i) const {
        const auto nx = static_cast<std::size_t>(geometry_.dims[0]);
        const auto ny = static_cast<std::size_t>(geometry_.dims[1]);
        return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
    }

    T& operator()(int x, int y, int z) { return data_[index(x, y, z)]; }
    const T& operator()(int x, int y, int z) const { return data_[index(x, y, z)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    const std::vector<T>& values() const { return data_; }

    Box full_box() const { return Box{{0, 0, 0}, geometry_.dims}; }

    bool operator==(const Grid&) const = default;

private:
    Geometry geometry_{};
    std::vector<T> data_;
};

using ScalarVolume = Grid<float, ScalarTag>;
using LabelVolume = Grid<uint8_t, LabelTag>;
using SoftMask = Grid<float, MaskTag>;
using VesselMask = Grid<uint8_t, VesselTag>;

enum Label : uint8_t { kBackground = 0, kLiver = 1, kTumor = 2 };

/// Geometry of a sub-box: dims shrink to the box, origin moves by lo*spacing.
Geometry sub_geometry(const Geometry& g, const Box& box);

template <typename T, typename Tag>
Grid<T, Tag> crop(const Grid<T, Tag>& src, const Box& box) {
    const Box b = box.clipped_to(src.dims());
    if (b.empty()) throw ArgumentError("crop box is empty after clipping");
    Grid<T, Tag> out(sub_geometry(src.geometry(), b));
    std::size_t o = 0;
    for (int z = b.lo[2]; z < b.hi[2]; ++z)
        for (int y = b.lo[1]; y < b.hi[1]; ++y) {
            const std::size_t row = src.index(b.lo[0], y, z);
            for (int x = 0; x < b.hi[0] - b.lo[0]; ++x) out[o++] = src[row + x];
        }
    return out;
}

/// Writes `src` into `dst` with src voxel (0,0,0) landing on dst voxel `at`.
template <typename T, typename Tag>
void paste(Grid<T, Tag>& dst, const Grid<T, Tag>& src, const Index3& at) {
    const auto& sd = src.dims();
    for (int z = 0; z < sd[2]; ++z)
        for (int y = 0; y < sd[1]; ++y)
            for (int x = 0; x < sd[0]; ++x) {
                const int dx = at[0] + x, dy = at[1] + y, dz = at[2] + z;
                if (dst.geometry().contains(dx, dy, dz)) dst(dx, dy, dz) = src(x, y, z);
            }
}

/// Reinterpret a grid's values under another tag, with element conversion.
template <typename ToGrid, typename T, typename Tag>
ToGrid convert(const Grid<T, Tag>& src) {
    std::vector<typename ToGrid::value_type> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<typename ToGrid::value_type>(src[i]);
    return ToGrid(src.geometry(), std::move(out));
}

/// Throws unless every value is finite.
void require_finite(const ScalarVolume& v);
void require_finite(const SoftMask& m);
/// Throws unless every label is in {0,1,2}.
void require_label_range(const LabelVolume& l);

/// Bounding box of voxels satisfying pred; empty box if none.
template <typename T, typename Tag, typename Pred>
Box bounding_box(const Grid<T, Tag>& g, Pred pred) {
    Box b{{g.dims()[0], g.dims()[1], g.dims()[2]}, {0, 0, 0}};
    bool any = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!pred(g[i])) continue;
        any = true;
        const auto c = g.coords(i);
        for (int a = 0; a < 3; ++a) {
            b.lo[a] = std::min(b.lo[a], c[a]);
            b.hi[a] = std::max(b.hi[a], c[a] + 1);
        }
    }
    return any ? b : Box{};
}

}  // namespace tumorsynth
