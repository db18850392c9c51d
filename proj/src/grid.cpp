#include "tumorsynth/grid.hpp"

#include <cmath>

namespace tumorsynth {

void Geometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) throw ArgumentError("grid dims must be positive");
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw ArgumentError("grid spacing must be positive and finite");
    }
}

Geometry make_geometry(Index3 dims, Vec3 spacing) {
    Geometry g;
    g.dims = dims;
    g.spacing = spacing;
    g.validate();
    return g;
}

Box Box::clipped_to(const Index3& dims) const {
    Box b = *this;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = std::clamp(b.lo[a], 0, dims[a]);
        b.hi[a] = std::clamp(b.hi[a], 0, dims[a]);
    }
    return b;
}

Box Box::grown(const Index3& margin) const {
    Box b = *this;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] -= margin[a];
        b.hi[a] += margin[a];
    }
    return b;
}

Box Box::united(const Box& other) const {
    if (empty()) return other;
    if (other.empty()) return *this;
    Box b;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = std::min(lo[a], other.lo[a]);
        b.hi[a] = std::max(hi[a], other.hi[a]);
    }
    return b;
}

Geometry sub_geometry(const Geometry& g, const Box& box) {
    Geometry out = g;
    out.dims = box.size();
    for (int a = 0; a < 3; ++a) out.origin[a] = g.origin[a] + box.lo[a] * g.spacing[a];
    out.validate();
    return out;
}

namespace {
template <typename G>
void finite_or_throw(const G& g, const char* what) {
    for (float v : g.data())
        if (!std::isfinite(v)) throw ArgumentError(std::string(what) + " contains a non-finite value");
}
}  // namespace

void require_finite(const ScalarVolume& v) { finite_or_throw(v, "scalar volume"); }
void require_finite(const SoftMask& m) { finite_or_throw(m, "soft mask"); }

void require_label_range(const LabelVolume& l) {
    for (uint8_t v : l.data())
        if (v > kTumor) throw ArgumentError("label volume contains value " + std::to_string(v) + " outside {0,1,2}");
}

}  // namespace tumorsynth
