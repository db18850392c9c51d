#include "tumorsynth/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tumorsynth/components.hpp"
#include "tumorsynth/filters.hpp"

namespace tumorsynth {

void ShapeParams::validate() const {
    if (!(radius_mm > 0.0)) throw ArgumentError("shape radius must be positive");
    for (double a : half_axes_mm)
        if (!(a > 0.0) || !std::isfinite(a)) throw ArgumentError("half-axes must be positive");
    if (!(sigma_e >= 0.0) || !std::isfinite(sigma_e)) throw ArgumentError("sigma_e must be non-negative");
    if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) throw ArgumentError("sigma_c must be positive");
}

SoftMask ellipsoid_mask(const ShapeParams& params, const Geometry& geometry) {
    for (double a : params.half_axes_mm)
        if (!(a > 0.0)) throw ArgumentError("half-axes must be positive");
    SoftMask out(geometry, 0.0f);
    const auto& d = geometry.dims;
    const auto& s = geometry.spacing;
    const auto& c = params.center;
    const auto& ax = params.half_axes_mm;
    // Only the ellipsoid's bounding box is visited.
    Box box;
    for (int a = 0; a < 3; ++a) {
        const double r = ax[a] / s[a];
        box.lo[a] = static_cast<int>(std::floor(c[a] - r));
        box.hi[a] = static_cast<int>(std::ceil(c[a] + r)) + 1;
    }
    box = box.clipped_to(d);
    for (int z = box.lo[2]; z < box.hi[2]; ++z) {
        const double tz = (z - c[2]) * s[2] / ax[2];
        for (int y = box.lo[1]; y < box.hi[1]; ++y) {
            const double ty = (y - c[1]) * s[1] / ax[1];
            for (int x = box.lo[0]; x < box.hi[0]; ++x) {
                const double tx = (x - c[0]) * s[0] / ax[0];
                if (tx * tx + ty * ty + tz * tz <= 1.0) out(x, y, z) = 1.0f;
            }
        }
    }
    return out;
}

double auto_elastic_smoothing(const SoftMask& mask, double min_smoothing) {
    std::size_t n = 0;
    for (float v : mask.data()) n += v >= 0.5f;
    const double radius_vox = std::cbrt(3.0 * static_cast<double>(n) / (4.0 * std::numbers::pi));
    return std::max(min_smoothing, 0.5 * radius_vox);
}

SoftMask keep_largest_component(const SoftMask& mask) {
    const ComponentSet cs = label_components(mask, [](float v) { return v >= 0.5f; }, Connectivity::Six);
    SoftMask out = SoftMask::like(mask, 0.0f);
    const auto keep = static_cast<int32_t>(cs.largest());
    if (keep == 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (cs.labels[i] == keep) out[i] = 1.0f;
    return out;
}

SoftMask elastic_deform(const SoftMask& mask, double sigma_e, Rng& rng, const ElasticOptions& options) {
    if (!(sigma_e >= 0.0) || !std::isfinite(sigma_e)) throw ArgumentError("sigma_e must be non-negative");
    if (sigma_e == 0.0 || options.alpha0 == 0.0) return mask;
    if (!(options.min_smoothing > 0.0)) throw ArgumentError("elastic min_smoothing must be positive");

    const double smoothing =
        options.smoothing > 0.0 ? options.smoothing : auto_elastic_smoothing(mask, options.min_smoothing);
    const int step = std::max(1, static_cast<int>(std::floor(smoothing / options.min_smoothing)));
    const double node_sigma = smoothing / step;
    const double alpha = options.alpha0 * sigma_e;

    const auto& d = mask.dims();
    Geometry control = make_geometry({(d[0] - 1) / step + 2, (d[1] - 1) / step + 2, (d[2] - 1) / step + 2});

    // Interior std of a smoothed U(-1,1) field is (1/sqrt 3) * (sum w^2)^(3/2).
    const auto k = gaussian_kernel(node_sigma);
    double w2 = 0.0;
    for (double w : k) w2 += w * w;
    const double field_std = std::sqrt(1.0 / 3.0) * std::pow(w2, 1.5);
    const double gain = alpha / field_std;

    std::array<SoftMask, 3> field;
    for (auto& ch : field) {
        SoftMask raw(control);
        for (float& v : raw.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        ch = gaussian_blur_raw(raw, node_sigma);
        for (float& v : ch.data()) v = static_cast<float>(v * gain);
    }

    SoftMask warped = SoftMask::like(mask, 0.0f);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                const Vec3 node{static_cast<double>(x) / step, static_cast<double>(y) / step,
                                static_cast<double>(z) / step};
                const Vec3 src{x + sample_trilinear_clamped(field[0], node),
                               y + sample_trilinear_clamped(field[1], node),
                               z + sample_trilinear_clamped(field[2], node)};
                bool inside = true;
                for (int a = 0; a < 3; ++a) inside = inside && src[a] > -1.0 && src[a] < d[a];
                if (!inside) continue;
                if (sample_trilinear_clamped(mask, src) >= 0.5) warped(x, y, z) = 1.0f;
            }
    return keep_largest_component(warped);
}

SoftMask soft_edge(const SoftMask& mask, double sigma_c) {
    if (!(sigma_c > 0.0) || !std::isfinite(sigma_c)) throw ArgumentError("sigma_c must be positive");
    return gaussian_blur(mask, sigma_c);
}

}  // namespace tumorsynth
