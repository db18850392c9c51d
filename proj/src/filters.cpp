#include "tumorsynth/filters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tumorsynth {

std::vector<double> gaussian_kernel(double sigma) {
    if (!std::isfinite(sigma)) throw ArgumentError("gaussian sigma must be finite");
    if (sigma < 0.0) throw ArgumentError("gaussian sigma must be non-negative, got " + std::to_string(sigma));
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    return k;
}

namespace {

// One pass along `axis`; lines are gathered into a padded buffer with the
// end samples replicated.
template <typename Tag>
void convolve_axis(Grid<float, Tag>& g, int axis, const std::vector<double>& k) {
    const int radius = static_cast<int>(k.size() / 2);
    const auto& d = g.dims();
    const int n = d[axis];
    if (n == 1) return;  // replicated borders make a length-1 line invariant
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(d[0])
                                                         : static_cast<std::size_t>(d[0]) * d[1];
    const int o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
    std::vector<double> line(n + 2 * radius);
    for (int b = 0; b < d[o2]; ++b)
        for (int a = 0; a < d[o1]; ++a) {
            Index3 start{0, 0, 0};
            start[o1] = a;
            start[o2] = b;
            const std::size_t base = g.index(start[0], start[1], start[2]);
            for (int i = 0; i < n; ++i) line[i + radius] = g[base + i * stride];
            for (int i = 0; i < radius; ++i) {
                line[i] = line[radius];
                line[n + radius + i] = line[n + radius - 1];
            }
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                const double* src = &line[i];
                for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * src[t];
                g[base + i * stride] = static_cast<float>(acc);
            }
        }
}

}  // namespace

template <typename Tag>
Grid<float, Tag> gaussian_blur_raw(const Grid<float, Tag>& grid, double sigma) {
    const auto k = gaussian_kernel(sigma);
    if (k.size() == 1) return grid;
    Grid<float, Tag> out = grid;
    for (int axis = 0; axis < 3; ++axis) convolve_axis(out, axis, k);
    return out;
}

template Grid<float, ScalarTag> gaussian_blur_raw(const Grid<float, ScalarTag>&, double);
template Grid<float, MaskTag> gaussian_blur_raw(const Grid<float, MaskTag>&, double);

ScalarVolume gaussian_blur(const ScalarVolume& volume, double sigma) { return gaussian_blur_raw(volume, sigma); }

SoftMask gaussian_blur(const SoftMask& mask, double sigma) {
    SoftMask out = gaussian_blur_raw(mask, sigma);
    for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

namespace {

template <typename G>
double trilinear(const G& g, const Vec3& p) {
    const auto& d = g.dims();
    int i0[3], i1[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double fl = std::floor(p[a]);
        i0[a] = std::min(static_cast<int>(fl), d[a] - 1);
        i1[a] = std::min(i0[a] + 1, d[a] - 1);
        f[a] = p[a] - i0[a];
    }
    if (f[0] == 0.0 && f[1] == 0.0 && f[2] == 0.0) return g(i0[0], i0[1], i0[2]);
    const double c00 = g(i0[0], i0[1], i0[2]) * (1 - f[0]) + g(i1[0], i0[1], i0[2]) * f[0];
    const double c10 = g(i0[0], i1[1], i0[2]) * (1 - f[0]) + g(i1[0], i1[1], i0[2]) * f[0];
    const double c01 = g(i0[0], i0[1], i1[2]) * (1 - f[0]) + g(i1[0], i0[1], i1[2]) * f[0];
    const double c11 = g(i0[0], i1[1], i1[2]) * (1 - f[0]) + g(i1[0], i1[1], i1[2]) * f[0];
    const double c0 = c00 * (1 - f[1]) + c10 * f[1];
    const double c1 = c01 * (1 - f[1]) + c11 * f[1];
    return c0 * (1 - f[2]) + c1 * f[2];
}

}  // namespace

double sample_trilinear(const ScalarVolume& volume, const Vec3& point) {
    const auto& d = volume.dims();
    for (int a = 0; a < 3; ++a)
        if (!(point[a] >= 0.0 && point[a] <= d[a] - 1))
            throw BoundsError("sample point outside volume on axis " + std::to_string(a) + ": " +
                              std::to_string(point[a]));
    return trilinear(volume, point);
}

template <typename Tag>
double sample_trilinear_clamped(const Grid<float, Tag>& grid, const Vec3& point) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = std::clamp(point[a], 0.0, static_cast<double>(grid.dims()[a] - 1));
    return trilinear(grid, p);
}

template double sample_trilinear_clamped(const Grid<float, ScalarTag>&, const Vec3&);
template double sample_trilinear_clamped(const Grid<float, MaskTag>&, const Vec3&);

}  // namespace tumorsynth
