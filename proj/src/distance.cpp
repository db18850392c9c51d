#include "tumorsynth/distance.hpp"

#include <limits>

namespace tumorsynth {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D lower envelope of parabolas w^2 (q - p)^2 + f(p) over the finite samples of f.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, double w2,
                 std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + w2 * q * q) - (f[p] + w2 * p * p)) / (2.0 * w2 * (q - p));
            if (s > z[k]) break;
            --k;  // z[0] is -inf, so k never drops below 0
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(out.begin(), out.end(), kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double d = q - v[j];
        out[q] = w2 * d * d + f[v[j]];
    }
}

}  // namespace

std::vector<double> squared_distance_transform(const std::vector<bool>& sites, const Geometry& geo) {
    const auto& d = geo.dims;
    if (sites.size() != geo.voxel_count()) throw ArgumentError("site mask does not match geometry");
    std::vector<double> dist(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) dist[i] = sites[i] ? 0.0 : kInf;

    const std::size_t strides[3] = {1, static_cast<std::size_t>(d[0]),
                                    static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1])};
    for (int axis = 0; axis < 3; ++axis) {
        const int n = d[axis];
        const double w2 = geo.spacing[axis] * geo.spacing[axis];
        std::vector<double> f(n), out(n), z(n + 1);
        std::vector<int> v(n);
        const int o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
        for (int b = 0; b < d[o2]; ++b)
            for (int a = 0; a < d[o1]; ++a) {
                std::size_t base = a * strides[o1] + b * strides[o2];
                for (int i = 0; i < n; ++i) f[i] = dist[base + i * strides[axis]];
                envelope_1d(f, out, w2, v, z);
                for (int i = 0; i < n; ++i) dist[base + i * strides[axis]] = out[i];
            }
    }
    return dist;
}

}  // namespace tumorsynth
