#include "tumorsynth/texture.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tumorsynth/filters.hpp"

namespace tumorsynth {

void TextureParams::validate() const {
    if (!std::isfinite(mu_t)) throw ArgumentError("texture mean must be finite");
    if (!(sigma_p >= 0.0) || !std::isfinite(sigma_p)) throw ArgumentError("texture std must be non-negative");
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw ArgumentError("eta must be >= 1");
    if (!(sigma_b >= 0.0) || !std::isfinite(sigma_b)) throw ArgumentError("sigma_b must be non-negative");
}

ScalarVolume generate_noise(const Geometry& geometry, const TextureParams& params, Rng& rng) {
    params.validate();
    ScalarVolume out(geometry);
    for (float& v : out.data()) v = static_cast<float>(rng.normal(params.mu_t, params.sigma_p));
    return out;
}

namespace {

struct Taps {
    int base = 0;      // index of the sample at offset -1
    double w[4]{};     // weights for base .. base+3
};

// Catmull-Rom weights for fractional offset t in [0, 1).
void catmull_rom(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

// Sample i of a line with odd-reflection past both ends: f(-k) = 2 f(0) - f(k).
double extended(const double* line, int n, int i) {
    if (n == 1) return line[0];
    if (i < 0) {
        const int k = std::min(-i, n - 1);
        return 2.0 * line[0] - line[k];
    }
    if (i >= n) {
        const int k = std::min(i - (n - 1), n - 1);
        return 2.0 * line[n - 1] - line[n - 1 - k];
    }
    return line[i];
}

ScalarVolume resample_axis(const ScalarVolume& in, int axis, int n_out, double eta) {
    Geometry g = in.geometry();
    const int n_in = g.dims[axis];
    g.dims[axis] = n_out;
    g.spacing[axis] = g.spacing[axis] / eta;
    ScalarVolume out(g);

    std::vector<Taps> taps(n_out);
    for (int o = 0; o < n_out; ++o) {
        const double pos = o / eta;
        const double fl = std::floor(pos);
        taps[o].base = static_cast<int>(fl) - 1;
        catmull_rom(pos - fl, taps[o].w);
    }

    const auto& di = in.dims();
    const int o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
    std::vector<double> line(n_in);
    for (int b = 0; b < di[o2]; ++b)
        for (int a = 0; a < di[o1]; ++a) {
            Index3 p{0, 0, 0};
            p[o1] = a;
            p[o2] = b;
            for (int i = 0; i < n_in; ++i) {
                p[axis] = i;
                line[i] = in(p[0], p[1], p[2]);
            }
            for (int o = 0; o < n_out; ++o) {
                const Taps& t = taps[o];
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.w[k] * extended(line.data(), n_in, t.base + k);
                p[axis] = o;
                out(p[0], p[1], p[2]) = static_cast<float>(acc);
            }
        }
    return out;
}

}  // namespace

ScalarVolume upscale_cubic(const ScalarVolume& field, double eta) {
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw ArgumentError("eta must be >= 1");
    if (eta == 1.0) return field;
    ScalarVolume cur = field;
    for (int axis = 0; axis < 3; ++axis) {
        const int n_out = static_cast<int>(std::ceil(field.dims()[axis] * eta - 1e-9));
        cur = resample_axis(cur, axis, n_out, eta);
    }
    return cur;
}

ScalarVolume generate_texture(const Geometry& geometry, const TextureParams& params, Rng& rng) {
    params.validate();
    Geometry coarse = geometry;
    for (int a = 0; a < 3; ++a) {
        coarse.dims[a] = std::max(1, static_cast<int>(std::ceil(geometry.dims[a] / params.eta - 1e-9)));
        coarse.spacing[a] = geometry.spacing[a] * params.eta;
    }
    const ScalarVolume up = upscale_cubic(generate_noise(coarse, params, rng), params.eta);

    Box box;
    for (int a = 0; a < 3; ++a) {
        box.lo[a] = (up.dims()[a] - geometry.dims[a]) / 2;
        box.hi[a] = box.lo[a] + geometry.dims[a];
    }
    ScalarVolume cropped = crop(up, box);
    ScalarVolume sized(geometry, std::vector<float>(cropped.values()));
    return gaussian_blur(sized, params.sigma_b);
}

}  // namespace tumorsynth
