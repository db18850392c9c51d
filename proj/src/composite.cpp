#include "tumorsynth/composite.hpp"

#include <cmath>

#include "tumorsynth/filters.hpp"

namespace tumorsynth {

void CapsuleParams::validate() const {
    if (!(lb >= 0.0 && lb < ub && ub <= 1.0)) throw ArgumentError("capsule bounds need 0 <= lb < ub <= 1");
    if (!(sigma_d >= 0.0) || !std::isfinite(sigma_d)) throw ArgumentError("sigma_d must be non-negative");
    if (!(d >= 0.0) || !std::isfinite(d)) throw ArgumentError("capsule d must be non-negative");
}

void MassEffectParams::validate() const {
    if (!(intensity >= 0.0 && intensity <= 100.0))
        throw ArgumentError("mass-effect intensity I must be in [0, 100], got " + std::to_string(intensity));
    if (!(gamma_max_mm > 0.0) || !std::isfinite(gamma_max_mm)) throw ArgumentError("gamma_max must be positive");
    for (double c : center)
        if (!std::isfinite(c)) throw ArgumentError("mass-effect center must be finite");
}

std::pair<ScalarVolume, LabelVolume> blend_tumor(const ScalarVolume& ct, const LabelVolume& labels,
                                                 const SoftMask& t, const ScalarVolume& texture,
                                                 double label_threshold) {
    const Geometry& g = ct.geometry();
    if (!g.same_lattice(labels.geometry()) || !g.same_lattice(t.geometry()) || !g.same_lattice(texture.geometry()))
        throw ArgumentError("blend inputs have mismatched geometry");
    ScalarVolume f = ct;
    LabelVolume l = labels;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double w = t[i];
        if (w == 0.0) continue;
        f[i] = static_cast<float>((1.0 - w) * ct[i] + w * texture[i]);
        if (w >= label_threshold && labels[i] == kLiver) l[i] = kTumor;
    }
    return {std::move(f), std::move(l)};
}

double mass_effect_source_distance(double gamma, double gamma_max, double intensity) {
    if (gamma >= gamma_max) return gamma;
    const double u = 1.0 - gamma / gamma_max;
    return (1.0 - u * u * intensity / 100.0) * gamma;
}

std::pair<ScalarVolume, LabelVolume> mass_effect_warp(const ScalarVolume& ct, const LabelVolume& labels,
                                                      const MassEffectParams& p) {
    p.validate();
    if (!ct.geometry().same_lattice(labels.geometry())) throw ArgumentError("warp inputs have mismatched geometry");
    const auto& d = ct.dims();
    const auto& s = ct.spacing();
    for (int a = 0; a < 3; ++a)
        if (!(p.center[a] >= 0.0 && p.center[a] <= d[a] - 1)) throw BoundsError("mass-effect center outside volume");

    ScalarVolume f = ct;
    LabelVolume l = labels;
    Box ball;
    for (int a = 0; a < 3; ++a) {
        const double r = p.gamma_max_mm / s[a];
        ball.lo[a] = static_cast<int>(std::floor(p.center[a] - r));
        ball.hi[a] = static_cast<int>(std::ceil(p.center[a] + r)) + 1;
    }
    ball = ball.clipped_to(d);
    for (int z = ball.lo[2]; z < ball.hi[2]; ++z)
        for (int y = ball.lo[1]; y < ball.hi[1]; ++y)
            for (int x = ball.lo[0]; x < ball.hi[0]; ++x) {
                const Vec3 off{x - p.center[0], y - p.center[1], z - p.center[2]};
                const double gamma = std::sqrt(off[0] * off[0] * s[0] * s[0] + off[1] * off[1] * s[1] * s[1] +
                                               off[2] * off[2] * s[2] * s[2]);
                if (gamma >= p.gamma_max_mm) continue;
                const double ratio =
                    gamma > 0.0 ? mass_effect_source_distance(gamma, p.gamma_max_mm, p.intensity) / gamma : 0.0;
                // p - (p - c)(1 - ratio) keeps ratio = 1 exact on the lattice.
                const Vec3 src{x - off[0] * (1.0 - ratio), y - off[1] * (1.0 - ratio), z - off[2] * (1.0 - ratio)};
                f(x, y, z) = static_cast<float>(sample_trilinear(ct, src));
                const int nx = static_cast<int>(std::lround(src[0]));
                const int ny = static_cast<int>(std::lround(src[1]));
                const int nz = static_cast<int>(std::lround(src[2]));
                l(x, y, z) = labels(nx, ny, nz);
            }
    return {std::move(f), std::move(l)};
}

ScalarVolume apply_capsule(const ScalarVolume& ct, const SoftMask& t, const CapsuleParams& p) {
    p.validate();
    if (!ct.geometry().same_lattice(t.geometry())) throw ArgumentError("capsule inputs have mismatched geometry");
    if (p.d == 0.0) return ct;
    SoftMask edge = SoftMask::like(t, 0.0f);
    bool any = false;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= p.lb && t[i] <= p.ub) {
            edge[i] = 1.0f;
            any = true;
        }
    if (!any) return ct;
    const SoftMask blurred = gaussian_blur(edge, p.sigma_d);
    ScalarVolume out = ct;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (blurred[i] > 0.0f) out[i] = static_cast<float>(ct[i] + p.d * blurred[i]);
    return out;
}

}  // namespace tumorsynth
