#include "tumorsynth/vessels.hpp"

#include <cmath>

#include "tumorsynth/filters.hpp"

namespace tumorsynth {
namespace {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

// Welford accumulation over liver voxels not excluded by `vessels`.
Moments liver_moments(const ScalarVolume& ct, const LabelVolume& liver, const VesselMask* vessels) {
    Moments m;
    double m2 = 0.0;
    for (std::size_t i = 0; i < ct.size(); ++i) {
        if (liver[i] != kLiver) continue;
        if (vessels && (*vessels)[i]) continue;
        ++m.n;
        const double v = ct[i];
        const double delta = v - m.mean;
        m.mean += delta / static_cast<double>(m.n);
        m2 += delta * (v - m.mean);
    }
    if (m.n > 0) m.stddev = std::sqrt(m2 / static_cast<double>(m.n));
    return m;
}

void require_pair(const ScalarVolume& ct, const LabelVolume& liver) {
    if (!ct.geometry().same_lattice(liver.geometry()))
        throw ArgumentError("scan and liver mask geometries differ");
}

}  // namespace

double vessel_smoothing_sigma(double sigma_p) { return 0.5 + 0.025 * sigma_p; }

VesselMask segment_vessels(const ScalarVolume& ct, const LabelVolume& liver, const ParenchymaStats& stats,
                           const GenConfig& cfg) {
    require_pair(ct, liver);
    if (!(stats.sigma_p >= 0.0) || !std::isfinite(stats.liver_mean))
        throw ArgumentError("invalid parenchyma statistics");
    VesselMask v = VesselMask::like(ct, 0);
    const Box liver_box = bounding_box(liver, [](uint8_t l) { return l == kLiver; });
    if (liver_box.empty()) return v;

    const double sigma_a = cfg.sigma_a_base + cfg.sigma_a_slope * stats.sigma_p;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma_a));
    // Blurring the padded liver box is identical to blurring the whole scan on liver voxels.
    const Box roi = liver_box.grown({radius, radius, radius}).clipped_to(ct.dims());
    const ScalarVolume smoothed = gaussian_blur(crop(ct, roi), sigma_a);
    const double threshold = stats.liver_mean + cfg.b;

    const auto& sd = smoothed.dims();
    for (int z = 0; z < sd[2]; ++z)
        for (int y = 0; y < sd[1]; ++y)
            for (int x = 0; x < sd[0]; ++x) {
                const std::size_t g = ct.index(x + roi.lo[0], y + roi.lo[1], z + roi.lo[2]);
                if (liver[g] == kLiver && smoothed(x, y, z) > threshold) v[g] = 1;
            }
    return v;
}

ParenchymaStats estimate_parenchyma_stats(const ScalarVolume& ct, const LabelVolume& liver, const GenConfig& cfg) {
    require_pair(ct, liver);
    const Moments all = liver_moments(ct, liver, nullptr);
    if (all.n == 0) throw ArgumentError("liver mask has no voxels of label 1");

    ParenchymaStats first{all.mean, all.mean, all.stddev, all.n};
    const VesselMask vessels = segment_vessels(ct, liver, first, cfg);
    const Moments rest = liver_moments(ct, liver, &vessels);
    if (rest.n == 0) {
        // Every liver voxel was flagged; fall back to the unsplit statistics.
        return first;
    }
    return ParenchymaStats{all.mean, rest.mean, rest.stddev, rest.n};
}

}  // namespace tumorsynth
