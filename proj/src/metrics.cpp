#include "tumorsynth/metrics.hpp"

#include <cmath>

#include "tumorsynth/components.hpp"
#include "tumorsynth/distance.hpp"

namespace tumorsynth {

BinaryMask BinaryMask::from_labels(const LabelVolume& labels, uint8_t target) {
    BinaryMask m{labels.geometry(), std::vector<bool>(labels.size())};
    for (std::size_t i = 0; i < labels.size(); ++i) m.voxels[i] = labels[i] == target;
    return m;
}

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (bool v : voxels) n += v;
    return n;
}

namespace {
void require_same(const BinaryMask& a, const BinaryMask& b) {
    if (!a.geometry.same_lattice(b.geometry) || a.voxels.size() != b.voxels.size())
        throw ArgumentError("masks have mismatched geometry");
}
}  // namespace

double dsc(const BinaryMask& a, const BinaryMask& b) {
    require_same(a, b);
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.voxels.size(); ++i) {
        na += a.voxels[i];
        nb += b.voxels[i];
        both += a.voxels[i] && b.voxels[i];
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<bool> surface_voxels(const BinaryMask& m) {
    const auto& d = m.geometry.dims;
    std::vector<bool> out(m.voxels.size(), false);
    auto at = [&](int x, int y, int z) {
        return m.voxels[static_cast<std::size_t>(x) + static_cast<std::size_t>(d[0]) * (y + static_cast<std::size_t>(d[1]) * z)];
    };
    static const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::size_t i = 0;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x, ++i) {
                if (!m.voxels[i]) continue;
                for (const auto& o : off) {
                    const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (!m.geometry.contains(nx, ny, nz) || !at(nx, ny, nz)) {
                        out[i] = true;
                        break;
                    }
                }
            }
    return out;
}

double nsd(const BinaryMask& a, const BinaryMask& b, double tolerance_mm) {
    require_same(a, b);
    if (!(tolerance_mm >= 0.0)) throw ArgumentError("NSD tolerance must be non-negative");
    const auto sa = surface_voxels(a);
    const auto sb = surface_voxels(b);
    std::size_t na = 0, nb = 0;
    for (bool v : sa) na += v;
    for (bool v : sb) nb += v;
    if (na == 0 && nb == 0) return 1.0;
    if (na == 0 || nb == 0) return 0.0;
    const auto da = squared_distance_transform(sa, a.geometry);
    const auto db = squared_distance_transform(sb, b.geometry);
    // Relative slack absorbs rounding in sums of squared spacings.
    const double tau2 = tolerance_mm * tolerance_mm * (1.0 + 1e-12);
    std::size_t close = 0;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        if (sa[i] && db[i] <= tau2) ++close;
        if (sb[i] && da[i] <= tau2) ++close;
    }
    return static_cast<double>(close) / static_cast<double>(na + nb);
}

SegScores score_segmentation(const BinaryMask& gt, const BinaryMask& pred, double tolerance_mm) {
    return SegScores{dsc(gt, pred), nsd(gt, pred, tolerance_mm), tolerance_mm};
}

std::optional<double> RadiusBucket::sensitivity() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(detected) / static_cast<double>(total);
}

std::optional<double> DetectionReport::sensitivity() const {
    if (tumors.empty()) return std::nullopt;
    std::size_t hit = 0;
    for (const auto& t : tumors) hit += t.detected;
    return static_cast<double>(hit) / static_cast<double>(tumors.size());
}

DetectionReport detect(const LabelVolume& gt, const LabelVolume& pred, double min_overlap_fraction) {
    if (!gt.geometry().same_lattice(pred.geometry())) throw ArgumentError("masks have mismatched geometry");
    if (!(min_overlap_fraction > 0.0 && min_overlap_fraction <= 1.0))
        throw ArgumentError("min_overlap_fraction must be in (0, 1]");
    DetectionReport r;
    r.coarse = {{"<5mm", 0.0, 5.0}, {">=5mm", 5.0, INFINITY}};
    r.fine = {{"0-2mm", 0.0, 2.0}, {"2-5mm", 2.0, 5.0}, {"5-10mm", 5.0, 10.0}, {"10-20mm", 10.0, 20.0},
              {">20mm", 20.0, INFINITY}};

    const ComponentSet g = connected_components(gt, kTumor, Connectivity::TwentySix);
    std::vector<std::size_t> overlap(g.count, 0);
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (g.labels[i] > 0 && pred[i] == kTumor) ++overlap[g.labels[i] - 1];
    for (int c = 0; c < g.count; ++c) {
        GroundTruthTumor t;
        t.radius_mm = g.radii_mm[c];
        t.voxels = g.voxel_counts[c];
        t.overlap_voxels = overlap[c];
        t.detected = static_cast<double>(t.overlap_voxels) >= min_overlap_fraction * static_cast<double>(t.voxels);
        for (auto* buckets : {&r.coarse, &r.fine})
            for (auto& b : *buckets)
                if (t.radius_mm >= b.lo_mm && t.radius_mm < b.hi_mm) {
                    ++b.total;
                    b.detected += t.detected;
                }
        r.tumors.push_back(t);
    }

    const ComponentSet p = connected_components(pred, kTumor, Connectivity::TwentySix);
    r.predicted_components = static_cast<std::size_t>(p.count);
    std::vector<bool> touches(p.count, false);
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (p.labels[i] > 0 && gt[i] == kTumor) touches[p.labels[i] - 1] = true;
    for (bool t : touches) r.false_positives += !t;
    return r;
}

std::optional<double> healthy_scan_specificity(const std::vector<LabelVolume>& preds) {
    if (preds.empty()) return std::nullopt;
    std::size_t clean = 0;
    for (const auto& p : preds) {
        bool any = false;
        for (uint8_t v : p.data())
            if (v == kTumor) {
                any = true;
                break;
            }
        clean += !any;
    }
    return static_cast<double>(clean) / static_cast<double>(preds.size());
}

TuringTally turing_metrics(const TuringCounts& c) {
    TuringTally t;
    t.counts = c;
    const std::size_t real_def = c.real_as_real + c.real_as_synthetic;
    const std::size_t synt_def = c.synthetic_as_real + c.synthetic_as_synthetic;
    t.definite = real_def + synt_def;
    t.total = t.definite + c.real_unsure + c.synthetic_unsure;
    if (t.definite == 0) throw UndefinedMetrics("no definite judgments; accuracy, sensitivity and specificity are undefined");
    t.accuracy = static_cast<double>(c.real_as_real + c.synthetic_as_synthetic) / static_cast<double>(t.definite);
    if (synt_def > 0) t.sensitivity = static_cast<double>(c.synthetic_as_synthetic) / static_cast<double>(synt_def);
    if (real_def > 0) t.specificity = static_cast<double>(c.real_as_real) / static_cast<double>(real_def);
    return t;
}

}  // namespace tumorsynth
