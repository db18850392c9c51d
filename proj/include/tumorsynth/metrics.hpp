// Segmentation, detection and reader-study metrics.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tumorsynth/grid.hpp"

namespace tumorsynth {

/// Binary mask on a lattice; any nonzero value is foreground.
struct BinaryMask {
    Geometry geometry;
    std::vector<bool> voxels;

    static BinaryMask from_labels(const LabelVolume& labels, uint8_t target);
    std::size_t count() const;
};

/// 2|A n B| / (|A| + |B|); 1.0 when both are empty.
double dsc(const BinaryMask& a, const BinaryMask& b);

/// Foreground voxels with at least one 6-neighbor that is background or outside the grid.
std::vector<bool> surface_voxels(const BinaryMask& m);

/// Normalized surface Dice at tolerance tau (mm): the fraction of both
/// surfaces lying within tau of the other surface. 1.0 when both are empty,
/// 0.0 when exactly one is.
double nsd(const BinaryMask& a, const BinaryMask& b, double tolerance_mm = 2.0);

struct SegScores {
    double dsc = 0.0;
    double nsd = 0.0;
    double tolerance_mm = 2.0;
};

SegScores score_segmentation(const BinaryMask& gt, const BinaryMask& pred, double tolerance_mm = 2.0);

struct RadiusBucket {
    std::string name;
    double lo_mm;  // inclusive
    double hi_mm;  // exclusive
    std::size_t total = 0;
    std::size_t detected = 0;
    std::optional<double> sensitivity() const;
};

struct GroundTruthTumor {
    double radius_mm = 0.0;
    std::size_t voxels = 0;
    std::size_t overlap_voxels = 0;
    bool detected = false;
};

struct DetectionReport {
    std::vector<GroundTruthTumor> tumors;
    std::vector<RadiusBucket> coarse;  // <5mm, >=5mm
    std::vector<RadiusBucket> fine;    // 0-2, 2-5, 5-10, 10-20, >20 mm
    std::size_t false_positives = 0;
    std::size_t predicted_components = 0;

    std::optional<double> sensitivity() const;
};

/// Per-tumor detection: ground-truth tumors are 26-connected components of
/// label 2; a tumor is detected when at least `min_overlap_fraction` of its
/// voxels are predicted tumor. Predicted components touching no ground-truth
/// tumor are false positives.
DetectionReport detect(const LabelVolume& gt, const LabelVolume& pred, double min_overlap_fraction = 0.1);

/// Fraction of healthy scans with no predicted tumor voxel.
std::optional<double> healthy_scan_specificity(const std::vector<LabelVolume>& predictions_on_healthy);

/// Reader judgments from a visual Turing test, by ground truth.
struct TuringCounts {
    std::size_t real_as_real = 0;
    std::size_t real_as_synthetic = 0;
    std::size_t real_unsure = 0;
    std::size_t synthetic_as_real = 0;
    std::size_t synthetic_as_synthetic = 0;
    std::size_t synthetic_unsure = 0;
};

struct TuringTally {
    TuringCounts counts;
    std::size_t total = 0;
    std::size_t definite = 0;
    double accuracy = 0.0;
    std::optional<double> sensitivity;  // synthetic is the positive class
    std::optional<double> specificity;  // empty when that truth class has no definite answer
};

/// Metrics over definite answers only; UndefinedMetrics when there are none.
TuringTally turing_metrics(const TuringCounts& counts);

}  // namespace tumorsynth
