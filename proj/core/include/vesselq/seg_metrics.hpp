#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vesselq/volume.hpp"

namespace vesselq {

struct OverlapMetrics {
    double dice = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Both empty gives (1, 1, 1); any other zero denominator gives 0.
OverlapMetrics overlap_metrics(const Mask& pred, const Mask& gt);

/// Foreground voxels with at least one background 6-neighbour (outside counts as background).
Mask boundary(const Mask& mask);

/// Squared Euclidean distance in mm^2 from every voxel to the nearest
/// foreground voxel of `sites`; +inf everywhere when `sites` is empty.
RealVolume squared_distance_transform(const Mask& sites);

/// Distances in mm from each boundary voxel of `from` to the boundary of `to`.
std::vector<double> directed_boundary_distances(const Mask& from, const Mask& to);

/// Linear-interpolation percentile of `values` (q in [0, 100]).
double percentile(std::vector<double> values, double q);

/// percentile = 100 gives the Hausdorff distance; otherwise the larger of the two
/// directed percentiles. Throws ErrorKind::undefined for an empty mask.
double hausdorff(const Mask& pred, const Mask& gt, double percentile = 100.0);

struct SegMetricsReport {
    double dice = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double hd_mm = 0.0;
    double hd95_mm = 0.0;
};

SegMetricsReport segmentation_metrics(const Mask& pred, const Mask& gt);

/// Mean binary cross-entropy with predictions clamped to [eps, 1 - eps].
double bce_loss(const RealVolume& pred, const Mask& gt, double eps = 1e-7);
double dice_loss(const RealVolume& pred, const Mask& gt, double eps = 1e-6);
/// lambda * dice_loss + (1 - lambda) * bce_loss.
double combined_loss(const RealVolume& pred, const Mask& gt, double lambda = 0.5, double bce_eps = 1e-7,
                     double dice_eps = 1e-6);

struct EnsembleSummary {
    RealVolume mean;
    RealVolume variance;  ///< population variance, divisor G
    std::size_t g = 0;
};

EnsembleSummary ensemble_aggregate(std::span<const RealVolume> preds);

/// Min-max normalisation to [0, 1]; a constant input maps to zeros.
RealVolume normalize_uncertainty(const RealVolume& variance);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values) noexcept;

}  // namespace vesselq
