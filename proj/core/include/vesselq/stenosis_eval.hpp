#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vesselq/stenosis.hpp"

namespace vesselq {

struct SegmentEnds {
    int id = 0;
    Voxel start;
    Voxel end;

    bool operator==(const SegmentEnds&) const = default;
};

/// Findings of one case together with the segments they were detected on.
struct FindingSet {
    std::vector<StenosisFinding> findings;
    std::vector<SegmentEnds> segments;
};

struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< (pred index, gt index)
    std::vector<std::size_t> false_positives;                 ///< pred indices
    std::vector<std::size_t> false_negatives;                 ///< gt indices
    std::vector<std::pair<int, int>> segment_pairs;           ///< (pred id, gt id) matched by segment
    double radius = 20.0;

    std::size_t tp() const noexcept { return pairs.size(); }
    std::size_t fp() const noexcept { return false_positives.size(); }
    std::size_t fn() const noexcept { return false_negatives.size(); }
};

/// Euclidean distance in voxel units.
double voxel_distance(const Voxel& a, const Voxel& b) noexcept;

/// Endpoint distances of two segments under the endpoint pairing with the
/// smaller total, larger first.
std::pair<double, double> segment_end_distances(const SegmentEnds& a, const SegmentEnds& b) noexcept;

/// Segment rule first: segments match one-to-one, greedily by (larger, then
/// summed) endpoint distance, when both distances are below `radius`; findings
/// on matched segment pairs pair greedily by ascending distance below `radius`.
/// Nearest-point rule next: findings on unmatched predicted segments take the
/// nearest unconsumed ground-truth finding below `radius`, globally greedy.
MatchResult match(const FindingSet& pred, const FindingSet& gt, double radius = 20.0);

struct Rate {
    double value = 0.0;
    bool undefined = false;  ///< zero denominator; value is 0
};

Rate tpr(std::size_t tp, std::size_t fn) noexcept;
Rate ppv(std::size_t tp, std::size_t fp) noexcept;

/// Throws on an empty set; rrmse also on b_true == 0.
double armse(std::span<const std::pair<double, double>> pairs);
double rrmse(std::span<const std::pair<double, double>> pairs);

enum class ErrorMode { degree, area };

struct StratumRow {
    std::string stratum;  ///< all, minimal, mild, moderate, severe
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    Rate tpr;
    Rate ppv;
    std::optional<double> armse;
    std::optional<double> rrmse;
};

struct StenosisEvalReport {
    double radius = 20.0;
    ErrorMode mode = ErrorMode::degree;
    std::vector<StratumRow> rows;  ///< "all" first, then the four grades
    std::vector<std::string> warnings;
};

/// TP and FN rows follow the ground-truth grade, FP rows the predicted grade.
StenosisEvalReport stratified_report(const MatchResult& m, const FindingSet& pred, const FindingSet& gt,
                                     ErrorMode mode = ErrorMode::degree);

}  // namespace vesselq
