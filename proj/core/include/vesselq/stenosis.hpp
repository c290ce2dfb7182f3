#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vesselq/cross_section.hpp"
#include "vesselq/vessel_tree.hpp"

namespace vesselq {

enum class Grade { none, minimal, mild, moderate, severe };

std::string_view to_string(Grade g) noexcept;
Grade grade_from_string(std::string_view name);
/// Display colour per grade: green, blue, yellow, red; "none" has no colour.
std::string_view grade_color(Grade g) noexcept;

struct StenosisFinding {
    int segment_id = 0;
    std::size_t index = 0;  ///< centerline point index of the minimum
    Voxel position;
    double a_min = 0.0;  ///< mm^2
    double a_ref = 0.0;  ///< mm^2
    double degree = 0.0;
    Grade grade = Grade::none;

    bool operator==(const StenosisFinding&) const = default;
};

/// d2[i] = sign(A[i] - A[i-1]) + sign(A[i] - A[i+1]) for interior points, 0 at
/// both ends: -2 marks a strict local minimum, +2 a strict local maximum.
std::vector<int> second_derivative_marks(std::span<const double> areas);

struct Extrema {
    std::vector<std::size_t> minima;
    std::vector<std::size_t> maxima;
};
Extrema find_extrema(std::span<const double> areas);

/// Three-point moving average; the two end values average their two available points.
std::vector<double> smooth3(std::span<const double> areas);

/// b = 1 - a_min / a_ref, clamped to 0 when a_min > a_ref.
double stenosis_degree(double a_min, double a_ref);

/// [0.01, 0.25) minimal, [0.25, 0.5) mild, [0.5, 0.7) moderate, [0.7, 1] severe.
Grade grade(double b) noexcept;

struct StenosisParams {
    CenterlineOptions centerline{};
    AreaParams area{};
    int min_len = 20;
    double report_threshold = 0.1;
    bool smooth = true;  ///< extrema on the 3-point moving average of the profile
    std::optional<Voxel> root;
    int threads = 1;
};

struct SegmentAnalysis {
    ArterySegment segment;  ///< oriented proximal first
    AreaProfile profile;
    std::vector<double> detection_profile;  ///< profile the extrema were taken from
    std::vector<std::size_t> candidates;    ///< all local minima
    std::optional<double> a_ref;
};

struct StenosisAnalysis {
    Centerline centerline;
    std::vector<SegmentAnalysis> segments;  ///< after prune_short, ordered by segment id
    std::vector<StenosisFinding> findings;  ///< ordered by (segment_id, index)
};

/// Per-segment detection on an area profile. Findings carry the profile's
/// segment id and positions from `segment`.
std::vector<StenosisFinding> detect_on_profile(const ArterySegment& segment, std::span<const double> areas,
                                               const StenosisParams& params,
                                               SegmentAnalysis* detail = nullptr);

StenosisAnalysis analyze_stenoses(const Mask& mask, const StenosisParams& params = {});

std::vector<StenosisFinding> detect_stenoses(const Mask& mask, const StenosisParams& params = {});

}  // namespace vesselq
