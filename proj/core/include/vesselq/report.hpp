#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vesselq/phantom.hpp"
#include "vesselq/seg_metrics.hpp"
#include "vesselq/stenosis.hpp"
#include "vesselq/stenosis_eval.hpp"

namespace vesselq {

inline constexpr int kReportVersion = 1;

/// Findings report: {schema, version, [timestamp], grade_colors, spacing_mm,
/// segments: [{id, start, end, length_voxels}], findings: [...]}.
nlohmann::json findings_to_json(const std::vector<StenosisFinding>& findings,
                                const std::vector<ArterySegment>& segments, const Spacing& spacing,
                                const std::optional<std::string>& timestamp);
FindingSet findings_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StenosisFinding& f);
StenosisFinding finding_from_json(const nlohmann::json& j);

nlohmann::json seg_metrics_to_json(const SegMetricsReport& r, const std::optional<std::string>& timestamp);
nlohmann::json eval_report_to_json(const StenosisEvalReport& r, const MatchResult& m,
                                   const std::optional<std::string>& timestamp);
/// Fixed-width text table with the columns Stenosis Type, TPR, PPV, ARMSE, RRMSE.
std::string eval_report_table(const StenosisEvalReport& r);

nlohmann::json graph_to_json(const SkeletonGraph& g);

/// Truth sidecar of a phantom: spec, per-tube analytic centerline and area
/// profile, and the expected findings in the findings-report layout.
nlohmann::json phantom_truth_to_json(const PhantomSpec& spec, const Phantom& phantom);

/// segment_id,point_index,x,y,z
std::string centerline_csv(const std::vector<ArterySegment>& segments);
/// segment_id,point_index,x,y,z,area_mm2
std::string areas_csv(const std::vector<SegmentAnalysis>& segments);

/// UTC time in ISO 8601, second resolution.
std::string utc_timestamp();

nlohmann::json read_json(const std::filesystem::path& path);
/// Writes via a temporary file renamed into place.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace vesselq
