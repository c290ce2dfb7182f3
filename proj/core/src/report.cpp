#include "vesselq/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vesselq {
namespace {

nlohmann::json voxel_json(const Voxel& v) { return {v.x, v.y, v.z}; }

Voxel voxel_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) fail(ErrorKind::format, "expected a 3-element voxel coordinate");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string rate_cell(const Rate& r) { return r.undefined ? "n/a" : fixed(r.value, 4); }
std::string opt_cell(const std::optional<double>& v) { return v ? fixed(*v, 4) : "n/a"; }

nlohmann::json rate_json(const Rate& r) { return r.undefined ? nlohmann::json(nullptr) : nlohmann::json(r.value); }
nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const StenosisFinding& f) {
    return {{"segment_id", f.segment_id},
            {"index", f.index},
            {"x", f.position.x},
            {"y", f.position.y},
            {"z", f.position.z},
            {"a_min_mm2", f.a_min},
            {"a_ref_mm2", f.a_ref},
            {"degree", f.degree},
            {"grade", std::string(to_string(f.grade))}};
}

StenosisFinding finding_from_json(const nlohmann::json& j) {
    try {
        StenosisFinding f;
        f.segment_id = j.at("segment_id").get<int>();
        f.index = j.value("index", std::size_t{0});
        f.position = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("z").get<int>()};
        f.a_min = j.value("a_min_mm2", 0.0);
        f.a_ref = j.value("a_ref_mm2", 0.0);
        f.degree = j.at("degree").get<double>();
        f.grade = j.contains("grade") ? grade_from_string(j.at("grade").get<std::string>()) : grade(f.degree);
        return f;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("finding: ") + e.what());
    }
}

nlohmann::json findings_to_json(const std::vector<StenosisFinding>& findings,
                                const std::vector<ArterySegment>& segments, const Spacing& spacing,
                                const std::optional<std::string>& timestamp) {
    nlohmann::json j;
    j["schema"] = "vesselq.findings";
    j["version"] = kReportVersion;
    if (timestamp) j["timestamp"] = *timestamp;
    j["grade_colors"] = nlohmann::json::object();
    for (Grade g : {Grade::minimal, Grade::mild, Grade::moderate, Grade::severe}) {
        j["grade_colors"][std::string(to_string(g))] = std::string(grade_color(g));
    }
    j["spacing_mm"] = {spacing.dx, spacing.dy, spacing.dz};
    j["segments"] = nlohmann::json::array();
    for (const auto& s : segments) {
        if (s.points.empty()) continue;
        j["segments"].push_back({{"id", s.id},
                                 {"start", voxel_json(s.front())},
                                 {"end", voxel_json(s.back())},
                                 {"length_voxels", s.length_voxels()}});
    }
    j["findings"] = nlohmann::json::array();
    for (const auto& f : findings) j["findings"].push_back(to_json(f));
    return j;
}

FindingSet findings_from_json(const nlohmann::json& j) {
    FindingSet set;
    try {
        if (!j.is_object() || !j.contains("findings")) {
            fail(ErrorKind::format, "findings report: missing 'findings'");
        }
        if (j.contains("schema") && j.at("schema") != "vesselq.findings") {
            fail(ErrorKind::format, "findings report: unexpected schema " + j.at("schema").dump());
        }
        for (const auto& f : j.at("findings")) set.findings.push_back(finding_from_json(f));
        if (j.contains("segments")) {
            for (const auto& s : j.at("segments")) {
                set.segments.push_back({s.at("id").get<int>(), voxel_from(s.at("start")), voxel_from(s.at("end"))});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("findings report: ") + e.what());
    }
    return set;
}

nlohmann::json seg_metrics_to_json(const SegMetricsReport& r, const std::optional<std::string>& timestamp) {
    nlohmann::json j;
    j["schema"] = "vesselq.seg_metrics";
    j["version"] = kReportVersion;
    if (timestamp) j["timestamp"] = *timestamp;
    j["dice"] = r.dice;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["hd_mm"] = r.hd_mm;
    j["hd95_mm"] = r.hd95_mm;
    return j;
}

nlohmann::json eval_report_to_json(const StenosisEvalReport& r, const MatchResult& m,
                                   const std::optional<std::string>& timestamp) {
    nlohmann::json j;
    j["schema"] = "vesselq.stenosis_eval";
    j["version"] = kReportVersion;
    if (timestamp) j["timestamp"] = *timestamp;
    j["detection_radius_voxels"] = r.radius;
    j["error_mode"] = r.mode == ErrorMode::degree ? "degree" : "area";
    j["definitions"] = {
        {"TPR", "TP / (TP + FN), the recall of ground-truth stenosis points"},
        {"PPV", "TP / (TP + FP), the precision of predicted stenosis points"},
        {"note", "computed exactly as defined above; published tables sometimes swap the TPR and PPV labels"}};
    j["rows"] = nlohmann::json::array();
    for (const auto& row : r.rows) {
        j["rows"].push_back({{"stenosis_type", row.stratum},
                             {"tp", row.tp},
                             {"fp", row.fp},
                             {"fn", row.fn},
                             {"tpr", rate_json(row.tpr)},
                             {"ppv", rate_json(row.ppv)},
                             {"armse", opt_json(row.armse)},
                             {"rrmse", opt_json(row.rrmse)}});
    }
    j["pairs"] = nlohmann::json::array();
    for (const auto& [p, g] : m.pairs) j["pairs"].push_back({{"pred", p}, {"gt", g}});
    j["segment_pairs"] = nlohmann::json::array();
    for (const auto& [p, g] : m.segment_pairs) j["segment_pairs"].push_back({{"pred", p}, {"gt", g}});
    j["warnings"] = r.warnings;
    return j;
}

std::string eval_report_table(const StenosisEvalReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "Stenosis Type" << std::setw(10) << "TPR" << std::setw(10) << "PPV"
       << std::setw(10) << "ARMSE" << std::setw(10) << "RRMSE" << std::setw(6) << "TP" << std::setw(6) << "FP"
       << "FN\n";
    for (const auto& row : r.rows) {
        os << std::left << std::setw(16) << row.stratum << std::setw(10) << rate_cell(row.tpr) << std::setw(10)
           << rate_cell(row.ppv) << std::setw(10) << opt_cell(row.armse) << std::setw(10) << opt_cell(row.rrmse)
           << std::setw(6) << row.tp << std::setw(6) << row.fp << row.fn << '\n';
    }
    return os.str();
}

nlohmann::json graph_to_json(const SkeletonGraph& g) {
    auto kind = [](NodeKind k) {
        switch (k) {
            case NodeKind::isolated: return "isolated";
            case NodeKind::endpoint: return "endpoint";
            case NodeKind::connector: return "connector";
            case NodeKind::branch: return "branch";
        }
        return "isolated";
    };
    nlohmann::json j;
    j["schema"] = "vesselq.graph";
    j["version"] = kReportVersion;
    j["nodes"] = nlohmann::json::array();
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const auto& n = g.nodes[k];
        j["nodes"].push_back({{"id", k},
                              {"position", voxel_json(n.position)},
                              {"degree", n.degree},
                              {"kind", kind(n.kind)},
                              {"members", n.members.size()}});
    }
    j["edges"] = nlohmann::json::array();
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        const auto& e = g.edges[k];
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : e.points) pts.push_back(voxel_json(p));
        j["edges"].push_back({{"id", k}, {"from", e.from}, {"to", e.to}, {"closed", e.closed}, {"points", pts}});
    }
    j["summary"] = {{"endpoints", g.count(NodeKind::endpoint)},
                    {"branches", g.count(NodeKind::branch)},
                    {"edges", g.edges.size()}};
    return j;
}

nlohmann::json phantom_truth_to_json(const PhantomSpec& spec, const Phantom& phantom) {
    nlohmann::json j;
    j["schema"] = "vesselq.findings";
    j["version"] = kReportVersion;
    j["spacing_mm"] = {spec.spacing.dx, spec.spacing.dy, spec.spacing.dz};
    j["spec"] = to_json(spec);
    j["segments"] = nlohmann::json::array();
    j["findings"] = nlohmann::json::array();
    j["tubes"] = nlohmann::json::array();
    for (std::size_t k = 0; k < phantom.truth.size(); ++k) {
        const auto& t = phantom.truth[k];
        auto vox = [&](const Vec3& mm) {
            return Voxel{static_cast<int>(std::lround(mm[0] / spec.spacing.dx)),
                         static_cast<int>(std::lround(mm[1] / spec.spacing.dy)),
                         static_cast<int>(std::lround(mm[2] / spec.spacing.dz))};
        };
        j["segments"].push_back({{"id", k},
                                 {"start", voxel_json(vox(t.centerline_mm.front()))},
                                 {"end", voxel_json(vox(t.centerline_mm.back()))},
                                 {"length_voxels", t.centerline_mm.size()}});
        for (const auto& f : t.expected_findings) j["findings"].push_back(to_json(f));
        nlohmann::json jt;
        jt["id"] = k;
        jt["centerline_mm"] = t.centerline_mm;
        jt["arc_length_mm"] = t.arc_length_mm;
        jt["areas_mm2"] = t.areas_mm2;
        j["tubes"].push_back(jt);
    }
    return j;
}

std::string centerline_csv(const std::vector<ArterySegment>& segments) {
    std::ostringstream os;
    os << "segment_id,point_index,x,y,z\n";
    for (const auto& s : segments) {
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            const auto& p = s.points[i];
            os << s.id << ',' << i << ',' << p.x << ',' << p.y << ',' << p.z << '\n';
        }
    }
    return os.str();
}

std::string areas_csv(const std::vector<SegmentAnalysis>& segments) {
    std::ostringstream os;
    os << "segment_id,point_index,x,y,z,area_mm2\n";
    os << std::setprecision(17);
    for (const auto& sa : segments) {
        for (std::size_t i = 0; i < sa.segment.points.size(); ++i) {
            const auto& p = sa.segment.points[i];
            os << sa.segment.id << ',' << i << ',' << p.x << ',' << p.y << ',' << p.z << ','
               << sa.profile.areas[i] << '\n';
        }
    }
    return os.str();
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
        out << text;
        if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::io, "cannot move output into place at '" + path.string() + "'");
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace vesselq
