#include "vesselq/stenosis_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace vesselq {

double voxel_distance(const Voxel& a, const Voxel& b) noexcept {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

std::pair<double, double> segment_end_distances(const SegmentEnds& a, const SegmentEnds& b) noexcept {
    const double s1 = voxel_distance(a.start, b.start), e1 = voxel_distance(a.end, b.end);
    const double s2 = voxel_distance(a.start, b.end), e2 = voxel_distance(a.end, b.start);
    const bool straight = s1 + e1 <= s2 + e2;
    const double p = straight ? s1 : s2, q = straight ? e1 : e2;
    return {std::max(p, q), std::min(p, q)};
}

namespace {

struct Candidate {
    double key1;
    double key2;
    std::size_t a;
    std::size_t b;

    bool operator<(const Candidate& o) const {
        return std::tie(key1, key2, a, b) < std::tie(o.key1, o.key2, o.a, o.b);
    }
};

}  // namespace

MatchResult match(const FindingSet& pred, const FindingSet& gt, double radius) {
    if (!(radius > 0.0)) fail(ErrorKind::validation, "detection radius must be > 0");
    MatchResult m;
    m.radius = radius;

    // Segment rule.
    std::vector<Candidate> seg;
    for (std::size_t i = 0; i < pred.segments.size(); ++i) {
        for (std::size_t j = 0; j < gt.segments.size(); ++j) {
            const auto [far, near] = segment_end_distances(pred.segments[i], gt.segments[j]);
            if (far < radius) seg.push_back({far, far + near, i, j});
        }
    }
    std::sort(seg.begin(), seg.end());
    std::vector<bool> pred_seg_used(pred.segments.size(), false), gt_seg_used(gt.segments.size(), false);
    for (const auto& c : seg) {
        if (pred_seg_used[c.a] || gt_seg_used[c.b]) continue;
        pred_seg_used[c.a] = gt_seg_used[c.b] = true;
        m.segment_pairs.emplace_back(pred.segments[c.a].id, gt.segments[c.b].id);
    }
    std::sort(m.segment_pairs.begin(), m.segment_pairs.end());
    std::map<int, int> gt_of_pred_segment;
    for (const auto& [p, g] : m.segment_pairs) gt_of_pred_segment.emplace(p, g);

    std::vector<bool> pred_used(pred.findings.size(), false), gt_used(gt.findings.size(), false);
    std::vector<Candidate> pts;
    for (std::size_t i = 0; i < pred.findings.size(); ++i) {
        const auto it = gt_of_pred_segment.find(pred.findings[i].segment_id);
        if (it == gt_of_pred_segment.end()) continue;
        for (std::size_t j = 0; j < gt.findings.size(); ++j) {
            if (gt.findings[j].segment_id != it->second) continue;
            const double d = voxel_distance(pred.findings[i].position, gt.findings[j].position);
            if (d < radius) pts.push_back({d, 0.0, i, j});
        }
    }
    std::sort(pts.begin(), pts.end());
    for (const auto& c : pts) {
        if (pred_used[c.a] || gt_used[c.b]) continue;
        pred_used[c.a] = gt_used[c.b] = true;
        m.pairs.emplace_back(c.a, c.b);
    }

    // Nearest-point rule for findings on unmatched predicted segments.
    pts.clear();
    for (std::size_t i = 0; i < pred.findings.size(); ++i) {
        if (gt_of_pred_segment.count(pred.findings[i].segment_id)) continue;
        for (std::size_t j = 0; j < gt.findings.size(); ++j) {
            if (gt_used[j]) continue;
            const double d = voxel_distance(pred.findings[i].position, gt.findings[j].position);
            if (d < radius) pts.push_back({d, 0.0, i, j});
        }
    }
    std::sort(pts.begin(), pts.end());
    for (const auto& c : pts) {
        if (pred_used[c.a] || gt_used[c.b]) continue;
        pred_used[c.a] = gt_used[c.b] = true;
        m.pairs.emplace_back(c.a, c.b);
    }

    std::sort(m.pairs.begin(), m.pairs.end());
    for (std::size_t i = 0; i < pred_used.size(); ++i) {
        if (!pred_used[i]) m.false_positives.push_back(i);
    }
    for (std::size_t j = 0; j < gt_used.size(); ++j) {
        if (!gt_used[j]) m.false_negatives.push_back(j);
    }
    return m;
}

Rate tpr(std::size_t tp, std::size_t fn) noexcept {
    if (tp + fn == 0) return {0.0, true};
    return {double(tp) / double(tp + fn), false};
}

Rate ppv(std::size_t tp, std::size_t fp) noexcept {
    if (tp + fp == 0) return {0.0, true};
    return {double(tp) / double(tp + fp), false};
}

double armse(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) fail(ErrorKind::undefined, "ARMSE over an empty set of true positives");
    double s = 0.0;
    for (const auto& [p, t] : pairs) s += (p - t) * (p - t);
    return std::sqrt(s / double(pairs.size()));
}

double rrmse(std::span<const std::pair<double, double>> pairs) {
    if (pairs.empty()) fail(ErrorKind::undefined, "RRMSE over an empty set of true positives");
    double s = 0.0;
    for (const auto& [p, t] : pairs) {
        if (t == 0.0) fail(ErrorKind::undefined, "RRMSE with a zero ground-truth value");
        const double r = (p - t) / t;
        s += r * r;
    }
    return std::sqrt(s / double(pairs.size()));
}

StenosisEvalReport stratified_report(const MatchResult& m, const FindingSet& pred, const FindingSet& gt,
                                     ErrorMode mode) {
    StenosisEvalReport r;
    r.radius = m.radius;
    r.mode = mode;
    const std::vector<Grade> grades{Grade::minimal, Grade::mild, Grade::moderate, Grade::severe};
    auto value = [mode](const StenosisFinding& f) { return mode == ErrorMode::degree ? f.degree : f.a_min; };

    auto build = [&](const std::string& name, std::optional<Grade> g) {
        StratumRow row;
        row.stratum = name;
        std::vector<std::pair<double, double>> errs;
        for (const auto& [pi, gi] : m.pairs) {
            if (g && gt.findings[gi].grade != *g) continue;
            ++row.tp;
            errs.emplace_back(value(pred.findings[pi]), value(gt.findings[gi]));
        }
        for (auto pi : m.false_positives) row.fp += !g || pred.findings[pi].grade == *g;
        for (auto gi : m.false_negatives) row.fn += !g || gt.findings[gi].grade == *g;
        row.tpr = tpr(row.tp, row.fn);
        row.ppv = ppv(row.tp, row.fp);
        if (row.tpr.undefined) r.warnings.push_back(name + ": TPR undefined (TP + FN = 0), reported as 0");
        if (row.ppv.undefined) r.warnings.push_back(name + ": PPV undefined (TP + FP = 0), reported as 0");
        if (!errs.empty()) {
            row.armse = armse(errs);
            const bool zero = std::any_of(errs.begin(), errs.end(), [](const auto& e) { return e.second == 0.0; });
            if (!zero) {
                row.rrmse = rrmse(errs);
            } else {
                r.warnings.push_back(name + ": RRMSE undefined (zero ground-truth value)");
            }
        }
        r.rows.push_back(std::move(row));
    };
    build("all", std::nullopt);
    for (Grade g : grades) build(std::string(to_string(g)), g);
    return r;
}

}  // namespace vesselq
