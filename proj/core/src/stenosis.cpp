#include "vesselq/stenosis.hpp"

#include <algorithm>
#include <string>

#include "parallel.hpp"

namespace vesselq {

std::string_view to_string(Grade g) noexcept {
    switch (g) {
        case Grade::none: return "none";
        case Grade::minimal: return "minimal";
        case Grade::mild: return "mild";
        case Grade::moderate: return "moderate";
        case Grade::severe: return "severe";
    }
    return "none";
}

Grade grade_from_string(std::string_view name) {
    for (Grade g : {Grade::none, Grade::minimal, Grade::mild, Grade::moderate, Grade::severe}) {
        if (to_string(g) == name) return g;
    }
    fail(ErrorKind::validation, "unknown stenosis grade '" + std::string(name) + "'");
}

std::string_view grade_color(Grade g) noexcept {
    switch (g) {
        case Grade::minimal: return "green";
        case Grade::mild: return "blue";
        case Grade::moderate: return "yellow";
        case Grade::severe: return "red";
        case Grade::none: break;
    }
    return "";
}

std::vector<int> second_derivative_marks(std::span<const double> a) {
    if (a.size() < 3) fail(ErrorKind::validation, "second derivative needs at least 3 points");
    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    std::vector<int> d2(a.size(), 0);
    for (std::size_t i = 1; i + 1 < a.size(); ++i) {
        d2[i] = sign(a[i] - a[i - 1]) + sign(a[i] - a[i + 1]);
    }
    return d2;
}

Extrema find_extrema(std::span<const double> areas) {
    Extrema e;
    const auto d2 = second_derivative_marks(areas);
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (d2[i] == -2) e.minima.push_back(i);
        if (d2[i] == 2) e.maxima.push_back(i);
    }
    return e;
}

std::vector<double> smooth3(std::span<const double> a) {
    std::vector<double> out(a.size());
    if (a.size() < 2) {
        out.assign(a.begin(), a.end());
        return out;
    }
    out.front() = (a[0] + a[1]) / 2.0;
    out.back() = (a[a.size() - 2] + a.back()) / 2.0;
    for (std::size_t i = 1; i + 1 < a.size(); ++i) out[i] = (a[i - 1] + a[i] + a[i + 1]) / 3.0;
    return out;
}

double stenosis_degree(double a_min, double a_ref) {
    if (!(a_ref > 0.0)) fail(ErrorKind::validation, "reference area must be > 0");
    if (a_min < 0.0) fail(ErrorKind::validation, "minimum area must be >= 0");
    if (a_min > a_ref) return 0.0;
    return 1.0 - a_min / a_ref;
}

Grade grade(double b) noexcept {
    if (b >= 0.70) return Grade::severe;
    if (b >= 0.50) return Grade::moderate;
    if (b >= 0.25) return Grade::mild;
    if (b >= 0.01) return Grade::minimal;
    return Grade::none;
}

std::vector<StenosisFinding> detect_on_profile(const ArterySegment& segment, std::span<const double> areas,
                                               const StenosisParams& params, SegmentAnalysis* detail) {
    if (areas.size() != segment.points.size()) {
        fail(ErrorKind::validation, "area profile length does not match segment length");
    }
    std::vector<StenosisFinding> out;
    if (areas.size() < 3) return out;
    std::vector<double> profile = params.smooth ? smooth3(areas) : std::vector<double>(areas.begin(), areas.end());
    const Extrema ext = find_extrema(profile);

    double a_ref = 0.0;
    if (!ext.maxima.empty()) {
        for (auto i : ext.maxima) a_ref = std::max(a_ref, areas[i]);
    } else {
        a_ref = *std::max_element(areas.begin(), areas.end());
    }
    if (detail != nullptr) {
        detail->detection_profile = profile;
        detail->candidates = ext.minima;
        detail->a_ref = a_ref;
    }
    if (ext.minima.empty() || !(a_ref > 0.0)) return out;

    for (auto i : ext.minima) {
        const double b = stenosis_degree(areas[i], a_ref);
        if (!(b > params.report_threshold)) continue;
        out.push_back({segment.id, i, segment.points[i], areas[i], a_ref, b, grade(b)});
    }
    return out;
}

StenosisAnalysis analyze_stenoses(const Mask& mask, const StenosisParams& params) {
    if (params.min_len < 0) fail(ErrorKind::validation, "min_len must be >= 0");
    if (params.threads < 1) fail(ErrorKind::validation, "threads must be >= 1");
    StenosisAnalysis out;
    if (count_foreground(mask) == 0) return out;

    out.centerline = extract_centerline(mask, params.centerline);
    auto segments = prune_short(separate_segments(out.centerline.graph), params.min_len);
    out.segments.resize(segments.size());
    std::vector<std::vector<StenosisFinding>> per_segment(segments.size());

    detail::parallel_for(segments.size(), params.threads, [&](std::size_t k) {
        SegmentAnalysis& sa = out.segments[k];
        ArterySegment seg = segments[k];
        if (params.root) seg = orient_segment(seg, mask.spacing(), params.root);
        AreaProfile profile = area_profile(mask, seg, params.area);
        if (!params.root) {
            const ArterySegment oriented = orient_segment(seg, mask.spacing(), std::nullopt, profile.areas);
            if (oriented.points != seg.points) {
                std::reverse(profile.areas.begin(), profile.areas.end());
                for (auto& i : profile.substituted) i = seg.points.size() - 1 - i;
                std::reverse(profile.substituted.begin(), profile.substituted.end());
                seg = oriented;
            }
        }
        sa.segment = std::move(seg);
        sa.profile = std::move(profile);
        per_segment[k] = detect_on_profile(sa.segment, sa.profile.areas, params, &sa);
    });

    for (auto& f : per_segment) out.findings.insert(out.findings.end(), f.begin(), f.end());
    std::sort(out.findings.begin(), out.findings.end(), [](const auto& a, const auto& b) {
        return a.segment_id != b.segment_id ? a.segment_id < b.segment_id : a.index < b.index;
    });
    return out;
}

std::vector<StenosisFinding> detect_stenoses(const Mask& mask, const StenosisParams& params) {
    return analyze_stenoses(mask, params).findings;
}

}  // namespace vesselq
