#include "vesselq/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

namespace vesselq {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double k) { return {a[0] * k, a[1] * k, a[2] * k}; }
double dist(const Vec3& a, const Vec3& b) { return norm(sub(a, b)); }

struct Nearest {
    double distance;
    double s;  // arc length along the tube
};

Nearest nearest_on_piece(const AxisPiece& p, const Vec3& q) {
    const double len = p.length();
    if (p.kind == AxisPiece::Kind::line) {
        if (len == 0.0) return {dist(q, p.from), 0.0};
        const Vec3 d = sub(p.to, p.from);
        const double t = std::clamp(dot(sub(q, p.from), d) / (len * len), 0.0, 1.0);
        return {dist(q, add(p.from, scale(d, t))), t * len};
    }
    const Vec3 r = sub(q, p.center);
    const double x = dot(r, p.u), y = dot(r, p.v);
    Nearest best{dist(q, p.point(0.0)), 0.0};
    const Nearest end{dist(q, p.point(len)), len};
    if (end.distance < best.distance) best = end;
    if (x != 0.0 || y != 0.0) {
        double a = std::atan2(y, x) / kDeg;
        while (a < p.from_deg) a += 360.0;
        while (a >= p.from_deg + 360.0) a -= 360.0;
        if (a <= p.to_deg) {
            const double s = (a - p.from_deg) * kDeg * p.radius;
            const double d = dist(q, p.point(s));
            if (d < best.distance) best = {d, s};
        }
    }
    return best;
}

Nearest nearest_on_tube(const Tube& t, const Vec3& q) {
    Nearest best{INFINITY, 0.0};
    double offset = 0.0;
    for (const auto& p : t.axis) {
        Nearest n = nearest_on_piece(p, q);
        if (n.distance < best.distance) best = {n.distance, n.s + offset};
        offset += p.length();
    }
    return best;
}

Vec3 vec_from_json(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorKind::validation, std::string("phantom spec: missing '") + key + "'");
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) {
        fail(ErrorKind::validation, std::string("phantom spec: '") + key + "' must be a 3-element array");
    }
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

double number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorKind::validation, std::string("phantom spec: missing '") + key + "'");
    return j.at(key).get<double>();
}

Voxel to_voxel(const Vec3& mm, const Spacing& sp) {
    return {static_cast<int>(std::lround(mm[0] / sp.dx)), static_cast<int>(std::lround(mm[1] / sp.dy)),
            static_cast<int>(std::lround(mm[2] / sp.dz))};
}

}  // namespace

AxisPiece AxisPiece::line(Vec3 a, Vec3 b) {
    AxisPiece p;
    p.kind = Kind::line;
    p.from = a;
    p.to = b;
    return p;
}

AxisPiece AxisPiece::arc(Vec3 center, Vec3 u, Vec3 v, double radius, double from_deg, double to_deg) {
    AxisPiece p;
    p.kind = Kind::arc;
    p.center = center;
    p.u = normalized(u);
    p.v = normalized(v);
    p.radius = radius;
    p.from_deg = from_deg;
    p.to_deg = to_deg;
    return p;
}

double AxisPiece::length() const noexcept {
    if (kind == Kind::line) return dist(from, to);
    return radius * (to_deg - from_deg) * kDeg;
}

Vec3 AxisPiece::point(double s) const noexcept {
    const double len = length();
    if (kind == Kind::line) {
        return len == 0.0 ? from : add(from, scale(sub(to, from), s / len));
    }
    const double a = from_deg * kDeg + s / radius;
    return add(center, add(scale(u, radius * std::cos(a)), scale(v, radius * std::sin(a))));
}

Vec3 AxisPiece::tangent(double s) const noexcept {
    if (kind == Kind::line) {
        const double len = length();
        return len == 0.0 ? Vec3{1, 0, 0} : scale(sub(to, from), 1.0 / len);
    }
    const double a = from_deg * kDeg + s / radius;
    return add(scale(u, -std::sin(a)), scale(v, std::cos(a)));
}

double RadiusProfile::at(double s, double total) const noexcept {
    switch (kind) {
        case Kind::constant: return r0;
        case Kind::taper: return total > 0.0 ? r0 + (r1 - r0) * std::clamp(s / total, 0.0, 1.0) : r0;
        case Kind::notch: {
            const double g = std::exp(-(s - center) * (s - center) / (2.0 * sigma * sigma));
            return r0 * (1.0 - depth * g);
        }
    }
    return r0;
}

double RadiusProfile::min_radius(double total) const noexcept {
    switch (kind) {
        case Kind::constant: return r0;
        case Kind::taper: return std::min(r0, r1);
        case Kind::notch: return at(std::clamp(center, 0.0, total), total);
    }
    return r0;
}

double RadiusProfile::max_radius(double) const noexcept {
    return kind == Kind::taper ? std::max(r0, r1) : r0;
}

double notch_degree(double delta) noexcept { return 1.0 - (1.0 - delta) * (1.0 - delta); }

double Tube::length() const noexcept {
    double l = 0.0;
    for (const auto& p : axis) l += p.length();
    return l;
}

Vec3 Tube::point(double s) const noexcept {
    for (const auto& p : axis) {
        const double l = p.length();
        if (s <= l) return p.point(std::max(s, 0.0));
        s -= l;
    }
    return axis.back().point(axis.back().length());
}

Vec3 Tube::tangent(double s) const noexcept {
    for (const auto& p : axis) {
        const double l = p.length();
        if (s <= l) return p.tangent(std::max(s, 0.0));
        s -= l;
    }
    return axis.back().tangent(axis.back().length());
}

PhantomSpec bifurcation(Dims dims, Spacing spacing, Vec3 branch, Vec3 trunk_start, Vec3 a_end, Vec3 b_end,
                        double radius) {
    PhantomSpec spec;
    spec.dims = dims;
    spec.spacing = spacing;
    for (const auto& [from, to] : {std::pair{trunk_start, branch}, {branch, a_end}, {branch, b_end}}) {
        Tube t;
        t.axis.push_back(AxisPiece::line(from, to));
        t.radius.r0 = t.radius.r1 = radius;
        spec.tubes.push_back(t);
    }
    return spec;
}

void validate(const PhantomSpec& spec) {
    validate_geometry(spec.dims, spec.spacing);
    if (spec.tubes.empty()) fail(ErrorKind::validation, "phantom spec has no tubes");
    const double min_r = 1.5 * spec.spacing.max();
    const double step = 0.25 * std::min({spec.spacing.dx, spec.spacing.dy, spec.spacing.dz});
    for (std::size_t k = 0; k < spec.tubes.size(); ++k) {
        const Tube& t = spec.tubes[k];
        const std::string name = "tube " + std::to_string(k);
        if (t.axis.empty()) fail(ErrorKind::validation, name + ": empty axis");
        for (const auto& p : t.axis) {
            if (p.kind == AxisPiece::Kind::arc) {
                if (!(p.radius > 0.0) || !(p.to_deg > p.from_deg)) {
                    fail(ErrorKind::validation, name + ": arc needs radius > 0 and to_deg > from_deg");
                }
                if (std::abs(norm(p.u) - 1.0) > 1e-6 || std::abs(norm(p.v) - 1.0) > 1e-6 ||
                    std::abs(dot(p.u, p.v)) > 1e-6) {
                    fail(ErrorKind::validation, name + ": arc u and v must be orthonormal");
                }
            }
        }
        const auto& rp = t.radius;
        if (rp.kind == RadiusProfile::Kind::notch && !(rp.depth > 0.0 && rp.depth < 1.0 && rp.sigma > 0.0)) {
            fail(ErrorKind::validation, name + ": notch needs depth in (0, 1) and sigma > 0");
        }
        const double len = t.length();
        const auto n = static_cast<std::size_t>(std::ceil(len / step));
        for (std::size_t i = 0; i <= n; ++i) {
            const double s = n == 0 ? 0.0 : len * double(i) / double(n);
            const double r = rp.at(s, len);
            if (!(r >= min_r - 1e-12)) {
                fail(ErrorKind::validation, name + ": radius " + std::to_string(r) + " mm below 1.5 x max spacing");
            }
            const Vec3 c = t.point(s);
            for (int a = 0; a < 3; ++a) {
                const double d = spec.spacing[a];
                const double n_a = double(a == 0 ? spec.dims.nx : a == 1 ? spec.dims.ny : spec.dims.nz);
                if (c[a] - r < 2.0 * d || c[a] + r > (n_a - 3.0) * d) {
                    fail(ErrorKind::validation, name + ": tube violates the 2-voxel margin");
                }
            }
        }
    }
}

Phantom rasterize(const PhantomSpec& spec) {
    validate(spec);
    Phantom out;
    const Dims& d = spec.dims;
    const Spacing& sp = spec.spacing;
    out.mask = Mask(d, sp, 0);
    std::vector<double> lengths;
    for (const auto& t : spec.tubes) lengths.push_back(t.length());
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
        const Voxel v = d.voxel(i);
        const Vec3 q{v.x * sp.dx, v.y * sp.dy, v.z * sp.dz};
        for (std::size_t k = 0; k < spec.tubes.size(); ++k) {
            const Nearest n = nearest_on_tube(spec.tubes[k], q);
            if (n.distance <= spec.tubes[k].radius.at(n.s, lengths[k])) {
                out.mask[i] = 1;
                break;
            }
        }
    }

    const double step = 0.5 * std::min({sp.dx, sp.dy, sp.dz});
    for (std::size_t k = 0; k < spec.tubes.size(); ++k) {
        const Tube& t = spec.tubes[k];
        TubeTruth truth;
        const double len = lengths[k];
        const auto n = static_cast<std::size_t>(std::ceil(len / step));
        for (std::size_t i = 0; i <= n; ++i) {
            const double s = n == 0 ? 0.0 : len * double(i) / double(n);
            const double r = t.radius.at(s, len);
            truth.centerline_mm.push_back(t.point(s));
            truth.arc_length_mm.push_back(s);
            truth.areas_mm2.push_back(std::numbers::pi * r * r);
        }
        if (t.radius.kind == RadiusProfile::Kind::notch) {
            // Rounded so a nominal 50% notch stays on its nominal grade.
            const double b = std::round(notch_degree(t.radius.depth) * 1e12) / 1e12;
            if (b > 0.1) {
                StenosisFinding f;
                f.segment_id = static_cast<int>(k);
                const double c = std::clamp(t.radius.center, 0.0, len);
                f.index = static_cast<std::size_t>(std::lround(n == 0 ? 0.0 : c / len * double(n)));
                f.position = to_voxel(t.point(c), sp);
                const double rmin = t.radius.r0 * (1.0 - t.radius.depth);
                f.a_ref = std::numbers::pi * t.radius.r0 * t.radius.r0;
                f.a_min = std::numbers::pi * rmin * rmin;
                f.degree = b;
                f.grade = grade(b);
                truth.expected_findings.push_back(f);
            }
        }
        out.truth.push_back(std::move(truth));
    }
    return out;
}

std::size_t voxel_count_oracle(const PhantomSpec& spec, std::size_t tube, double s) {
    if (tube >= spec.tubes.size()) fail(ErrorKind::validation, "phantom tube index out of range");
    const Tube& t = spec.tubes[tube];
    const double len = t.length();
    const double r = t.radius.at(s, len);
    const Vec3 c = t.point(s);
    const Vec3 tan = t.tangent(s);
    const Spacing& sp = spec.spacing;
    // Slab thickness is set on the index-space normal, as in the area estimator.
    const Vec3 ti = normalized({tan[0] / sp.dx, tan[1] / sp.dy, tan[2] / sp.dz});
    const double thrd = auto_thrd(ti, sp);
    const double reach = r + thrd;
    std::size_t count = 0;
    const auto lo = [&](int a) { return static_cast<long>(std::floor((c[a] - reach) / sp[a])) - 1; };
    const auto hi = [&](int a) { return static_cast<long>(std::ceil((c[a] + reach) / sp[a])) + 1; };
    for (long z = lo(2); z <= hi(2); ++z)
        for (long y = lo(1); y <= hi(1); ++y)
            for (long x = lo(0); x <= hi(0); ++x) {
                const Vec3 m{x * sp.dx, y * sp.dy, z * sp.dz};
                const Vec3 rel = sub(m, c);
                const double along = dot(rel, tan);
                if (!(std::abs(along) < thrd)) continue;
                const Vec3 radial = sub(rel, scale(tan, along));
                if (norm(radial) <= r) ++count;
            }
    return count;
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
    try {
        PhantomSpec spec;
        if (!j.contains("dims")) fail(ErrorKind::validation, "phantom spec: missing 'dims'");
        const auto& dims = j.at("dims");
        if (!dims.is_array() || dims.size() != 3) fail(ErrorKind::validation, "phantom spec: 'dims' must have 3 entries");
        spec.dims = {dims[0].get<std::int64_t>(), dims[1].get<std::int64_t>(), dims[2].get<std::int64_t>()};
        const Vec3 sp = vec_from_json(j, "spacing_mm");
        spec.spacing = {sp[0], sp[1], sp[2]};
        if (!j.contains("tubes") || !j.at("tubes").is_array()) {
            fail(ErrorKind::validation, "phantom spec: missing 'tubes' array");
        }
        for (const auto& jt : j.at("tubes")) {
            Tube t;
            for (const auto& jp : jt.at("axis")) {
                const auto type = jp.at("type").get<std::string>();
                if (type == "line") {
                    t.axis.push_back(AxisPiece::line(vec_from_json(jp, "from"), vec_from_json(jp, "to")));
                } else if (type == "arc") {
                    AxisPiece p;
                    p.kind = AxisPiece::Kind::arc;
                    p.center = vec_from_json(jp, "center");
                    p.u = vec_from_json(jp, "u");
                    p.v = vec_from_json(jp, "v");
                    p.radius = number(jp, "radius");
                    p.from_deg = number(jp, "from_deg");
                    p.to_deg = number(jp, "to_deg");
                    t.axis.push_back(p);
                } else {
                    fail(ErrorKind::validation, "phantom spec: unknown axis type '" + type + "'");
                }
            }
            const auto& jr = jt.at("radius");
            const auto type = jr.at("type").get<std::string>();
            t.radius.r0 = number(jr, "r0");
            t.radius.r1 = t.radius.r0;
            if (type == "constant") {
                t.radius.kind = RadiusProfile::Kind::constant;
            } else if (type == "taper") {
                t.radius.kind = RadiusProfile::Kind::taper;
                t.radius.r1 = number(jr, "r1");
            } else if (type == "notch") {
                t.radius.kind = RadiusProfile::Kind::notch;
                t.radius.depth = number(jr, "depth");
                t.radius.center = number(jr, "center");
                t.radius.sigma = number(jr, "sigma");
            } else {
                fail(ErrorKind::validation, "phantom spec: unknown radius type '" + type + "'");
            }
            spec.tubes.push_back(std::move(t));
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::validation, std::string("phantom spec: ") + e.what());
    }
}

nlohmann::json to_json(const PhantomSpec& spec) {
    nlohmann::json j;
    j["dims"] = {spec.dims.nx, spec.dims.ny, spec.dims.nz};
    j["spacing_mm"] = {spec.spacing.dx, spec.spacing.dy, spec.spacing.dz};
    j["tubes"] = nlohmann::json::array();
    for (const auto& t : spec.tubes) {
        nlohmann::json jt;
        jt["axis"] = nlohmann::json::array();
        for (const auto& p : t.axis) {
            if (p.kind == AxisPiece::Kind::line) {
                jt["axis"].push_back({{"type", "line"}, {"from", p.from}, {"to", p.to}});
            } else {
                jt["axis"].push_back({{"type", "arc"},
                                      {"center", p.center},
                                      {"u", p.u},
                                      {"v", p.v},
                                      {"radius", p.radius},
                                      {"from_deg", p.from_deg},
                                      {"to_deg", p.to_deg}});
            }
        }
        const auto& r = t.radius;
        switch (r.kind) {
            case RadiusProfile::Kind::constant: jt["radius"] = {{"type", "constant"}, {"r0", r.r0}}; break;
            case RadiusProfile::Kind::taper: jt["radius"] = {{"type", "taper"}, {"r0", r.r0}, {"r1", r.r1}}; break;
            case RadiusProfile::Kind::notch:
                jt["radius"] = {{"type", "notch"}, {"r0", r.r0}, {"depth", r.depth}, {"center", r.center}, {"sigma", r.sigma}};
                break;
        }
        j["tubes"].push_back(jt);
    }
    return j;
}

}  // namespace vesselq
