#include "vesselq/cross_section.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vesselq {

double dot(const Vec3& a, const Vec3& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (!(n > 0.0)) fail(ErrorKind::degenerate, "cannot normalise a zero vector");
    return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3 index_difference(const ArterySegment& segment, std::size_t index, int offset) {
    if (offset < 1) fail(ErrorKind::validation, "tangent offset must be >= 1");
    if (index >= segment.points.size()) fail(ErrorKind::validation, "centerline index out of range");
    const std::size_t last = segment.points.size() - 1;
    const auto off = static_cast<std::size_t>(offset);
    const Voxel& a = segment.points[index >= off ? index - off : 0];
    const Voxel& b = segment.points[std::min(index + off, last)];
    return {double(b.x - a.x), double(b.y - a.y), double(b.z - a.z)};
}

Vec3 direction_vector(const ArterySegment& segment, std::size_t index, const Spacing& spacing,
                      int offset) {
    const Vec3 d = index_difference(segment, index, offset);
    if (d == Vec3{0, 0, 0}) {
        fail(ErrorKind::degenerate, "segment too short for a tangent at point " + std::to_string(index));
    }
    return normalized({d[0] * spacing.dx, d[1] * spacing.dy, d[2] * spacing.dz});
}

namespace {

// Counts foreground voxels in the radius-s ball around p with |L| < thrd,
// L = sum_i v_i * (m - p)_i * scale_i.
std::size_t slab_count(const Mask& mask, const Voxel& p, const Vec3& v, const Vec3& scale, double s,
                       double thrd) {
    const Dims& d = mask.dims();
    const double s2 = s * s;
    const auto r = static_cast<std::int64_t>(std::floor(std::min<double>(s, 1e6)));
    const std::int64_t z0 = std::max<std::int64_t>(0, p.z - r), z1 = std::min<std::int64_t>(d.nz - 1, p.z + r);
    const std::int64_t y0 = std::max<std::int64_t>(0, p.y - r), y1 = std::min<std::int64_t>(d.ny - 1, p.y + r);
    const std::int64_t x0 = std::max<std::int64_t>(0, p.x - r), x1 = std::min<std::int64_t>(d.nx - 1, p.x + r);
    const double wx = v[0] * scale[0], wy = v[1] * scale[1], wz = v[2] * scale[2];
    std::size_t count = 0;
    for (std::int64_t z = z0; z <= z1; ++z) {
        const double dz = double(z - p.z);
        for (std::int64_t y = y0; y <= y1; ++y) {
            const double dy = double(y - p.y);
            const double ryz = dy * dy + dz * dz;
            if (ryz > s2) continue;
            const double lyz = wy * dy + wz * dz;
            const std::size_t row = d.index(0, y, z);
            for (std::int64_t x = x0; x <= x1; ++x) {
                if (!mask[row + static_cast<std::size_t>(x)]) continue;
                const double dx = double(x - p.x);
                if (dx * dx + ryz > s2) continue;
                if (std::abs(wx * dx + lyz) < thrd) ++count;
            }
        }
    }
    return count;
}

std::pair<Vec3, Vec3> raw_basis(const Vec3& v) {
    const Vec3 e = std::abs(v[0]) > 0.9 * norm(v) ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const Vec3 b1 = cross(v, e);
    return {b1, cross(v, b1)};
}

}  // namespace

std::size_t count_section_voxels(const Mask& mask, const Voxel& p, const Vec3& v, double s,
                                 double thrd) {
    const Spacing& sp = mask.spacing();
    return slab_count(mask, p, v, {sp.dx, sp.dy, sp.dz}, s, thrd);
}

std::pair<Vec3, Vec3> basis_vectors(const Vec3& v) {
    const Vec3 e = std::abs(v[0]) > 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const Vec3 b1 = normalized(cross(v, e));
    const Vec3 b2 = normalized(cross(v, b1));
    return {b1, b2};
}

std::pair<double, double> physical_spacings(const Vec3& b1, const Vec3& b2, const Spacing& spacing) {
    auto length = [&](const Vec3& b) {
        return std::sqrt((b[0] * spacing.dx) * (b[0] * spacing.dx) + (b[1] * spacing.dy) * (b[1] * spacing.dy) +
                         (b[2] * spacing.dz) * (b[2] * spacing.dz));
    };
    return {length(b1), length(b2)};
}

double cross_section_area(std::size_t count, double p1, double p2) noexcept {
    return static_cast<double>(count) * p1 * p2;
}

double auto_thrd(const Vec3& v_index, const Spacing& spacing) {
    const auto [b1, b2] = basis_vectors(normalized(v_index));
    const auto [p1, p2] = physical_spacings(b1, b2, spacing);
    return 0.5 * spacing.dx * spacing.dy * spacing.dz / (p1 * p2);
}

AreaProfile area_profile(const Mask& mask, const ArterySegment& segment, const AreaParams& params) {
    if (!(params.s > 0.0)) fail(ErrorKind::validation, "search radius s must be > 0");
    if (params.thrd && !(*params.thrd > 0.0)) fail(ErrorKind::validation, "thrd must be > 0");
    if (params.offset < 1) fail(ErrorKind::validation, "tangent offset must be >= 1");

    const Spacing& sp = mask.spacing();
    AreaProfile out;
    out.segment_id = segment.id;
    out.params = params;
    const std::size_t n = segment.points.size();
    out.areas.assign(n, 0.0);
    std::vector<bool> valid(n, false);

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = index_difference(segment, i, params.offset);
        if (d == Vec3{0, 0, 0}) continue;
        valid[i] = true;
        const Voxel& p = segment.points[i];
        if (params.faithful) {
            const double thrd = params.thrd.value_or(0.5);
            const auto count = slab_count(mask, p, d, {1, 1, 1}, params.s, thrd);
            const auto [b1, b2] = raw_basis(d);
            const auto [p1, p2] = physical_spacings(b1, b2, sp);
            out.areas[i] = cross_section_area(count, p1, p2);
        } else {
            const Vec3 v = direction_vector(segment, i, sp, params.offset);
            const Vec3 vi = normalized(d);
            const auto [b1, b2] = basis_vectors(vi);
            const auto [p1, p2] = physical_spacings(b1, b2, sp);
            const double thrd = params.thrd ? *params.thrd : auto_thrd(vi, sp);
            const auto count = count_section_voxels(mask, p, v, params.s, thrd);
            out.areas[i] = cross_section_area(count, p1, p2);
        }
    }

    if (std::find(valid.begin(), valid.end(), true) == valid.end()) {
        if (n == 0) return out;
        fail(ErrorKind::degenerate, "segment " + std::to_string(segment.id) + " has no valid tangent");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (valid[i]) continue;
        for (std::size_t k = 1; k < n; ++k) {
            if (i >= k && valid[i - k]) {
                out.areas[i] = out.areas[i - k];
                break;
            }
            if (i + k < n && valid[i + k]) {
                out.areas[i] = out.areas[i + k];
                break;
            }
        }
        out.substituted.push_back(i);
    }
    return out;
}

}  // namespace vesselq
