#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "vesselq/vessel_tree.hpp"
#include "vesselq/volume.hpp"

namespace vesselq {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) noexcept;
Vec3 cross(const Vec3& a, const Vec3& b) noexcept;
double norm(const Vec3& a) noexcept;
/// Throws ErrorKind::degenerate for a zero vector.
Vec3 normalized(const Vec3& a);

struct AreaParams {
    double s = 20.0;             ///< search radius in voxels
    std::optional<double> thrd;  ///< slab half-thickness in mm; nullopt = auto
    int offset = 10;             ///< tangent half-window in centerline points
    /// Unnormalised index-space tangent and basis vectors, thrd compared with the
    /// raw dot product. Auto thrd is then 0.5.
    bool faithful = false;
};

struct AreaProfile {
    int segment_id = 0;
    std::vector<double> areas;  ///< mm^2, index-aligned with the segment points
    AreaParams params;
    /// Points whose tangent was degenerate and whose area was copied from the
    /// nearest valid neighbour.
    std::vector<std::size_t> substituted;
};

/// Unit tangent at `index` in physical space: P[min(i+offset, last)] - P[max(i-offset, 0)]
/// scaled by spacing, then normalised.
Vec3 direction_vector(const ArterySegment& segment, std::size_t index, const Spacing& spacing,
                      int offset = 10);

/// The same difference in voxel-index space, unnormalised.
Vec3 index_difference(const ArterySegment& segment, std::size_t index, int offset = 10);

/// Foreground voxels m with |m - p| <= s (voxel space) and |v . (m - p)_mm| < thrd.
std::size_t count_section_voxels(const Mask& mask, const Voxel& p, const Vec3& v, double s,
                                 double thrd);

/// b1 = normalize(v x e), b2 = normalize(v x b1), e = (1,0,0) unless |v.x| > 0.9.
std::pair<Vec3, Vec3> basis_vectors(const Vec3& v);

std::pair<double, double> physical_spacings(const Vec3& b1, const Vec3& b2, const Spacing& spacing);

double cross_section_area(std::size_t count, double p1, double p2) noexcept;

/// Slab half-thickness for which count * p1 * p2 is an unbiased area: half the
/// voxel volume divided by the in-plane pixel area p1 * p2.
double auto_thrd(const Vec3& v_index, const Spacing& spacing);

AreaProfile area_profile(const Mask& mask, const ArterySegment& segment, const AreaParams& params = {});

}  // namespace vesselq
