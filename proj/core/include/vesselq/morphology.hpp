#pragma once

#include <cstdint>
#include <vector>

#include "vesselq/volume.hpp"

namespace vesselq {

enum class SeShape { cube, cross };
enum class SeDim { planar, volumetric };  ///< planar: per axial (x-y) slice

/// Binary structuring element with its origin at the centre voxel. A cube of
/// side k covers the full k^d box; a cross of side k covers the axis-aligned
/// arms of half-length (k - 1) / 2 (side 3 in 3D is the 6-neighbourhood).
class StructuringElement {
public:
    StructuringElement(SeShape shape, int side, SeDim dim);

    static StructuringElement cross3d(int side = 3) { return {SeShape::cross, side, SeDim::volumetric}; }
    static StructuringElement cube(int side = 3) { return {SeShape::cube, side, SeDim::volumetric}; }
    static StructuringElement square(int side) { return {SeShape::cube, side, SeDim::planar}; }

    SeShape shape() const noexcept { return shape_; }
    int side() const noexcept { return side_; }
    int radius() const noexcept { return (side_ - 1) / 2; }
    SeDim dim() const noexcept { return dim_; }
    int axis_count() const noexcept { return dim_ == SeDim::planar ? 2 : 3; }

    /// Explicit offsets, for reference implementations and small kernels.
    std::vector<Voxel> offsets() const;

private:
    SeShape shape_;
    int side_;
    SeDim dim_;
};

// Outside the volume counts as background for both erosion and dilation.
Mask erode(const Mask& mask, const StructuringElement& se);
Mask dilate(const Mask& mask, const StructuringElement& se);
Mask open(const Mask& mask, const StructuringElement& se);
/// Closing on a domain padded by the element radius, so close(m) ⊇ m holds
/// at the volume faces too.
Mask close(const Mask& mask, const StructuringElement& se);

enum class Connectivity { face = 6, edge = 18, vertex = 26 };

Connectivity connectivity_from_int(int n);
/// Neighbour offsets (excluding the origin) for the given connectivity.
const std::vector<Voxel>& neighbor_offsets(Connectivity c);

struct Components {
    LabelVolume labels;                ///< 0 = background, components dense from 1
    std::vector<std::int64_t> sizes;   ///< sizes[k] is the voxel count of label k + 1
};

/// Union-find two-pass labelling. Labels follow the x-fastest scan order of
/// each component's first voxel.
Components connected_components(const Mask& mask, Connectivity connectivity);

/// Keeps the largest component; ties go to the lowest label. Empty in, empty out.
Mask largest_component(const Mask& mask, Connectivity connectivity);

struct SkeletonResult {
    Mask skeleton;
    /// fragments[k] lists the linear indices of S_k = X_k - open(X_k), where
    /// X_k is the k-fold erosion of the input.
    std::vector<std::vector<std::size_t>> fragments;
    /// 1 + number of erosions each foreground voxel survives; 0 on background.
    LabelVolume depth;

    Mask fragment_mask(std::size_t k) const;
};

/// Lantuéjoul morphological skeleton: iterate T <- erode(T), collecting
/// T - open(T) at every level until T is empty.
SkeletonResult skeletonize(const Mask& mask, const StructuringElement& se);

/// Inverse of skeletonize: union over k of dilate^k(S_k).
Mask reconstruct_from_fragments(const SkeletonResult& skel, const StructuringElement& se);

/// Homotopic (26, 6) thinning to a one-voxel-wide curve. Voxels are peeled in
/// ascending `depth` order, six directional sub-passes per level; curve ends
/// (one 26-neighbour) are preserved. Use SkeletonResult::depth for ordering.
Mask thin_to_centerline(const Mask& mask, const LabelVolume& depth);

/// True when removing `v` from `mask` preserves (26, 6) topology locally.
bool is_simple_point(const Mask& mask, const Voxel& v);

/// Per axial slice: background not 4-connected to the slice border becomes
/// foreground.
Mask fill_holes_2d(const Mask& mask);

struct MyocardialExpansion {
    int kernel_size = 51;  ///< square dilation side; must be odd
    int iterations = 1;
    int smooth_size = 5;   ///< square closing side applied to the filled contour
};

/// Largest 3D component, then per axial slice: hole filling, closing with a
/// smooth_size square, a second hole fill for contours the closing sealed, and
/// `iterations` dilations with a kernel_size square.
Mask expand_myocardial_region(const Mask& myo, const MyocardialExpansion& params = {});

/// Axis-aligned bounding box of the foreground, inclusive. Empty mask gives lo > hi.
struct Box {
    Voxel lo;
    Voxel hi;
    bool empty() const noexcept { return lo.x > hi.x; }
};
Box bounding_box(const Mask& mask);

}  // namespace vesselq
