#include "vesselq/morphology.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <numeric>
#include <string>

namespace vesselq {

StructuringElement::StructuringElement(SeShape shape, int side, SeDim dim)
    : shape_(shape), side_(side), dim_(dim) {
    if (side < 1 || side % 2 == 0) {
        fail(ErrorKind::validation,
             "structuring element side must be odd and >= 1, got " + std::to_string(side));
    }
}

std::vector<Voxel> StructuringElement::offsets() const {
    const int r = radius();
    const int rz = dim_ == SeDim::planar ? 0 : r;
    std::vector<Voxel> out;
    for (int z = -rz; z <= rz; ++z) {
        for (int y = -r; y <= r; ++y) {
            for (int x = -r; x <= r; ++x) {
                const int nonzero = (x != 0) + (y != 0) + (z != 0);
                if (shape_ == SeShape::cube || nonzero <= 1) out.push_back({x, y, z});
            }
        }
    }
    return out;
}

namespace {

enum class LineOp { erode, dilate };

struct Line {
    std::size_t base;
    std::int64_t stride;
    std::int64_t length;
};

template <class F>
void for_each_line(const Dims& d, int axis, F&& f) {
    if (axis == 0) {
        for (std::int64_t z = 0; z < d.nz; ++z)
            for (std::int64_t y = 0; y < d.ny; ++y) f(Line{d.index(0, y, z), 1, d.nx});
    } else if (axis == 1) {
        for (std::int64_t z = 0; z < d.nz; ++z)
            for (std::int64_t x = 0; x < d.nx; ++x) f(Line{d.index(x, 0, z), d.nx, d.ny});
    } else {
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) f(Line{d.index(x, y, 0), d.nx * d.ny, d.nz});
    }
}

// Sliding-window count along one axis. Erosion needs the whole window inside
// the line, which is what treating outside voxels as background means.
Mask line_pass(const Mask& in, int axis, int r, LineOp op) {
    Mask out(in.dims(), in.spacing());
    if (r == 0) return in;
    const auto full = 2 * r + 1;
    for_each_line(in.dims(), axis, [&](const Line& line) {
        auto at = [&](std::int64_t i) { return line.base + static_cast<std::size_t>(i * line.stride); };
        std::int64_t count = 0;
        for (std::int64_t i = 0; i <= std::min<std::int64_t>(r, line.length - 1); ++i) count += in[at(i)];
        for (std::int64_t i = 0; i < line.length; ++i) {
            const bool on = op == LineOp::dilate ? count > 0 : count == full;
            out[at(i)] = on ? 1 : 0;
            if (i + r + 1 < line.length) count += in[at(i + r + 1)];
            if (i - r >= 0) count -= in[at(i - r)];
        }
    });
    return out;
}

Mask apply(const Mask& mask, const StructuringElement& se, LineOp op) {
    const int r = se.radius();
    const int axes = std::min<int>(se.axis_count(), 3);
    if (se.shape() == SeShape::cube) {
        Mask cur = mask;
        for (int a = 0; a < axes; ++a) cur = line_pass(cur, a, r, op);
        return cur;
    }
    // Cross = union of axis segments: dilation is the OR of per-axis
    // dilations, erosion the AND of per-axis erosions.
    Mask acc = line_pass(mask, 0, r, op);
    for (int a = 1; a < axes; ++a) {
        const Mask part = line_pass(mask, a, r, op);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] = op == LineOp::dilate ? (acc[i] | part[i]) : (acc[i] & part[i]);
        }
    }
    return acc;
}

Mask pad(const Mask& m, int px, int py, int pz) {
    const Dims& d = m.dims();
    Mask out(Dims{d.nx + 2 * px, d.ny + 2 * py, d.nz + 2 * pz}, m.spacing());
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x)
                out[out.dims().index(x + px, y + py, z + pz)] = m[d.index(x, y, z)];
    return out;
}

Mask crop(const Mask& m, const Voxel& lo, const Dims& size) {
    Mask out(size, m.spacing());
    for (std::int64_t z = 0; z < size.nz; ++z)
        for (std::int64_t y = 0; y < size.ny; ++y)
            for (std::int64_t x = 0; x < size.nx; ++x)
                out[size.index(x, y, z)] = m[m.dims().index(x + lo.x, y + lo.y, z + lo.z)];
    return out;
}

}  // namespace

Mask erode(const Mask& mask, const StructuringElement& se) { return apply(mask, se, LineOp::erode); }
Mask dilate(const Mask& mask, const StructuringElement& se) { return apply(mask, se, LineOp::dilate); }
Mask open(const Mask& mask, const StructuringElement& se) { return dilate(erode(mask, se), se); }

Mask close(const Mask& mask, const StructuringElement& se) {
    const int r = se.radius();
    const int pz = se.dim() == SeDim::planar ? 0 : r;
    const Mask padded = pad(mask, r, r, pz);
    const Mask closed = erode(dilate(padded, se), se);
    return crop(closed, Voxel{r, r, pz}, mask.dims());
}

Connectivity connectivity_from_int(int n) {
    switch (n) {
        case 6: return Connectivity::face;
        case 18: return Connectivity::edge;
        case 26: return Connectivity::vertex;
        default: break;
    }
    fail(ErrorKind::validation, "connectivity must be 6, 18 or 26, got " + std::to_string(n));
}

const std::vector<Voxel>& neighbor_offsets(Connectivity c) {
    static const auto build = [](int max_nonzero) {
        std::vector<Voxel> out;
        for (int z = -1; z <= 1; ++z)
            for (int y = -1; y <= 1; ++y)
                for (int x = -1; x <= 1; ++x) {
                    const int nz = (x != 0) + (y != 0) + (z != 0);
                    if (nz >= 1 && nz <= max_nonzero) out.push_back({x, y, z});
                }
        return out;
    };
    static const std::vector<Voxel> n6 = build(1);
    static const std::vector<Voxel> n18 = build(2);
    static const std::vector<Voxel> n26 = build(3);
    switch (c) {
        case Connectivity::face: return n6;
        case Connectivity::edge: return n18;
        case Connectivity::vertex: break;
    }
    return n26;
}

namespace {

struct DisjointSet {
    std::vector<std::int32_t> parent;

    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

Components connected_components(const Mask& mask, Connectivity connectivity) {
    const Dims& d = mask.dims();
    std::vector<Voxel> backward;
    for (const auto& o : neighbor_offsets(connectivity)) {
        if (o.z < 0 || (o.z == 0 && o.y < 0) || (o.z == 0 && o.y == 0 && o.x < 0)) {
            backward.push_back(o);
        }
    }

    LabelVolume provisional(d, mask.spacing(), -1);
    DisjointSet sets;
    for (std::int64_t z = 0; z < d.nz; ++z) {
        for (std::int64_t y = 0; y < d.ny; ++y) {
            for (std::int64_t x = 0; x < d.nx; ++x) {
                const auto i = d.index(x, y, z);
                if (!mask[i]) continue;
                std::int32_t label = -1;
                for (const auto& o : backward) {
                    const auto nx = x + o.x, ny = y + o.y, nz = z + o.z;
                    if (!d.contains(nx, ny, nz)) continue;
                    const auto nl = provisional[d.index(nx, ny, nz)];
                    if (nl < 0) continue;
                    if (label < 0) {
                        label = nl;
                    } else {
                        sets.unite(label, nl);
                    }
                }
                provisional[i] = label >= 0 ? label : sets.add();
            }
        }
    }

    Components out{LabelVolume(d, mask.spacing(), 0), {}};
    std::vector<std::int32_t> dense(sets.parent.size(), 0);
    for (std::size_t i = 0; i < provisional.size(); ++i) {
        if (provisional[i] < 0) continue;
        const auto root = sets.find(provisional[i]);
        if (dense[root] == 0) {
            out.sizes.push_back(0);
            dense[root] = static_cast<std::int32_t>(out.sizes.size());
        }
        out.labels[i] = dense[root];
        ++out.sizes[dense[root] - 1];
    }
    return out;
}

Mask largest_component(const Mask& mask, Connectivity connectivity) {
    const auto cc = connected_components(mask, connectivity);
    Mask out(mask.dims(), mask.spacing());
    if (cc.sizes.empty()) return out;
    const auto best = std::max_element(cc.sizes.begin(), cc.sizes.end()) - cc.sizes.begin();
    const auto keep = static_cast<std::int32_t>(best + 1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cc.labels[i] == keep ? 1 : 0;
    return out;
}

Box bounding_box(const Mask& mask) {
    const Dims& d = mask.dims();
    Box b{{static_cast<int>(d.nx), static_cast<int>(d.ny), static_cast<int>(d.nz)}, {-1, -1, -1}};
    for (std::int64_t z = 0; z < d.nz; ++z)
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x) {
                if (!mask[d.index(x, y, z)]) continue;
                b.lo = {std::min<int>(b.lo.x, x), std::min<int>(b.lo.y, y), std::min<int>(b.lo.z, z)};
                b.hi = {std::max<int>(b.hi.x, x), std::max<int>(b.hi.y, y), std::max<int>(b.hi.z, z)};
            }
    return b;
}

Mask SkeletonResult::fragment_mask(std::size_t k) const {
    Mask out(skeleton.dims(), skeleton.spacing());
    for (auto i : fragments.at(k)) out[i] = 1;
    return out;
}

SkeletonResult skeletonize(const Mask& mask, const StructuringElement& se) {
    const Dims& d = mask.dims();
    SkeletonResult result{Mask(d, mask.spacing()), {}, LabelVolume(d, mask.spacing(), 0)};
    const Box box = bounding_box(mask);
    if (box.empty()) return result;

    // Work inside the foreground box grown by the element radius; everything
    // outside it stays background through every erosion and dilation.
    const int r = se.radius();
    const int rz = se.dim() == SeDim::planar ? 0 : r;
    const Voxel lo{std::max(0, box.lo.x - r), std::max(0, box.lo.y - r), std::max(0, box.lo.z - rz)};
    const Voxel hi{std::min<int>(d.nx - 1, box.hi.x + r), std::min<int>(d.ny - 1, box.hi.y + r),
                   std::min<int>(d.nz - 1, box.hi.z + rz)};
    const Dims sub{hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1};
    auto to_full = [&](std::size_t i) {
        const Voxel v = sub.voxel(i);
        return d.index(v.x + lo.x, v.y + lo.y, v.z + lo.z);
    };

    Mask level = crop(mask, lo, sub);
    std::int32_t k = 0;
    while (std::any_of(level.values().begin(), level.values().end(), [](auto v) { return v != 0; })) {
        Mask eroded = erode(level, se);
        const Mask opened = dilate(eroded, se);
        std::vector<std::size_t> fragment;
        for (std::size_t i = 0; i < level.size(); ++i) {
            if (!level[i]) continue;
            const auto full = to_full(i);
            result.depth[full] = k + 1;
            if (!opened[i]) {
                fragment.push_back(full);
                result.skeleton[full] = 1;
            }
        }
        std::sort(fragment.begin(), fragment.end());
        result.fragments.push_back(std::move(fragment));
        level = std::move(eroded);
        ++k;
    }
    return result;
}

Mask reconstruct_from_fragments(const SkeletonResult& skel, const StructuringElement& se) {
    Mask acc(skel.skeleton.dims(), skel.skeleton.spacing());
    for (std::size_t k = skel.fragments.size(); k-- > 0;) {
        acc = dilate(acc, se);
        for (auto i : skel.fragments[k]) acc[i] = 1;
    }
    return acc;
}

Mask fill_holes_2d(const Mask& mask) {
    const Dims& d = mask.dims();
    Mask out = mask;
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(d.nx * d.ny));
    std::deque<std::pair<std::int64_t, std::int64_t>> queue;
    for (std::int64_t z = 0; z < d.nz; ++z) {
        std::fill(outside.begin(), outside.end(), 0);
        auto seed = [&](std::int64_t x, std::int64_t y) {
            const auto p = static_cast<std::size_t>(x + d.nx * y);
            if (outside[p] || mask[d.index(x, y, z)]) return;
            outside[p] = 1;
            queue.emplace_back(x, y);
        };
        for (std::int64_t x = 0; x < d.nx; ++x) {
            seed(x, 0);
            seed(x, d.ny - 1);
        }
        for (std::int64_t y = 0; y < d.ny; ++y) {
            seed(0, y);
            seed(d.nx - 1, y);
        }
        while (!queue.empty()) {
            const auto [x, y] = queue.front();
            queue.pop_front();
            if (x > 0) seed(x - 1, y);
            if (x + 1 < d.nx) seed(x + 1, y);
            if (y > 0) seed(x, y - 1);
            if (y + 1 < d.ny) seed(x, y + 1);
        }
        for (std::int64_t y = 0; y < d.ny; ++y)
            for (std::int64_t x = 0; x < d.nx; ++x)
                if (!outside[static_cast<std::size_t>(x + d.nx * y)]) out[d.index(x, y, z)] = 1;
    }
    return out;
}

Mask expand_myocardial_region(const Mask& myo, const MyocardialExpansion& params) {
    if (params.iterations < 0) fail(ErrorKind::validation, "iterations must be >= 0");
    const auto kernel = StructuringElement::square(params.kernel_size);
    const auto smooth = StructuringElement::square(params.smooth_size);

    Mask region = largest_component(myo, Connectivity::vertex);
    region = fill_holes_2d(region);
    region = close(region, smooth);
    // Closing can seal a contour that had a gap; fill what it encloses.
    region = fill_holes_2d(region);
    for (int i = 0; i < params.iterations; ++i) region = dilate(region, kernel);
    return region;
}

}  // namespace vesselq
