#include <gtest/gtest.h>

#include <map>
#include <set>

#include "test_support.hpp"

using namespace vesselq;

namespace {

bool subset(const Mask& a, const Mask& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

Mask single_voxel(Dims d, Voxel v) {
    Mask m(d, {1, 1, 1});
    m.at(v) = 1;
    return m;
}

/// Helper: solid box [lo, hi] inclusive
Mask box(Dims d, Voxel lo, Voxel hi) {
    Mask m(d, {1, 1, 1});
    for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
            for (int x = lo.x; x <= hi.x; ++x) m.at(x, y, z) = 1;
    return m;
}

/// Helper: oracle hole filling by 4-connected flood from the slice border
Mask brute_fill_holes(const Mask& m) {
    Mask out = m;
    const auto d = m.dims();
    for (int z = 0; z < d.nz; ++z) {
        std::vector<char> outside(std::size_t(d.nx * d.ny), 0);
        std::deque<std::pair<int, int>> q;
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if ((x == 0 || y == 0 || x == d.nx - 1 || y == d.ny - 1) && !m.at(x, y, z)) {
                    outside[std::size_t(x + d.nx * y)] = 1;
                    q.emplace_back(x, y);
                }
        while (!q.empty()) {
            auto [x, y] = q.front();
            q.pop_front();
            const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (auto& o : nb) {
                const int nx = x + o[0], ny = y + o[1];
                if (nx < 0 || ny < 0 || nx >= d.nx || ny >= d.ny) continue;
                auto& f = outside[std::size_t(nx + d.nx * ny)];
                if (f || m.at(nx, ny, z)) continue;
                f = 1;
                q.emplace_back(nx, ny);
            }
        }
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if (!outside[std::size_t(x + d.nx * y)]) out.at(x, y, z) = 1;
    }
    return out;
}

}  // namespace

// =============================================================================
// Structuring elements
// =============================================================================

TEST(StructuringElementTest, OffsetCounts) {
    EXPECT_EQ(StructuringElement::cube(3).offsets().size(), 27u);
    EXPECT_EQ(StructuringElement::cross3d(3).offsets().size(), 7u);
    EXPECT_EQ(StructuringElement::cross3d(5).offsets().size(), 13u);
    EXPECT_EQ(StructuringElement::square(5).offsets().size(), 25u);
    EXPECT_EQ(StructuringElement(SeShape::cross, 3, SeDim::planar).offsets().size(), 5u);
    EXPECT_EQ(StructuringElement::cube(1).offsets().size(), 1u);
}

TEST(StructuringElementTest, EvenOrNonPositiveSideRejected) {
    EXPECT_THROW(StructuringElement::cube(4), Error);
    EXPECT_THROW(StructuringElement::cube(0), Error);
    EXPECT_THROW(StructuringElement::square(-3), Error);
}

// =============================================================================
// Erosion and dilation
// =============================================================================

TEST(ErodeDilateTest, SingleVoxelExamples) {
    const auto se = StructuringElement::cube(3);
    const Mask one = single_voxel({5, 5, 5}, {2, 2, 2});
    EXPECT_EQ(count_foreground(erode(one, se)), 0u);
    EXPECT_EQ(count_foreground(dilate(one, se)), 27u);
    const Mask corner = single_voxel({5, 5, 5}, {0, 0, 0});
    EXPECT_EQ(count_foreground(dilate(corner, se)), 8u);
}

TEST(ErodeDilateTest, SolidCubeErodesToInnerCube) {
    const Mask cube = box({12, 12, 12}, {1, 1, 1}, {10, 10, 10});
    const Mask e = erode(cube, StructuringElement::cube(3));
    EXPECT_EQ(e, test::brute_morph(cube, StructuringElement::cube(3), true));
    EXPECT_EQ(e, box({12, 12, 12}, {2, 2, 2}, {9, 9, 9}));
    EXPECT_EQ(count_foreground(e), 512u);
}

TEST(ErodeDilateTest, FaceTouchingCubeErodesFromBorder) {
    const Mask full({6, 6, 6}, {1, 1, 1}, 1);
    EXPECT_EQ(count_foreground(erode(full, StructuringElement::cube(3))), 64u);
}

TEST(ErodeDilateTest, MatchesBruteForceOnRandomMasks) {
    std::mt19937_64 rng(1);
    const std::vector<StructuringElement> elements{
        StructuringElement::cube(3), StructuringElement::cross3d(3), StructuringElement::cross3d(5),
        StructuringElement::square(5), StructuringElement(SeShape::cross, 3, SeDim::planar), StructuringElement::cube(5)};
    for (int trial = 0; trial < 30; ++trial) {
        const Mask m = test::random_mask(rng, test::random_dims(rng, 3, 12), 0.35 + 0.02 * (trial % 20));
        for (const auto& se : elements) {
            const Mask e = erode(m, se), d = dilate(m, se);
            ASSERT_EQ(e, test::brute_morph(m, se, true)) << "trial " << trial;
            ASSERT_EQ(d, test::brute_morph(m, se, false)) << "trial " << trial;
            EXPECT_TRUE(subset(e, m));
            EXPECT_TRUE(subset(m, d));
        }
    }
}

TEST(OpenCloseTest, Examples) {
    const auto se = StructuringElement::cube(3);
    const Mask cube = box({12, 12, 12}, {1, 1, 1}, {10, 10, 10});
    EXPECT_EQ(open(cube, se), cube);
    EXPECT_EQ(count_foreground(open(single_voxel({5, 5, 5}, {2, 2, 2}), se)), 0u);
}

TEST(OpenCloseTest, OpenInsideMaskInsideClose) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const Mask m = test::random_mask(rng, test::random_dims(rng, 3, 10), 0.5);
        for (const auto& se : {StructuringElement::cube(3), StructuringElement::cross3d(3), StructuringElement::square(3)}) {
            EXPECT_TRUE(subset(open(m, se), m));
            EXPECT_TRUE(subset(m, close(m, se)));
            EXPECT_EQ(open(m, se), test::brute_morph(test::brute_morph(m, se, true), se, false));
        }
    }
}

TEST(OpenCloseTest, CloseFillsInteriorGap) {
    Mask m = box({9, 9, 9}, {1, 1, 1}, {7, 7, 7});
    m.at(4, 4, 4) = 0;
    EXPECT_EQ(close(m, StructuringElement::cube(3)), box({9, 9, 9}, {1, 1, 1}, {7, 7, 7}));
}

// =============================================================================
// Connected components
// =============================================================================

TEST(ComponentsTest, Examples) {
    Mask m({5, 5, 5}, {1, 1, 1});
    m.at(0, 0, 0) = 1;
    m.at(4, 4, 4) = 1;
    EXPECT_EQ(connected_components(m, Connectivity::face).sizes.size(), 2u);

    Mask diag({3, 3, 3}, {1, 1, 1});
    diag.at(0, 0, 0) = 1;
    diag.at(1, 1, 1) = 1;
    EXPECT_EQ(connected_components(diag, Connectivity::vertex).sizes.size(), 1u);
    EXPECT_EQ(connected_components(diag, Connectivity::face).sizes.size(), 2u);
    EXPECT_EQ(connected_components(diag, Connectivity::edge).sizes.size(), 2u);
}

TEST(ComponentsTest, ConnectivityFromInt) {
    EXPECT_EQ(connectivity_from_int(18), Connectivity::edge);
    EXPECT_THROW(connectivity_from_int(8), Error);
    EXPECT_EQ(neighbor_offsets(Connectivity::face).size(), 6u);
    EXPECT_EQ(neighbor_offsets(Connectivity::edge).size(), 18u);
    EXPECT_EQ(neighbor_offsets(Connectivity::vertex).size(), 26u);
}

TEST(ComponentsTest, PartitionMatchesFloodFill) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 24; ++trial) {
        const Mask m = test::random_mask(rng, {16, 16, 16}, 0.2 + 0.02 * trial);
        for (auto c : {Connectivity::face, Connectivity::edge, Connectivity::vertex}) {
            const auto cc = connected_components(m, c);
            const auto ref = test::flood_partition(m, c);
            std::map<int, int> fwd, back;
            std::int64_t total = 0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                const int a = cc.labels[i], b = ref[i];
                ASSERT_EQ(a == 0, b < 0);
                if (a == 0) continue;
                auto [it1, new1] = fwd.emplace(a, b);
                auto [it2, new2] = back.emplace(b, a);
                ASSERT_EQ(it1->second, b);
                ASSERT_EQ(it2->second, a);
            }
            for (auto s : cc.sizes) total += s;
            EXPECT_EQ(std::size_t(total), count_foreground(m));
            EXPECT_EQ(fwd.size(), cc.sizes.size());
            // labels dense from 1 in scan order of first voxel
            int seen = 0;
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (cc.labels[i] > seen) {
                    ASSERT_EQ(cc.labels[i], seen + 1);
                    ++seen;
                }
            }
        }
    }
}

TEST(ComponentsTest, LargestComponentAndTieBreak) {
    Mask m({10, 3, 3}, {1, 1, 1});
    m.at(0, 0, 0) = 1;
    m.at(1, 0, 0) = 1;
    m.at(5, 0, 0) = 1;
    m.at(6, 0, 0) = 1;
    const Mask l = largest_component(m, Connectivity::face);
    EXPECT_EQ(count_foreground(l), 2u);
    EXPECT_TRUE(l.at(0, 0, 0));
    m.at(9, 2, 2) = 1;
    m.at(8, 2, 2) = 1;
    m.at(7, 2, 2) = 1;
    EXPECT_TRUE(largest_component(m, Connectivity::face).at(9, 2, 2));
    EXPECT_EQ(count_foreground(largest_component(Mask({4, 4, 4}, {1, 1, 1}), Connectivity::vertex)), 0u);
}

TEST(ComponentsTest, LargestComponentMatchesOracle) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Mask m = test::random_mask(rng, {12, 12, 12}, 0.25);
        const auto ref = test::flood_partition(m, Connectivity::vertex);
        std::map<int, std::size_t> size;
        for (int l : ref)
            if (l >= 0) ++size[l];
        int best = -1;
        std::size_t best_size = 0;
        for (auto [l, s] : size)
            if (s > best_size) {
                best = l;
                best_size = s;
            }
        const Mask got = largest_component(m, Connectivity::vertex);
        for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(got[i] != 0, ref[i] == best && best >= 0);
    }
}

TEST(ComponentsTest, LabelRegionsPairwiseNonAdjacent) {
    std::mt19937_64 rng(5);
    const Mask m = test::random_mask(rng, {14, 14, 14}, 0.3);
    for (auto c : {Connectivity::face, Connectivity::edge, Connectivity::vertex}) {
        const auto cc = connected_components(m, c);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!m[i]) continue;
            const Voxel v = m.dims().voxel(i);
            for (const auto& o : neighbor_offsets(c)) {
                const Voxel n{v.x + o.x, v.y + o.y, v.z + o.z};
                if (!m.dims().contains(n) || !m.at(n)) continue;
                ASSERT_EQ(cc.labels.at(n), cc.labels[i]);
            }
        }
    }
}

// =============================================================================
// Skeletonization
// =============================================================================

TEST(SkeletonTest, EmptyAndSingleVoxel) {
    const auto se = StructuringElement::cross3d();
    const auto empty = skeletonize(Mask({4, 4, 4}, {1, 1, 1}), se);
    EXPECT_EQ(count_foreground(empty.skeleton), 0u);
    EXPECT_TRUE(empty.fragments.empty());

    const Mask one = single_voxel({5, 5, 5}, {2, 3, 1});
    const auto s = skeletonize(one, se);
    EXPECT_EQ(s.skeleton, one);
    ASSERT_EQ(s.fragments.size(), 1u);
    EXPECT_EQ(s.fragment_mask(0), one);
}

TEST(SkeletonTest, ReconstructionTheoremOnRandomMasks) {
    std::mt19937_64 rng(6);
    const std::vector<StructuringElement> elements{StructuringElement::cross3d(), StructuringElement::cube(3),
                                                   StructuringElement::square(3)};
    for (int trial = 0; trial < 40; ++trial) {
        const Mask m = trial % 2 ? test::random_blobs(rng, test::random_dims(rng, 4, 18), 6, 9)
                                 : test::random_mask(rng, test::random_dims(rng, 3, 12), 0.6);
        for (const auto& se : elements) {
            const auto s = skeletonize(m, se);
            ASSERT_EQ(reconstruct_from_fragments(s, se), m) << "trial " << trial;
            EXPECT_TRUE(subset(s.skeleton, m));
            Mask un(m.dims(), m.spacing());
            for (std::size_t k = 0; k < s.fragments.size(); ++k)
                for (auto i : s.fragments[k]) un[i] = 1;
            EXPECT_EQ(un, s.skeleton);
        }
    }
}

TEST(SkeletonTest, FragmentsFollowTheDefinition) {
    std::mt19937_64 rng(7);
    const auto se = StructuringElement::cross3d();
    const Mask m = test::random_blobs(rng, {16, 16, 16}, 5, 10);
    const auto s = skeletonize(m, se);
    Mask x = m;
    for (std::size_t k = 0; k < s.fragments.size(); ++k) {
        const Mask opened = test::brute_morph(test::brute_morph(x, se, true), se, false);
        Mask frag(m.dims(), m.spacing());
        for (std::size_t i = 0; i < x.size(); ++i) frag[i] = x[i] && !opened[i];
        EXPECT_EQ(s.fragment_mask(k), frag) << "level " << k;
        x = test::brute_morph(x, se, true);
    }
    EXPECT_EQ(count_foreground(x), 0u);
}

TEST(SkeletonTest, DepthCountsSurvivedErosions) {
    const Mask cube = box({9, 9, 9}, {1, 1, 1}, {7, 7, 7});
    const auto s = skeletonize(cube, StructuringElement::cube(3));
    EXPECT_EQ(s.depth.at(1, 1, 1), 1);
    EXPECT_EQ(s.depth.at(2, 2, 2), 2);
    EXPECT_EQ(s.depth.at(4, 4, 4), 4);
    EXPECT_EQ(s.depth.at(0, 0, 0), 0);
}

TEST(SkeletonTest, TubeSkeletonHugsTheAxis) {
    // radius 2 voxels, 20 long, axis at y = z = 5
    Mask m({26, 11, 11}, {1, 1, 1});
    for (int x = 3; x < 23; ++x)
        for (int z = 0; z < 11; ++z)
            for (int y = 0; y < 11; ++y)
                if ((y - 5) * (y - 5) + (z - 5) * (z - 5) <= 4) m.at(x, y, z) = 1;
    const auto s = skeletonize(m, StructuringElement::cross3d());
    ASSERT_GT(count_foreground(s.skeleton), 0u);
    const Mask curve = thin_to_centerline(m, s.depth);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (!curve[i]) continue;
        const Voxel v = curve.dims().voxel(i);
        EXPECT_LE(std::max(std::abs(v.y - 5), std::abs(v.z - 5)), 1) << v.x << "," << v.y << "," << v.z;
    }
    EXPECT_GE(count_foreground(curve), 14u);
}

TEST(SkeletonTest, PhantomTubeSkeletonWithinOneVoxelOfAxis) {
    const auto ph = test::load_phantom("straight_tube");
    const auto& sp = ph.mask.spacing();
    const auto s = skeletonize(ph.mask, StructuringElement::cross3d());
    const Mask curve = thin_to_centerline(ph.mask, s.depth);
    const auto& axis = ph.truth.front().centerline_mm;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (!curve[i]) continue;
        const Voxel v = curve.dims().voxel(i);
        double best = INFINITY;
        for (const auto& a : axis) {
            const double dx = v.x * sp.dx - a[0], dy = v.y * sp.dy - a[1], dz = v.z * sp.dz - a[2];
            best = std::min(best, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
        EXPECT_LE(best, sp.max() + 1e-9);
    }
}

TEST(ThinningTest, ThinnedCurvePreservesComponentCount) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Mask m = test::random_blobs(rng, {20, 20, 20}, 4, 8);
        const auto s = skeletonize(m, StructuringElement::cross3d());
        const Mask curve = thin_to_centerline(m, s.depth);
        EXPECT_TRUE(subset(curve, m));
        EXPECT_EQ(connected_components(curve, Connectivity::vertex).sizes.size(),
                  connected_components(m, Connectivity::vertex).sizes.size());
    }
}

TEST(ThinningTest, SimplePointExamples) {
    Mask m({3, 3, 3}, {1, 1, 1});
    m.at(1, 1, 1) = 1;
    EXPECT_FALSE(is_simple_point(m, {1, 1, 1}));
    m.at(0, 1, 1) = 1;
    EXPECT_TRUE(is_simple_point(m, {1, 1, 1}));
    m.at(2, 1, 1) = 1;
    EXPECT_FALSE(is_simple_point(m, {1, 1, 1}));
}

// =============================================================================
// Myocardial expansion
// =============================================================================

TEST(MyoTest, EmptyInEmptyOut) {
    EXPECT_EQ(count_foreground(expand_myocardial_region(Mask({20, 20, 3}, {1, 1, 1}))), 0u);
}

TEST(MyoTest, RingFillsBeforeDilation) {
    Mask ring({40, 40, 3}, {1, 1, 1});
    Mask disk = ring;
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            const int r2 = (x - 20) * (x - 20) + (y - 20) * (y - 20);
            if (r2 <= 100) disk.at(x, y, 1) = 1;
            if (r2 <= 100 && r2 >= 49) ring.at(x, y, 1) = 1;
        }
    EXPECT_EQ(fill_holes_2d(ring), brute_fill_holes(ring));
    EXPECT_EQ(fill_holes_2d(ring), disk);
    const Mask e = expand_myocardial_region(ring, {1, 1, 1});
    EXPECT_EQ(e, disk);
}

TEST(MyoTest, DiskDilationCoversChebyshevGrowth) {
    const int r = 5, k = 4;
    Mask disk({40, 40, 3}, {1, 1, 1});
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            if ((x - 20) * (x - 20) + (y - 20) * (y - 20) <= r * r) disk.at(x, y, 1) = 1;
    const Mask e = expand_myocardial_region(disk, {2 * k + 1, 1, 5});
    const Mask ref = test::brute_morph(disk, StructuringElement::square(2 * k + 1), false);
    EXPECT_TRUE(subset(ref, e));
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            if (std::max(std::abs(x - 20), std::abs(y - 20)) <= r + k &&
                std::min(std::abs(x - 20), std::abs(y - 20)) == 0)
                EXPECT_TRUE(e.at(x, y, 1));
    for (int z : {0, 2})
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) EXPECT_FALSE(e.at(x, y, z));
}

TEST(MyoTest, OutputContainsHoleFilledLargestComponent) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 12; ++trial) {
        const Mask m = test::random_blobs(rng, {30, 30, 4}, 6, 8);
        const Mask base = brute_fill_holes(largest_component(m, Connectivity::vertex));
        for (int ks : {1, 3, 7}) {
            const Mask e = expand_myocardial_region(m, {ks, 1, 3});
            EXPECT_TRUE(subset(base, e)) << "trial " << trial << " kernel " << ks;
        }
    }
}

TEST(MyoTest, IterationsCompose) {
    Mask m({40, 40, 1}, {1, 1, 1});
    m.at(20, 20, 0) = 1;
    const Mask twice = expand_myocardial_region(m, {3, 2, 1});
    EXPECT_EQ(count_foreground(twice), 25u);
    EXPECT_THROW(expand_myocardial_region(m, {4, 1, 5}), Error);
}

TEST(BoundingBoxTest, Examples) {
    EXPECT_TRUE(bounding_box(Mask({3, 3, 3}, {1, 1, 1})).empty());
    const Box b = bounding_box(box({9, 9, 9}, {1, 2, 3}, {4, 5, 6}));
    EXPECT_EQ(b.lo, (Voxel{1, 2, 3}));
    EXPECT_EQ(b.hi, (Voxel{4, 5, 6}));
}
