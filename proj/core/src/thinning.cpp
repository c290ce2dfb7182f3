#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "vesselq/morphology.hpp"

namespace vesselq {
namespace {

// 3x3x3 neighbourhood cells are numbered (dx+1) + 3(dy+1) + 9(dz+1); 13 is the centre.
constexpr int kCentre = 13;

struct NeighbourhoodTables {
    std::array<std::vector<int>, 27> adj26;
    std::array<std::vector<int>, 27> adj6;
    std::array<bool, 27> in_n18{};
    std::array<int, 6> faces{};

    NeighbourhoodTables() {
        auto coords = [](int c) { return std::array<int, 3>{c % 3 - 1, (c / 3) % 3 - 1, c / 9 - 1}; };
        int f = 0;
        for (int a = 0; a < 27; ++a) {
            const auto pa = coords(a);
            const int l1 = std::abs(pa[0]) + std::abs(pa[1]) + std::abs(pa[2]);
            in_n18[a] = a != kCentre && l1 <= 2;
            if (l1 == 1) faces[f++] = a;
            for (int b = 0; b < 27; ++b) {
                if (a == b || b == kCentre) continue;
                const auto pb = coords(b);
                const int dx = std::abs(pa[0] - pb[0]), dy = std::abs(pa[1] - pb[1]),
                          dz = std::abs(pa[2] - pb[2]);
                if (std::max({dx, dy, dz}) == 1) adj26[a].push_back(b);
                if (dx + dy + dz == 1) adj6[a].push_back(b);
            }
        }
    }
};

const NeighbourhoodTables& tables() {
    static const NeighbourhoodTables t;
    return t;
}

using Cells = std::array<std::uint8_t, 27>;

bool simple_from_cells(const Cells& fg) {
    const auto& t = tables();
    std::array<int, 27> stack{};

    // Exactly one 26-connected foreground component among the 26 neighbours.
    int start = -1;
    int total = 0;
    for (int c = 0; c < 27; ++c) {
        if (c != kCentre && fg[c]) {
            ++total;
            if (start < 0) start = c;
        }
    }
    if (start < 0) return false;
    std::array<std::uint8_t, 27> seen{};
    int top = 0, reached = 0;
    stack[top++] = start;
    seen[start] = 1;
    while (top > 0) {
        const int a = stack[--top];
        ++reached;
        for (int b : t.adj26[a]) {
            if (fg[b] && !seen[b]) {
                seen[b] = 1;
                stack[top++] = b;
            }
        }
    }
    if (reached != total) return false;

    // Exactly one 6-connected background component in N18 touching a face neighbour.
    seen.fill(0);
    int components = 0;
    for (int face : t.faces) {
        if (fg[face] || seen[face]) continue;
        ++components;
        if (components > 1) return false;
        top = 0;
        stack[top++] = face;
        seen[face] = 1;
        while (top > 0) {
            const int a = stack[--top];
            for (int b : t.adj6[a]) {
                if (t.in_n18[b] && !fg[b] && !seen[b]) {
                    seen[b] = 1;
                    stack[top++] = b;
                }
            }
        }
    }
    return components == 1;
}

Cells gather(const Mask& m, const Voxel& v) {
    Cells cells{};
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                cells[(dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)] = m.get(v.x + dx, v.y + dy, v.z + dz);
    return cells;
}

int neighbour_count(const Cells& cells) {
    int n = 0;
    for (int c = 0; c < 27; ++c) n += (c != kCentre && cells[c]) ? 1 : 0;
    return n;
}

}  // namespace

bool is_simple_point(const Mask& mask, const Voxel& v) {
    return simple_from_cells(gather(mask, v));
}

Mask thin_to_centerline(const Mask& mask, const LabelVolume& depth) {
    if (depth.dims() != mask.dims()) {
        fail(ErrorKind::dimension_mismatch, "thinning depth map and mask differ in dims");
    }
    Mask cur = mask;
    const Dims& d = mask.dims();

    std::int32_t max_level = 0;
    std::vector<std::pair<std::int32_t, std::size_t>> order;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        if (!cur[i]) continue;
        const auto level = std::max(1, depth[i]);
        order.emplace_back(level, i);
        max_level = std::max(max_level, level);
    }
    std::sort(order.begin(), order.end());

    static constexpr std::array<Voxel, 6> kDirections{
        {{0, 0, -1}, {0, 0, 1}, {0, -1, 0}, {0, 1, 0}, {-1, 0, 0}, {1, 0, 0}}};

    std::size_t level_end = 0;
    std::vector<Voxel> active;
    for (std::int32_t level = 1; level <= max_level; ++level) {
        // Candidates are every surviving voxel at or below this depth: removals
        // at deeper levels can make a previously non-simple voxel simple.
        while (level_end < order.size() && order[level_end].first <= level) {
            active.push_back(d.voxel(order[level_end].second));
            ++level_end;
        }
        std::sort(active.begin(), active.end(), [&](const Voxel& a, const Voxel& b) {
            return d.index(a) < d.index(b);
        });

        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& dir : kDirections) {
                std::vector<Voxel> border;
                for (const auto& v : active) {
                    if (cur.at(v) && !cur.get(v.x + dir.x, v.y + dir.y, v.z + dir.z)) {
                        border.push_back(v);
                    }
                }
                for (const auto& v : border) {
                    const Cells cells = gather(cur, v);
                    if (neighbour_count(cells) <= 1) continue;
                    if (!simple_from_cells(cells)) continue;
                    cur.at(v) = 0;
                    changed = true;
                }
            }
            std::erase_if(active, [&](const Voxel& v) { return !cur.at(v); });
        }
    }
    return cur;
}

}  // namespace vesselq
