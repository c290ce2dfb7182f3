#include "vesselq/vessel_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>

namespace vesselq {
namespace {

// Skeleton voxels with 26-adjacency lists; ids follow Voxel ordering.
struct SparseSkeleton {
    Dims dims;
    std::vector<Voxel> voxels;
    std::unordered_map<std::size_t, int> id_of;
    std::vector<std::vector<int>> adj;

    explicit SparseSkeleton(const Mask& m) : dims(m.dims()) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i]) voxels.push_back(dims.voxel(i));
        }
        std::sort(voxels.begin(), voxels.end());
        id_of.reserve(voxels.size());
        for (std::size_t k = 0; k < voxels.size(); ++k) {
            id_of.emplace(dims.index(voxels[k]), static_cast<int>(k));
        }
        adj.resize(voxels.size());
        for (std::size_t k = 0; k < voxels.size(); ++k) {
            const Voxel& v = voxels[k];
            for (const auto& o : neighbor_offsets(Connectivity::vertex)) {
                const int id = find({v.x + o.x, v.y + o.y, v.z + o.z});
                if (id >= 0) adj[k].push_back(id);
            }
            std::sort(adj[k].begin(), adj[k].end());
        }
    }

    int find(const Voxel& v) const {
        if (!dims.contains(v)) return -1;
        const auto it = id_of.find(dims.index(v));
        return it == id_of.end() ? -1 : it->second;
    }
    std::size_t size() const { return voxels.size(); }
};

int chebyshev(const Voxel& a, const Voxel& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

int sign(int v) { return (v > 0) - (v < 0); }

void bridge_single_voxel_gaps(Mask& sk) {
    const SparseSkeleton s(sk);
    std::vector<int> parent(s.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t k = 0; k < s.size(); ++k) {
        for (int n : s.adj[k]) parent[find(static_cast<int>(k))] = find(n);
    }
    std::vector<int> ends;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.adj[k].size() == 1) ends.push_back(static_cast<int>(k));
    }
    std::vector<bool> used(s.size(), false);
    for (std::size_t i = 0; i < ends.size(); ++i) {
        for (std::size_t j = i + 1; j < ends.size(); ++j) {
            const int a = ends[i], b = ends[j];
            if (used[a] || used[b]) continue;
            const Voxel& va = s.voxels[a];
            const Voxel& vb = s.voxels[b];
            if (chebyshev(va, vb) != 2 || find(a) == find(b)) continue;
            const Voxel bridge{va.x + sign(vb.x - va.x), va.y + sign(vb.y - va.y),
                               va.z + sign(vb.z - va.z)};
            sk.at(bridge) = 1;
            parent[find(a)] = find(b);
            used[a] = used[b] = true;
        }
    }
}

struct RawEdge {
    int from;
    int to;
    std::vector<int> path;  // voxel ids, first/last are cluster members
};

struct Clusters {
    std::vector<int> of;                // cluster per voxel, -1 for chain voxels
    std::vector<std::vector<int>> members;
    std::vector<bool> junction;
};

std::vector<RawEdge> trace_edges(const SparseSkeleton& s, const Clusters& cl,
                                 std::vector<bool>& visited) {
    std::vector<RawEdge> edges;
    std::set<std::pair<int, int>> direct;
    visited.assign(s.size(), false);
    for (std::size_t c = 0; c < cl.members.size(); ++c) {
        for (int m : cl.members[c]) {
            for (int q : s.adj[m]) {
                if (cl.of[q] == static_cast<int>(c)) continue;
                if (cl.of[q] >= 0) {
                    if (direct.emplace(std::min(m, q), std::max(m, q)).second) {
                        edges.push_back({static_cast<int>(c), cl.of[q], {m, q}});
                    }
                    continue;
                }
                if (visited[q]) continue;
                std::vector<int> path{m};
                int prev = m;
                int cur = q;
                while (true) {
                    if (cl.of[cur] >= 0) {
                        path.push_back(cur);
                        edges.push_back({static_cast<int>(c), cl.of[cur], std::move(path)});
                        break;
                    }
                    if (visited[cur]) break;
                    visited[cur] = true;
                    path.push_back(cur);
                    int next = -1;
                    for (int r : s.adj[cur]) {
                        if (r != prev) {
                            next = r;
                            break;
                        }
                    }
                    if (next < 0) break;
                    prev = cur;
                    cur = next;
                }
            }
        }
    }
    return edges;
}

std::vector<int> components_of(const SparseSkeleton& s, const std::vector<int>& ids) {
    // Returns a component index per entry of `ids` (26-adjacency restricted to ids).
    std::unordered_map<int, int> pos;
    for (std::size_t k = 0; k < ids.size(); ++k) pos.emplace(ids[k], static_cast<int>(k));
    std::vector<int> comp(ids.size(), -1);
    int next = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (comp[k] >= 0) continue;
        std::deque<int> queue{static_cast<int>(k)};
        comp[k] = next;
        while (!queue.empty()) {
            const int a = queue.front();
            queue.pop_front();
            for (int n : s.adj[ids[a]]) {
                const auto it = pos.find(n);
                if (it != pos.end() && comp[it->second] < 0) {
                    comp[it->second] = next;
                    queue.push_back(it->second);
                }
            }
        }
        ++next;
    }
    return comp;
}

int representative(const SparseSkeleton& s, const std::vector<int>& members) {
    double cx = 0, cy = 0, cz = 0;
    for (int m : members) {
        cx += s.voxels[m].x;
        cy += s.voxels[m].y;
        cz += s.voxels[m].z;
    }
    const double n = static_cast<double>(members.size());
    cx /= n;
    cy /= n;
    cz /= n;
    int best = members.front();
    double best_d = INFINITY;
    for (int m : members) {  // members sorted, so strict < keeps the smaller voxel on ties
        const Voxel& v = s.voxels[m];
        const double d = (v.x - cx) * (v.x - cx) + (v.y - cy) * (v.y - cy) + (v.z - cz) * (v.z - cz);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

// Shortest 26-path inside a cluster, from `from` to `to`, inclusive.
std::vector<int> path_within(const SparseSkeleton& s, const Clusters& cl, int cluster, int from,
                             int to) {
    if (from == to) return {from};
    std::unordered_map<int, int> parent{{from, from}};
    std::deque<int> queue{from};
    while (!queue.empty()) {
        const int a = queue.front();
        queue.pop_front();
        if (a == to) break;
        for (int n : s.adj[a]) {
            if (cl.of[n] != cluster || parent.count(n)) continue;
            parent.emplace(n, a);
            queue.push_back(n);
        }
    }
    std::vector<int> path;
    for (int cur = to; cur != from; cur = parent.at(cur)) path.push_back(cur);
    path.push_back(from);
    std::reverse(path.begin(), path.end());
    return path;
}

Clusters initial_clusters(const SparseSkeleton& s, bool collapse) {
    Clusters cl;
    cl.of.assign(s.size(), -1);
    std::vector<int> junctions;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.adj[k].size() >= 3) junctions.push_back(static_cast<int>(k));
    }
    if (collapse) {
        const auto comp = components_of(s, junctions);
        const int n = junctions.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
        cl.members.resize(n);
        for (std::size_t k = 0; k < junctions.size(); ++k) {
            cl.members[comp[k]].push_back(junctions[k]);
            cl.of[junctions[k]] = comp[k];
        }
        // A degree-2 voxel whose both neighbours sit in one cluster is part of it.
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (cl.of[k] >= 0 || s.adj[k].size() != 2) continue;
                const int a = cl.of[s.adj[k][0]], b = cl.of[s.adj[k][1]];
                if (a >= 0 && a == b) {
                    cl.of[k] = a;
                    cl.members[a].push_back(static_cast<int>(k));
                    grew = true;
                }
            }
        }
    } else {
        for (int j : junctions) {
            cl.of[j] = static_cast<int>(cl.members.size());
            cl.members.push_back({j});
        }
    }
    cl.junction.assign(cl.members.size(), true);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.adj[k].size() <= 1) {
            cl.of[k] = static_cast<int>(cl.members.size());
            cl.members.push_back({static_cast<int>(k)});
            cl.junction.push_back(false);
        }
    }
    return cl;
}

// Merges branch clusters joined by short edges. Returns true if anything merged.
bool merge_close_junctions(const SparseSkeleton& s, Clusters& cl, const std::vector<RawEdge>& edges,
                           const GraphOptions& opt) {
    const std::size_t n = cl.members.size();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    std::vector<std::vector<int>> absorbed(n);
    bool any = false;
    for (const auto& e : edges) {
        if (e.from == e.to || !cl.junction[e.from] || !cl.junction[e.to]) continue;
        const auto interior = static_cast<int>(e.path.size()) - 2;
        int limit = opt.junction_merge_length;
        if (opt.depth != nullptr) {
            limit = std::max(opt.depth->at(s.voxels[e.path.front()]),
                             opt.depth->at(s.voxels[e.path.back()]));
        }
        if (interior > limit) continue;
        const int a = find(e.from), b = find(e.to);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
        absorbed[e.from].insert(absorbed[e.from].end(), e.path.begin() + 1, e.path.end() - 1);
        any = true;
    }
    if (!any) return false;

    Clusters merged;
    merged.of.assign(s.size(), -1);
    std::vector<int> new_id(n, -1);
    for (std::size_t c = 0; c < n; ++c) {
        const int root = find(static_cast<int>(c));
        if (new_id[root] < 0) {
            new_id[root] = static_cast<int>(merged.members.size());
            merged.members.emplace_back();
            merged.junction.push_back(cl.junction[root]);
        }
        auto& dst = merged.members[new_id[root]];
        dst.insert(dst.end(), cl.members[c].begin(), cl.members[c].end());
        dst.insert(dst.end(), absorbed[c].begin(), absorbed[c].end());
    }
    for (std::size_t c = 0; c < merged.members.size(); ++c) {
        auto& m = merged.members[c];
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
        for (int v : m) merged.of[v] = static_cast<int>(c);
    }
    cl = std::move(merged);
    return true;
}

}  // namespace

std::size_t SkeletonGraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [kind](const auto& n) { return n.kind == kind; }));
}

LabelVolume skeleton_degrees(const Mask& skeleton) {
    const Dims& d = skeleton.dims();
    LabelVolume out(d, skeleton.spacing(), 0);
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        if (!skeleton[i]) continue;
        const Voxel v = d.voxel(i);
        int n = 0;
        for (const auto& o : neighbor_offsets(Connectivity::vertex)) {
            n += skeleton.get(v.x + o.x, v.y + o.y, v.z + o.z) ? 1 : 0;
        }
        out[i] = n;
    }
    return out;
}

SkeletonGraph build_graph(const Mask& skeleton, const GraphOptions& options) {
    SkeletonGraph g;
    g.dims = skeleton.dims();
    g.spacing = skeleton.spacing();
    g.skeleton = Mask(skeleton.dims(), skeleton.spacing());
    for (std::size_t i = 0; i < skeleton.size(); ++i) g.skeleton[i] = skeleton[i] ? 1 : 0;
    if (options.bridge_gaps) bridge_single_voxel_gaps(g.skeleton);

    const SparseSkeleton s(g.skeleton);
    Clusters cl = initial_clusters(s, options.collapse_clusters);
    std::vector<bool> visited;
    auto raw = trace_edges(s, cl, visited);
    const bool merging = options.junction_merge_length > 0 || options.depth != nullptr;
    while (merging && merge_close_junctions(s, cl, raw, options)) {
        raw = trace_edges(s, cl, visited);
    }

    // Nodes ordered by representative voxel.
    std::vector<int> reps(cl.members.size());
    for (std::size_t c = 0; c < cl.members.size(); ++c) {
        std::sort(cl.members[c].begin(), cl.members[c].end());
        reps[c] = representative(s, cl.members[c]);
    }
    std::vector<int> order(cl.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return reps[a] < reps[b]; });
    std::vector<std::size_t> node_of_cluster(cl.members.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int c = order[k];
        node_of_cluster[c] = k;
        GraphNode node;
        node.position = s.voxels[reps[c]];
        for (int m : cl.members[c]) node.members.push_back(s.voxels[m]);
        g.nodes.push_back(std::move(node));
    }

    for (const auto& e : raw) {
        GraphEdge edge;
        edge.from = node_of_cluster[e.from];
        edge.to = node_of_cluster[e.to];
        auto head = path_within(s, cl, e.from, reps[e.from], e.path.front());
        auto tail = path_within(s, cl, e.to, reps[e.to], e.path.back());
        std::vector<int> ids(head.begin(), head.end());
        ids.insert(ids.end(), e.path.begin() + 1, e.path.end());
        ids.insert(ids.end(), tail.rbegin() + 1, tail.rend());
        for (int id : ids) edge.points.push_back(s.voxels[id]);
        g.edges.push_back(std::move(edge));
    }

    // Chains never reached from a terminal are simple cycles; split each at its
    // lexicographically smallest voxel and walk towards the smaller neighbour.
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (cl.of[k] >= 0 || visited[k]) continue;
        const int start = static_cast<int>(k);  // ids follow Voxel order: smallest first
        GraphNode node;
        node.position = s.voxels[start];
        node.members = {node.position};
        g.nodes.push_back(std::move(node));
        GraphEdge edge;
        edge.from = edge.to = g.nodes.size() - 1;
        edge.closed = true;
        int prev = start;
        int cur = s.adj[start].front();
        visited[start] = true;
        edge.points.push_back(s.voxels[start]);
        while (cur != start && !visited[cur]) {
            visited[cur] = true;
            edge.points.push_back(s.voxels[cur]);
            int next = -1;
            for (int r : s.adj[cur]) {
                if (r != prev) {
                    next = r;
                    break;
                }
            }
            prev = cur;
            cur = next;
            if (cur < 0) break;
        }
        g.edges.push_back(std::move(edge));
    }

    for (const auto& e : g.edges) {
        ++g.nodes[e.from].degree;
        ++g.nodes[e.to].degree;
    }
    for (auto& n : g.nodes) {
        n.kind = n.degree == 0   ? NodeKind::isolated
                 : n.degree == 1 ? NodeKind::endpoint
                 : n.degree == 2 ? NodeKind::connector
                                 : NodeKind::branch;
    }
    return g;
}

Mask prune_spurs(const Mask& skeleton, const LabelVolume& depth, const SpurOptions& options,
                 const GraphOptions& graph_options) {
    Mask cur = skeleton;
    while (true) {
        const SkeletonGraph g = build_graph(cur, graph_options);
        cur = g.skeleton;
        bool removed = false;
        for (const auto& e : g.edges) {
            const auto& a = g.nodes[e.from];
            const auto& b = g.nodes[e.to];
            const GraphNode* branch = nullptr;
            if (a.kind == NodeKind::endpoint && b.kind == NodeKind::branch) branch = &b;
            if (b.kind == NodeKind::endpoint && a.kind == NodeKind::branch) branch = &a;
            if (branch == nullptr) continue;
            std::vector<Voxel> spur;
            for (const auto& p : e.points) {
                if (!std::binary_search(branch->members.begin(), branch->members.end(), p)) {
                    spur.push_back(p);
                }
            }
            const double limit =
                options.depth_factor * depth.get(branch->position.x, branch->position.y,
                                                 branch->position.z) +
                options.margin;
            if (static_cast<double>(spur.size()) > limit) continue;
            for (const auto& p : spur) cur.at(p) = 0;
            removed = true;
        }
        if (!removed) return cur;
        cur = thin_to_centerline(cur, depth);
    }
}

std::vector<ArterySegment> separate_segments(const SkeletonGraph& graph) {
    std::vector<ArterySegment> out;
    out.reserve(graph.edges.size());
    for (std::size_t k = 0; k < graph.edges.size(); ++k) {
        out.push_back({static_cast<int>(k), graph.edges[k].points});
    }
    return out;
}

ArterySegment orient_segment(const ArterySegment& segment, const Spacing& spacing,
                             std::optional<Voxel> root, std::span<const double> areas) {
    if (segment.points.empty()) fail(ErrorKind::validation, "cannot orient an empty segment");
    const Voxel head = segment.front();
    const Voxel tail = segment.back();
    bool reverse = false;
    if (root) {
        auto dist2 = [&](const Voxel& v) {
            const double dx = (v.x - root->x) * spacing.dx;
            const double dy = (v.y - root->y) * spacing.dy;
            const double dz = (v.z - root->z) * spacing.dz;
            return dx * dx + dy * dy + dz * dz;
        };
        const double dh = dist2(head), dt = dist2(tail);
        reverse = dt < dh || (dt == dh && tail < head);
    } else if (!areas.empty()) {
        if (areas.size() != segment.points.size()) {
            fail(ErrorKind::validation, "area profile length does not match segment length");
        }
        const std::size_t n = std::min<std::size_t>(5, areas.size());
        const double mh = std::accumulate(areas.begin(), areas.begin() + n, 0.0) / n;
        const double mt = std::accumulate(areas.end() - n, areas.end(), 0.0) / n;
        reverse = mt > mh || (mt == mh && tail < head);
    } else {
        reverse = tail < head;
    }
    ArterySegment out = segment;
    if (reverse) std::reverse(out.points.begin(), out.points.end());
    return out;
}

std::vector<ArterySegment> prune_short(std::vector<ArterySegment> segments, int min_len) {
    if (min_len < 0) fail(ErrorKind::validation, "min_len must be >= 0");
    std::erase_if(segments, [min_len](const ArterySegment& s) {
        return s.length_voxels() < static_cast<std::size_t>(min_len);
    });
    return segments;
}

Centerline extract_centerline(const Mask& mask, const CenterlineOptions& options) {
    Centerline c;
    c.skeleton = skeletonize(mask, options.se);
    GraphOptions go;
    go.bridge_gaps = options.bridge_gaps;
    go.collapse_clusters = options.collapse_clusters;
    if (options.mode == CenterlineMode::thinned) {
        go.depth = &c.skeleton.depth;
        c.curve = thin_to_centerline(mask, c.skeleton.depth);
        c.curve = prune_spurs(c.curve, c.skeleton.depth, options.spurs, go);
    } else {
        c.curve = c.skeleton.skeleton;
    }
    c.graph = build_graph(c.curve, go);
    c.graph.skeleton.set_spacing(mask.spacing());
    return c;
}

}  // namespace vesselq
