#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vesselq/morphology.hpp"
#include "vesselq/volume.hpp"

namespace vesselq {

enum class NodeKind { isolated, endpoint, connector, branch };

struct GraphNode {
    Voxel position;              ///< representative voxel (cluster voxel nearest the centroid)
    std::vector<Voxel> members;  ///< skeleton voxels collapsed into this node, sorted
    int degree = 0;              ///< number of incident edge ends
    NodeKind kind = NodeKind::isolated;
};

struct GraphEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    /// Ordered voxel path from nodes[from].position to nodes[to].position;
    /// consecutive points are 26-adjacent.
    std::vector<Voxel> points;
    bool closed = false;  ///< simple cycle without branch nodes
};

struct SkeletonGraph {
    Dims dims;
    Spacing spacing;
    Mask skeleton;  ///< the voxel set the graph was built from, including bridge voxels
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    std::size_t count(NodeKind kind) const;
};

struct GraphOptions {
    /// Join endpoint pairs of different components separated by a single
    /// missing voxel (Chebyshev distance 2) with a synthetic voxel.
    bool bridge_gaps = true;
    /// Mutually adjacent degree >= 3 voxels become one branch node.
    bool collapse_clusters = true;
    /// Branch nodes joined by an edge with at most this many interior voxels
    /// are merged. With `depth` set, the limit per edge is the larger depth of
    /// its two branch voxels instead.
    int junction_merge_length = 0;
    const LabelVolume* depth = nullptr;
};

/// Number of 26-neighbours of each skeleton voxel (0 on background).
LabelVolume skeleton_degrees(const Mask& skeleton);

SkeletonGraph build_graph(const Mask& skeleton, const GraphOptions& options = {});

struct SpurOptions {
    double depth_factor = 1.0;  ///< spur limit = depth_factor * depth(branch) + margin
    int margin = 2;
};

/// Repeatedly deletes terminal edges (endpoint to branch node) no longer than
/// the depth-scaled limit, keeping the branch voxels themselves. Each pass is
/// followed by thinning so leftover branch voxels do not form a bump.
Mask prune_spurs(const Mask& skeleton, const LabelVolume& depth, const SpurOptions& options = {},
                 const GraphOptions& graph_options = {});

struct ArterySegment {
    int id = 0;
    std::vector<Voxel> points;  ///< proximal first once oriented

    std::size_t length_voxels() const noexcept { return points.size(); }
    Voxel front() const { return points.front(); }
    Voxel back() const { return points.back(); }
};

std::vector<ArterySegment> separate_segments(const SkeletonGraph& graph);

/// Picks the proximal end. With `root`, the endpoint nearer to it in
/// millimetres; otherwise the endpoint whose first five areas have the larger
/// mean (`areas` index-aligned with points). Ties go to the lexicographically
/// smaller endpoint.
ArterySegment orient_segment(const ArterySegment& segment, const Spacing& spacing,
                             std::optional<Voxel> root = std::nullopt,
                             std::span<const double> areas = {});

std::vector<ArterySegment> prune_short(std::vector<ArterySegment> segments, int min_len = 20);

enum class CenterlineMode {
    thinned,        ///< depth-ordered thinning of the mask, spur pruning, junction merge
    morphological,  ///< graph built directly on the morphological skeleton
};

struct CenterlineOptions {
    StructuringElement se = StructuringElement::cross3d();
    CenterlineMode mode = CenterlineMode::thinned;
    bool bridge_gaps = true;
    bool collapse_clusters = true;
    SpurOptions spurs{};
};

struct Centerline {
    SkeletonResult skeleton;
    Mask curve;  ///< voxel set the graph is built on
    SkeletonGraph graph;
};

Centerline extract_centerline(const Mask& mask, const CenterlineOptions& options = {});

}  // namespace vesselq
