#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tapfw/network.hpp"

namespace tapfw {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// CSR over out-edges, built once and shared across origins. Edge lists per
// node keep ascending edge index, which the tie-break below relies on.
struct AdjacencyIndex {
    std::vector<int> offsets;      // per node (1-based), edges of v in [offsets[v], offsets[v+1])
    std::vector<EdgeIndex> edges;  // concatenated out-edge indices

    static AdjacencyIndex build(const Network& net) {
        AdjacencyIndex idx;
        idx.offsets.assign(net.node_count + 2, 0);
        for (const Edge& e : net.edges) ++idx.offsets[e.tail + 1];
        for (std::size_t v = 1; v < idx.offsets.size(); ++v) idx.offsets[v] += idx.offsets[v - 1];
        idx.edges.resize(net.edges.size());
        std::vector<int> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
        for (EdgeIndex e = 0; e < net.edge_count(); ++e)
            idx.edges[cursor[net.edges[e].tail]++] = e;
        return idx;
    }
};

// One-to-all shortest paths from `origin`. dist uses kUnreachable as the
// explicit marker for unreached nodes (never a large finite number);
// pred_edge holds the entry edge of each reached node, kNoEdge otherwise.
struct ShortestPathTree {
    NodeId origin = 0;
    std::vector<double> dist;  // indexed by node id, entry 0 unused
    std::vector<EdgeIndex> pred_edge;

    bool reachable(NodeId v) const { return dist[v] != kUnreachable; }
};

// Label-setting (binary heap) shortest-path tree over nonnegative costs.
// Nodes below first_thru_node act as trip endpoints only: unless they are
// the origin, their out-edges are never relaxed. Among equal-cost paths the
// predecessor with the smallest edge index wins, so trees (and therefore
// convergence traces) are reproducible across runs.
inline ShortestPathTree shortest_path_tree(const Network& net, const CostVector& t, NodeId origin,
                                           const AdjacencyIndex& adj) {
    if (static_cast<int>(t.size()) != net.edge_count())
        throw std::invalid_argument("shortest_path_tree: cost vector length mismatch");
    for (std::size_t e = 0; e < t.size(); ++e)
        if (!(t[e] >= 0.0))
            throw std::domain_error("shortest_path_tree: negative or NaN cost on edge " +
                                    std::to_string(e));
    if (origin < 1 || origin > net.node_count)
        throw std::invalid_argument("shortest_path_tree: origin " + std::to_string(origin) +
                                    " out of range");

    ShortestPathTree tree;
    tree.origin = origin;
    tree.dist.assign(net.node_count + 1, kUnreachable);
    tree.pred_edge.assign(net.node_count + 1, kNoEdge);
    tree.dist[origin] = 0.0;

    using Item = std::pair<double, NodeId>;  // node id breaks heap ties deterministically
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.emplace(0.0, origin);

    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (du != tree.dist[u]) continue;                      // stale entry
        if (u != origin && u < net.first_thru_node) continue;  // endpoint-only node

        for (int i = adj.offsets[u]; i < adj.offsets[u + 1]; ++i) {
            EdgeIndex e = adj.edges[i];
            NodeId v = net.edges[e].head;
            double dv = du + t[e];
            if (dv < tree.dist[v]) {
                tree.dist[v] = dv;
                tree.pred_edge[v] = e;
                heap.emplace(dv, v);
            } else if (dv == tree.dist[v] &&
                       (tree.pred_edge[v] == kNoEdge || e < tree.pred_edge[v])) {
                tree.pred_edge[v] = e;
            }
        }
    }
    return tree;
}

inline ShortestPathTree shortest_path_tree(const Network& net, const CostVector& t, NodeId origin) {
    return shortest_path_tree(net, t, origin, AdjacencyIndex::build(net));
}

}  // namespace tapfw
