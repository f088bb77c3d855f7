#pragma once

#include <vector>

namespace tapfw {

using NodeId = int;     // 1-based, as in TNTP files
using EdgeIndex = int;  // 0-based position in Network::edges (file order)

constexpr EdgeIndex kNoEdge = -1;

// One directed road link with its BPR delay parameters
//   tau(f) = free_flow_time * (1 + bpr_coeff * (f / capacity)^bpr_power).
// The trailing TNTP columns (length, speed, toll, link_type) are kept for
// round-tripping but take no part in the cost model.
struct Edge {
    NodeId tail = 0;
    NodeId head = 0;
    double free_flow_time = 0.0;
    double capacity = 0.0;
    double bpr_coeff = 0.0;
    double bpr_power = 0.0;

    double length = 0.0;
    double speed = 0.0;
    double toll = 0.0;
    double link_type = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Directed road graph. Zones are nodes 1..zone_count; nodes below
// first_thru_node may start and end trips but may not be traversed.
// The edge order is exactly file order and is the canonical coordinate
// for every edge-indexed vector in the library.
struct Network {
    int node_count = 0;
    int zone_count = 0;
    int first_thru_node = 1;
    std::vector<Edge> edges;

    int edge_count() const noexcept { return static_cast<int>(edges.size()); }

    friend bool operator==(const Network&, const Network&) = default;
};

struct DemandEntry {
    NodeId origin = 0;
    NodeId destination = 0;
    double demand = 0.0;

    friend bool operator==(const DemandEntry&, const DemandEntry&) = default;
};

// Origin-destination correspondences. Entries keep file order; totals are
// the arithmetic sum of the entries, never the declared header value.
struct DemandMatrix {
    std::vector<DemandEntry> entries;
    double total_demand = 0.0;
    int zone_count = 0;

    friend bool operator==(const DemandMatrix&, const DemandMatrix&) = default;
};

// Edge-indexed reals, length = edge count. Feasible flows are entrywise
// nonnegative; direction vectors share the coordinate type and may not be.
using FlowVector = std::vector<double>;
using CostVector = std::vector<double>;

}  // namespace tapfw
