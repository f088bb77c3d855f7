#pragma once

#include <map>
#include <string>
#include <vector>

#include "tapfw/cost.hpp"
#include "tapfw/network.hpp"
#include "tapfw/shortest_path.hpp"

namespace tapfw {

struct DemandPairIssue {
    NodeId origin = 0;
    NodeId destination = 0;
    double demand = 0.0;
};

// Outcome of cross-checking a parsed network against a parsed demand
// matrix. Unreachable positive-demand pairs and out-of-range zones are
// fatal (the linear subproblem would be infeasible); skipped self-demands
// are informational only.
struct ValidationReport {
    std::vector<DemandPairIssue> unreachable;
    std::vector<DemandPairIssue> skipped_self_demand;
    std::vector<std::string> errors;  // zone range violations and the like

    bool fatal() const { return !unreachable.empty() || !errors.empty(); }
};

// Confirms every positive demand can be routed under free-flow costs,
// running one shortest-path tree per distinct origin.
inline ValidationReport validate(const Network& net, const DemandMatrix& dm) {
    ValidationReport report;

    std::map<NodeId, std::vector<const DemandEntry*>> by_origin;
    for (const DemandEntry& d : dm.entries) {
        if (d.demand <= 0.0) continue;
        if (d.origin == d.destination) {
            report.skipped_self_demand.push_back({d.origin, d.destination, d.demand});
            continue;
        }
        bool in_range = true;
        if (d.origin < 1 || d.origin > net.zone_count) {
            report.errors.push_back("origin zone " + std::to_string(d.origin) +
                                    " outside the network's zones [1, " +
                                    std::to_string(net.zone_count) + "]");
            in_range = false;
        }
        if (d.destination < 1 || d.destination > net.zone_count) {
            report.errors.push_back("destination zone " + std::to_string(d.destination) +
                                    " outside the network's zones [1, " +
                                    std::to_string(net.zone_count) + "]");
            in_range = false;
        }
        if (in_range) by_origin[d.origin].push_back(&d);
    }

    if (by_origin.empty()) return report;

    CostVector free_flow = edge_costs(net, FlowVector(net.edge_count(), 0.0));
    AdjacencyIndex adj = AdjacencyIndex::build(net);
    for (const auto& [origin, entries] : by_origin) {
        ShortestPathTree tree = shortest_path_tree(net, free_flow, origin, adj);
        for (const DemandEntry* d : entries)
            if (!tree.reachable(d->destination))
                report.unreachable.push_back({d->origin, d->destination, d->demand});
    }
    return report;
}

}  // namespace tapfw
