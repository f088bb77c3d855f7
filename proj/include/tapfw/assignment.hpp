#pragma once

#include <algorithm>
#include <map>
#include <thread>
#include <vector>

#include "tapfw/errors.hpp"
#include "tapfw/network.hpp"
#include "tapfw/numeric.hpp"
#include "tapfw/shortest_path.hpp"

namespace tapfw {

struct AonResult {
    FlowVector flow;       // all-or-nothing loading s
    double lp_value = 0.0; // <t, s> accumulated as sum of demand * dist
};

namespace detail {

// Demands grouped per origin (ascending), entry order preserved inside a
// group. Self-demands are dropped here: they never touch the network.
struct OriginGroup {
    NodeId origin;
    std::vector<DemandEntry> entries;
};

inline std::vector<OriginGroup> group_by_origin(const DemandMatrix& dm) {
    std::map<NodeId, std::vector<DemandEntry>> groups;
    for (const DemandEntry& d : dm.entries) {
        if (d.demand <= 0.0 || d.origin == d.destination) continue;
        groups[d.origin].push_back(d);
    }
    std::vector<OriginGroup> out;
    out.reserve(groups.size());
    for (auto& [origin, entries] : groups) out.push_back({origin, std::move(entries)});
    return out;
}

inline void load_origin(const Network& net, const CostVector& t, const AdjacencyIndex& adj,
                        const OriginGroup& group, FlowVector& flow, KahanSum& lp) {
    ShortestPathTree tree = shortest_path_tree(net, t, group.origin, adj);
    for (const DemandEntry& d : group.entries) {
        if (!tree.reachable(d.destination))
            throw UnreachableDemandError(d.origin, d.destination);
        lp.add(d.demand * tree.dist[d.destination]);
        for (NodeId v = d.destination; v != group.origin;) {
            EdgeIndex e = tree.pred_edge[v];
            flow[e] += d.demand;
            v = net.edges[e].tail;
        }
    }
}

}  // namespace detail

// Solves the linear subproblem min <t, s> over the feasible set: one
// shortest-path tree per distinct origin, each demand loaded onto its tree
// path. With threads > 1 the origins are split into contiguous chunks and
// the partial flows are merged in fixed chunk order, so results are
// reproducible for a given thread count.
inline AonResult all_or_nothing(const Network& net, const DemandMatrix& dm, const CostVector& t,
                                int threads = 1) {
    AonResult result;
    result.flow.assign(net.edge_count(), 0.0);

    auto groups = detail::group_by_origin(dm);
    if (groups.empty()) return result;
    AdjacencyIndex adj = AdjacencyIndex::build(net);

    if (threads <= 1 || groups.size() == 1) {
        KahanSum lp;
        for (const auto& g : groups) detail::load_origin(net, t, adj, g, result.flow, lp);
        result.lp_value = lp.value();
        return result;
    }

    int n_chunks = std::min<int>(threads, static_cast<int>(groups.size()));
    std::vector<FlowVector> chunk_flow(n_chunks, FlowVector(net.edge_count(), 0.0));
    std::vector<KahanSum> chunk_lp(n_chunks);
    std::vector<std::exception_ptr> chunk_error(n_chunks);

    std::vector<std::thread> workers;
    workers.reserve(n_chunks);
    std::size_t per = (groups.size() + n_chunks - 1) / n_chunks;
    for (int c = 0; c < n_chunks; ++c) {
        std::size_t begin = c * per;
        std::size_t end = std::min(groups.size(), begin + per);
        workers.emplace_back([&, c, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i)
                    detail::load_origin(net, t, adj, groups[i], chunk_flow[c], chunk_lp[c]);
            } catch (...) {
                chunk_error[c] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& err : chunk_error)
        if (err) std::rethrow_exception(err);

    KahanSum lp;
    for (int c = 0; c < n_chunks; ++c) {
        lp.add(chunk_lp[c].value());
        for (int e = 0; e < net.edge_count(); ++e) result.flow[e] += chunk_flow[c][e];
    }
    result.lp_value = lp.value();
    return result;
}

// Max over nodes of |(outflow - inflow) - (demand out - demand in)|.
// Feasible flows keep this below ~1e-9 * total demand.
inline double node_balance_residual(const Network& net, const DemandMatrix& dm,
                                    const FlowVector& f) {
    std::vector<KahanSum> net_out(net.node_count + 1);
    for (int e = 0; e < net.edge_count(); ++e) {
        net_out[net.edges[e].tail].add(f[e]);
        net_out[net.edges[e].head].add(-f[e]);
    }
    for (const DemandEntry& d : dm.entries) {
        if (d.demand <= 0.0 || d.origin == d.destination) continue;
        net_out[d.origin].add(-d.demand);
        net_out[d.destination].add(d.demand);
    }
    double worst = 0.0;
    for (NodeId v = 1; v <= net.node_count; ++v)
        worst = std::max(worst, std::abs(net_out[v].value()));
    return worst;
}

}  // namespace tapfw
