#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapfw/network.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& name) {
    return std::string(TAPFW_TEST_DATA) + "/" + name;
}

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing test fixture " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline tapfw::Edge make_edge(int tail, int head, double fft, double cap, double rho = 0.15,
                             double power = 4.0) {
    tapfw::Edge e;
    e.tail = tail;
    e.head = head;
    e.free_flow_time = fft;
    e.capacity = cap;
    e.bpr_coeff = rho;
    e.bpr_power = power;
    return e;
}

// All simple paths from `origin` to `dest` as edge-index sequences,
// honoring the endpoint-only rule for nodes below first_thru_node.
// Exhaustive DFS; for the 4-node fixtures only.
inline std::vector<std::vector<int>> enumerate_paths(const tapfw::Network& net, int origin,
                                                     int dest) {
    std::vector<std::vector<int>> out_edges(net.node_count + 1);
    for (int e = 0; e < net.edge_count(); ++e) out_edges[net.edges[e].tail].push_back(e);

    std::vector<std::vector<int>> paths;
    std::vector<int> stack;
    std::vector<bool> visited(net.node_count + 1, false);

    auto dfs = [&](auto&& self, int v) -> void {
        if (v == dest) {
            paths.push_back(stack);
            return;
        }
        if (v != origin && v < net.first_thru_node) return;  // endpoint-only node
        visited[v] = true;
        for (int e : out_edges[v]) {
            int w = net.edges[e].head;
            if (visited[w]) continue;
            stack.push_back(e);
            self(self, w);
            stack.pop_back();
        }
        visited[v] = false;
    };
    dfs(dfs, origin);
    return paths;
}

// Left-associated path cost, matching the order in which a label-setting
// tree accumulates it.
inline double path_cost(const std::vector<int>& path, const tapfw::CostVector& t) {
    double c = 0.0;
    for (int e : path) c += t[e];
    return c;
}

inline std::mt19937& rng() {
    static std::mt19937 gen(20240811u);
    return gen;
}

}  // namespace testutil
