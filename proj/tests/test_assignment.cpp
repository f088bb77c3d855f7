#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tapfw/assignment.hpp"
#include "tapfw/tntp.hpp"
#include "tapfw/validate.hpp"
#include "helpers.hpp"

using namespace tapfw;

namespace {

// Loads every demand on its cheapest enumerated path; exhaustive oracle
// for the 4-node fixtures. Accumulates the LP value exactly like the
// implementation (Kahan over entries in grouped order).
AonResult brute_force_aon(const Network& net, const DemandMatrix& dm, const CostVector& t) {
    AonResult res;
    res.flow.assign(net.edge_count(), 0.0);
    KahanSum lp;
    auto groups = detail::group_by_origin(dm);
    for (const auto& g : groups) {
        for (const auto& d : g.entries) {
            auto paths = testutil::enumerate_paths(net, d.origin, d.destination);
            REQUIRE(!paths.empty());
            double best = std::numeric_limits<double>::infinity();
            const std::vector<int>* best_path = nullptr;
            for (const auto& p : paths) {
                double c = testutil::path_cost(p, t);
                if (c < best) {
                    best = c;
                    best_path = &p;
                }
            }
            for (int e : *best_path) res.flow[e] += d.demand;
            lp.add(d.demand * best);
        }
    }
    res.lp_value = lp.value();
    return res;
}

DemandMatrix make_demands(std::vector<DemandEntry> entries) {
    DemandMatrix dm;
    dm.entries = std::move(entries);
    for (const auto& e : dm.entries) dm.total_demand += e.demand;
    return dm;
}

}  // namespace

TEST_CASE("single OD on a chain") {
    Network net;
    net.node_count = 3;
    net.zone_count = 3;
    net.edges.push_back(testutil::make_edge(1, 2, 1.0, 10.0));
    net.edges.push_back(testutil::make_edge(2, 3, 2.0, 10.0));
    DemandMatrix dm = make_demands({{1, 3, 10.0}});

    AonResult res = all_or_nothing(net, dm, {1.0, 2.0});
    CHECK(res.flow == FlowVector{10.0, 10.0});
    CHECK(res.lp_value == 30.0);
}

TEST_CASE("zero demand loads nothing") {
    Network net = parse_net(testutil::read_fixture("diamond_net.tntp"));
    AonResult res = all_or_nothing(net, DemandMatrix{}, CostVector(4, 1.0));
    CHECK(res.flow == FlowVector(4, 0.0));
    CHECK(res.lp_value == 0.0);

    // self-demand is skipped, not loaded
    DemandMatrix self = make_demands({{2, 2, 5.0}});
    res = all_or_nothing(net, self, CostVector(4, 1.0));
    CHECK(res.flow == FlowVector(4, 0.0));
    CHECK(res.lp_value == 0.0);
}

TEST_CASE("diamond with two ODs equals the brute-force loading") {
    Network net = parse_net(testutil::read_fixture("diamond_net.tntp"));
    DemandMatrix dm = parse_trips(testutil::read_fixture("diamond_trips.tntp"));
    CostVector t{1.0, 1.2, 1.0, 0.8};

    AonResult got = all_or_nothing(net, dm, t);
    AonResult want = brute_force_aon(net, dm, t);
    CHECK(got.flow == want.flow);
    CHECK(got.lp_value == want.lp_value);
}

TEST_CASE("LP optimality against randomized cost vectors and loadings") {
    auto& gen = testutil::rng();
    std::uniform_real_distribution<double> cost(0.01, 5.0);
    for (const char* name : {"diamond", "braess"}) {
        Network net = parse_net(testutil::read_fixture(std::string(name) + "_net.tntp"));
        DemandMatrix dm = parse_trips(testutil::read_fixture(std::string(name) + "_trips.tntp"));

        for (int trial = 0; trial < 200; ++trial) {
            CostVector t(net.edge_count());
            for (auto& c : t) c = cost(gen);

            AonResult got = all_or_nothing(net, dm, t);
            AonResult want = brute_force_aon(net, dm, t);
            REQUIRE(got.lp_value == want.lp_value);

            // any feasible loading built from arbitrary valid paths costs at least as much
            KahanSum other;
            for (const auto& d : dm.entries) {
                auto paths = testutil::enumerate_paths(net, d.origin, d.destination);
                std::uniform_int_distribution<std::size_t> pick(0, paths.size() - 1);
                other.add(d.demand * testutil::path_cost(paths[pick(gen)], t));
            }
            REQUIRE(got.lp_value <= other.value() + 1e-12 * std::abs(other.value()));
        }
    }
}

TEST_CASE("conservation holds at every node") {
    Network net = parse_net(testutil::read_fixture("SiouxFalls_net.tntp"));
    DemandMatrix dm = parse_trips(testutil::read_fixture("SiouxFalls_trips.tntp"));
    CostVector t(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) t[e] = net.edges[e].free_flow_time;

    AonResult res = all_or_nothing(net, dm, t);
    CHECK(node_balance_residual(net, dm, res.flow) <= 1e-9 * dm.total_demand);
}

TEST_CASE("assignment is linear in the demand matrix") {
    Network net = parse_net(testutil::read_fixture("braess_net.tntp"));
    auto& gen = testutil::rng();
    std::uniform_int_distribution<int> zone(1, 4);
    std::uniform_int_distribution<int> volume(0, 9);
    std::uniform_real_distribution<double> cost(0.01, 5.0);

    for (int trial = 0; trial < 100; ++trial) {
        std::vector<DemandEntry> e1, e2, merged;
        for (int i = 0; i < 4; ++i) {
            // keep endpoints reachable: origins in {1,2}, destinations in {3,4}
            DemandEntry a{zone(gen) <= 2 ? 1 : 2, zone(gen) <= 2 ? 3 : 4, double(volume(gen))};
            DemandEntry b{zone(gen) <= 2 ? 1 : 2, zone(gen) <= 2 ? 3 : 4, double(volume(gen))};
            e1.push_back(a);
            e2.push_back(b);
            merged.push_back(a);
            merged.push_back(b);
        }
        CostVector t(net.edge_count());
        for (auto& c : t) c = cost(gen);

        AonResult r1 = all_or_nothing(net, make_demands(e1), t);
        AonResult r2 = all_or_nothing(net, make_demands(e2), t);
        AonResult rm = all_or_nothing(net, make_demands(merged), t);
        for (int e = 0; e < net.edge_count(); ++e)
            REQUIRE(rm.flow[e] == r1.flow[e] + r2.flow[e]);  // integer demands: exact
    }
}

TEST_CASE("both dual values agree") {
    Network net = parse_net(testutil::read_fixture("SiouxFalls_net.tntp"));
    DemandMatrix dm = parse_trips(testutil::read_fixture("SiouxFalls_trips.tntp"));
    auto& gen = testutil::rng();
    std::uniform_real_distribution<double> cost(0.5, 10.0);

    for (int trial = 0; trial < 20; ++trial) {
        CostVector t(net.edge_count());
        for (auto& c : t) c = cost(gen);
        AonResult res = all_or_nothing(net, dm, t);
        double direct = dot(t, res.flow);  // <t, s>
        REQUIRE(std::abs(direct - res.lp_value) <= 1e-9 * std::abs(direct));
    }
}

TEST_CASE("unreachable positive demand is fatal and names the pair") {
    Network net;
    net.node_count = 3;
    net.zone_count = 3;
    net.edges.push_back(testutil::make_edge(1, 2, 1.0, 10.0));  // node 3 isolated
    DemandMatrix dm = make_demands({{1, 3, 5.0}});

    try {
        all_or_nothing(net, dm, {1.0});
        FAIL("expected UnreachableDemandError");
    } catch (const UnreachableDemandError& e) {
        CHECK(e.origin() == 1);
        CHECK(e.destination() == 3);
    }
}

TEST_CASE("multi-threaded assignment is deterministic and matches sequential") {
    Network net = parse_net(testutil::read_fixture("SiouxFalls_net.tntp"));
    DemandMatrix dm = parse_trips(testutil::read_fixture("SiouxFalls_trips.tntp"));
    CostVector t(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) t[e] = net.edges[e].free_flow_time;

    AonResult seq = all_or_nothing(net, dm, t, 1);
    AonResult par_a = all_or_nothing(net, dm, t, 2);
    AonResult par_b = all_or_nothing(net, dm, t, 2);
    CHECK(par_a.flow == par_b.flow);  // bitwise reproducible at fixed thread count
    CHECK(par_a.lp_value == par_b.lp_value);

    for (int e = 0; e < net.edge_count(); ++e)
        CHECK(std::abs(par_a.flow[e] - seq.flow[e]) <= 1e-9 * std::max(1.0, seq.flow[e]));
    CHECK(std::abs(par_a.lp_value - seq.lp_value) <= 1e-9 * std::abs(seq.lp_value));
}

TEST_CASE("validate reports reachability and self-demand") {
    SECTION("connected fixture gives an empty report") {
        Network net = parse_net(testutil::read_fixture("SiouxFalls_net.tntp"));
        DemandMatrix dm = parse_trips(testutil::read_fixture("SiouxFalls_trips.tntp"));
        ValidationReport report = validate(net, dm);
        CHECK(report.unreachable.empty());
        CHECK(report.errors.empty());
        CHECK_FALSE(report.fatal());
    }
    SECTION("isolated destination zone is named") {
        Network net;
        net.node_count = 3;
        net.zone_count = 3;
        net.edges.push_back(testutil::make_edge(1, 2, 1.0, 10.0));
        DemandMatrix dm = make_demands({{1, 3, 5.0}});
        ValidationReport report = validate(net, dm);
        REQUIRE(report.unreachable.size() == 1);
        CHECK(report.unreachable[0].origin == 1);
        CHECK(report.unreachable[0].destination == 3);
        CHECK(report.fatal());
    }
    SECTION("self-demand is flagged but not fatal") {
        Network net;
        net.node_count = 2;
        net.zone_count = 2;
        net.edges.push_back(testutil::make_edge(1, 2, 1.0, 10.0));
        DemandMatrix dm = make_demands({{1, 1, 5.0}, {1, 2, 1.0}});
        ValidationReport report = validate(net, dm);
        REQUIRE(report.skipped_self_demand.size() == 1);
        CHECK(report.skipped_self_demand[0].origin == 1);
        CHECK_FALSE(report.fatal());
    }
    SECTION("zone outside the network is fatal") {
        Network net;
        net.node_count = 2;
        net.zone_count = 2;
        net.edges.push_back(testutil::make_edge(1, 2, 1.0, 10.0));
        DemandMatrix dm = make_demands({{1, 2, 1.0}});
        dm.entries.push_back({9999, 2, 1.0});
        ValidationReport report = validate(net, dm);
        REQUIRE(report.errors.size() == 1);
        CHECK(report.errors[0].find("9999") != std::string::npos);
        CHECK(report.fatal());
    }
}
