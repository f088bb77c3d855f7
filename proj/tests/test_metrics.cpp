#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tapfw/assignment.hpp"
#include "tapfw/cost.hpp"
#include "tapfw/metrics.hpp"
#include "tapfw/tntp.hpp"
#include "helpers.hpp"

using namespace tapfw;

TEST_CASE("fw_gap is the difference of the two inner products") {
    CHECK(fw_gap(100.0, 90.0) == 10.0);
    CHECK(fw_gap(50.0, 50.0) == 0.0);  // f == s at equilibrium
    // raw value may round below zero; records clamp it
    CHECK(fw_gap(1.0, 1.0 + 1e-12) < 0.0);
}

TEST_CASE("fw_gap equals the brute-force maximum over feasible points") {
    // g = <tau, f - s> with s the LP minimizer equals max over feasible y
    // of <tau, f - y> because the objective is linear over the polytope.
    Network net = parse_net(testutil::read_fixture("braess_net.tntp"));
    DemandMatrix dm = parse_trips(testutil::read_fixture("braess_trips.tntp"));
    auto& gen = testutil::rng();
    std::uniform_real_distribution<double> u(0.1, 4.0);

    for (int trial = 0; trial < 50; ++trial) {
        FlowVector f(net.edge_count());
        for (auto& x : f) x = u(gen);
        CostVector tau = edge_costs(net, f);
        double grad_dot_f = dot(tau, f);

        AonResult aon = all_or_nothing(net, dm, tau);
        double g = fw_gap(grad_dot_f, aon.lp_value);

        // enumerate every per-OD path choice: the best is the LP minimum
        REQUIRE(dm.entries.size() == 2);
        double best = std::numeric_limits<double>::infinity();
        auto paths1 = testutil::enumerate_paths(net, dm.entries[0].origin, dm.entries[0].destination);
        auto paths2 = testutil::enumerate_paths(net, dm.entries[1].origin, dm.entries[1].destination);
        for (const auto& p1 : paths1)
            for (const auto& p2 : paths2)
                best = std::min(best, dm.entries[0].demand * testutil::path_cost(p1, tau) +
                                          dm.entries[1].demand * testutil::path_cost(p2, tau));
        REQUIRE(std::abs(g - (grad_dot_f - best)) <= 1e-9 * std::abs(grad_dot_f));
    }
}

TEST_CASE("lower_bound and best lower bound") {
    CHECK(lower_bound(103.0, 3.0) == 100.0);
    CHECK(lower_bound(103.0, 0.0) == 103.0);

    CHECK(update_best_lower_bound(100.0, 99.0) == 100.0);
    CHECK(update_best_lower_bound(kNoLowerBound, 100.0) == 100.0);

    SECTION("accumulator is nondecreasing over any sequence") {
        auto& gen = testutil::rng();
        std::uniform_real_distribution<double> u(-50.0, 50.0);
        double blb = kNoLowerBound;
        for (int i = 0; i < 100; ++i) {
            double next = update_best_lower_bound(blb, u(gen));
            REQUIRE(next >= blb);
            blb = next;
        }
    }
}

TEST_CASE("relative_gap") {
    CHECK(relative_gap(1.0, 1.0) == 0.0);
    CHECK_THAT(relative_gap(1.1, 1.0), Catch::Matchers::WithinRel(0.1, 1e-12));

    SECTION("nonpositive BLB yields the NaN sentinel") {
        CHECK(std::isnan(relative_gap(1.0, 0.0)));
        CHECK(std::isnan(relative_gap(1.0, -5.0)));
        CHECK(std::isnan(relative_gap(1.0, kNoLowerBound)));
    }
}
