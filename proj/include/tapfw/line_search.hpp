#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapfw/cost.hpp"
#include "tapfw/network.hpp"
#include "tapfw/numeric.hpp"

namespace tapfw {

// Default relative reduction of |phi'| that ends the search.
constexpr double kLineSearchTol = 1e-10;
// Bracket width below which bisection stops regardless of the derivative.
constexpr double kLineSearchBracketFloor = 1e-12;

struct LineSearchResult {
    double gamma = 0.0;
    int iterations = 0;  // bisection steps taken
};

// Bisection on a nondecreasing derivative over [0, 1]. `dphi(g)` must be
// the derivative of a convex function; the bracket [lo, hi] always keeps
// dphi(lo) < 0 < dphi(hi) and halves each step, so the floor is reached in
// ceil(log2(1/floor)) iterations. On the floor exit the lo side is
// returned, which keeps the result a guaranteed descent point.
template <typename DPhi>
LineSearchResult bisect_derivative(DPhi&& dphi, double tol,
                                   double bracket_floor = kLineSearchBracketFloor) {
    if (!(tol > 0.0)) throw std::invalid_argument("line_search: tol must be > 0");

    LineSearchResult res;
    double d0 = dphi(0.0);
    if (std::isnan(d0)) throw std::domain_error("line_search: derivative is NaN at 0");
    if (d0 >= 0.0) return res;  // gamma = 0
    double d1 = dphi(1.0);
    if (std::isnan(d1)) throw std::domain_error("line_search: derivative is NaN at 1");
    if (d1 <= 0.0) {
        res.gamma = 1.0;
        return res;
    }

    double lo = 0.0, hi = 1.0;
    double threshold = tol * std::abs(d0);
    while (hi - lo > bracket_floor) {
        double mid = 0.5 * (lo + hi);
        double dm = dphi(mid);
        ++res.iterations;
        if (std::isnan(dm)) throw std::domain_error("line_search: derivative is NaN");
        if (std::abs(dm) <= threshold) {
            res.gamma = mid;
            return res;
        }
        if (dm < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    res.gamma = lo;
    return res;
}

// f + gamma * d with tiny negative entries (floating-point cancellation
// along a feasible segment) snapped to 0. Entries below -neg_tol are a
// broken precondition, not noise.
inline FlowVector point_on_segment(const FlowVector& f, const FlowVector& d, double gamma,
                                   double neg_tol) {
    FlowVector y(f.size());
    for (std::size_t e = 0; e < f.size(); ++e) {
        double v = f[e] + gamma * d[e];
        if (v < 0.0) {
            if (v < -neg_tol)
                throw std::domain_error("infeasible segment: flow " + std::to_string(v) +
                                        " on edge " + std::to_string(e) + " at gamma " +
                                        std::to_string(gamma));
            v = 0.0;
        }
        y[e] = v;
    }
    return y;
}

// Exact minimization of gamma -> Psi(f + gamma d) over [0, 1] by bisecting
// the sign of phi'(gamma) = <tau(f + gamma d), d>, which is nondecreasing
// because every tau_e is. Returns gamma with |phi'| <= tol * |phi'(0)|, or
// a boundary value when the derivative sign already forces it.
inline double line_search(const Network& net, const FlowVector& f, const FlowVector& d,
                          double tol = kLineSearchTol) {
    if (!(tol > 0.0)) throw std::invalid_argument("line_search: tol must be > 0");
    if (f.size() != d.size()) throw std::invalid_argument("line_search: length mismatch");
    if (has_nan(f) || has_nan(d)) throw std::domain_error("line_search: NaN in inputs");

    double neg_tol = 1e-12 * max_abs(f);
    auto dphi = [&](double gamma) {
        FlowVector y = point_on_segment(f, d, gamma, neg_tol);
        CostVector t = edge_costs(net, y);
        return dot(t, d);
    };
    return bisect_derivative(dphi, tol).gamma;
}

}  // namespace tapfw
