#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tapfw/network.hpp"
#include "tapfw/numeric.hpp"

namespace tapfw {

namespace detail {

// Floor for the Hessian evaluation point: powers below 1 make tau'
// unbounded at zero flow, which would blow up the conjugacy formulas.
// Standard TNTP powers are >= 1, so the clamp is dormant there.
constexpr double kHessianFlowFloor = 1e-10;

inline void require_flow_shape(const Network& net, const FlowVector& f, const char* op) {
    if (static_cast<int>(f.size()) != net.edge_count())
        throw std::invalid_argument(std::string(op) + ": flow vector has " +
                                    std::to_string(f.size()) + " entries, network has " +
                                    std::to_string(net.edge_count()) + " edges");
}

inline void require_nonnegative(const FlowVector& f, const char* op) {
    for (std::size_t e = 0; e < f.size(); ++e)
        if (!(f[e] >= 0.0))
            throw std::domain_error(std::string(op) + ": negative or NaN flow " +
                                    std::to_string(f[e]) + " on edge " + std::to_string(e));
}

}  // namespace detail

// BPR travel time on one edge: tau(f) = t0 * (1 + rho * (f / cap)^p).
// (f/cap)^0 == 1 by convention, so p = 0 yields the constant t0 * (1 + rho).
inline double bpr_time(const Edge& e, double flow) {
    return e.free_flow_time * (1.0 + e.bpr_coeff * std::pow(flow / e.capacity, e.bpr_power));
}

// Antiderivative of bpr_time from 0 to `flow`:
//   t0*f + t0*rho*cap/(p+1) * (f/cap)^(p+1).
inline double bpr_integral(const Edge& e, double flow) {
    double ratio = flow / e.capacity;
    return e.free_flow_time * flow +
           e.free_flow_time * e.bpr_coeff * e.capacity / (e.bpr_power + 1.0) *
               std::pow(ratio, e.bpr_power + 1.0);
}

// tau'(f) = t0 * rho * p * f^(p-1) / cap^p, the diagonal Hessian entry.
inline double bpr_derivative(const Edge& e, double flow) {
    if (e.bpr_coeff == 0.0 || e.bpr_power == 0.0) return 0.0;
    if (flow < detail::kHessianFlowFloor && e.bpr_power < 1.0) flow = detail::kHessianFlowFloor;
    return e.free_flow_time * e.bpr_coeff * e.bpr_power / e.capacity *
           std::pow(flow / e.capacity, e.bpr_power - 1.0);
}

// Link travel times tau(f); this is also the gradient of the potential.
inline CostVector edge_costs(const Network& net, const FlowVector& f) {
    detail::require_flow_shape(net, f, "edge_costs");
    detail::require_nonnegative(f, "edge_costs");
    CostVector t(f.size());
    for (std::size_t e = 0; e < f.size(); ++e) t[e] = bpr_time(net.edges[e], f[e]);
    return t;
}

// Beckmann potential Psi(f) = sum_e integral_0^{f_e} tau_e(z) dz.
inline double potential(const Network& net, const FlowVector& f) {
    detail::require_flow_shape(net, f, "potential");
    detail::require_nonnegative(f, "potential");
    KahanSum s;
    for (std::size_t e = 0; e < f.size(); ++e) s.add(bpr_integral(net.edges[e], f[e]));
    return s.value();
}

// Diagonal of the Hessian of Psi; off-diagonal terms vanish because the
// potential is separable across edges.
inline std::vector<double> hessian_diag(const Network& net, const FlowVector& f) {
    detail::require_flow_shape(net, f, "hessian_diag");
    detail::require_nonnegative(f, "hessian_diag");
    std::vector<double> h(f.size());
    for (std::size_t e = 0; e < f.size(); ++e) h[e] = bpr_derivative(net.edges[e], f[e]);
    return h;
}

// sum_e h_e * a_e * b_e, i.e. <a, H b> for the diagonal Hessian.
inline double hessian_quadratic_form(std::span<const double> h, std::span<const double> a,
                                     std::span<const double> b) {
    if (h.size() != a.size() || h.size() != b.size())
        throw std::invalid_argument("hessian_quadratic_form: length mismatch");
    KahanSum s;
    for (std::size_t e = 0; e < h.size(); ++e) s.add(h[e] * a[e] * b[e]);
    return s.value();
}

}  // namespace tapfw
