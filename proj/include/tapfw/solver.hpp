#pragma once

#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tapfw/assignment.hpp"
#include "tapfw/cost.hpp"
#include "tapfw/line_search.hpp"
#include "tapfw/metrics.hpp"
#include "tapfw/network.hpp"
#include "tapfw/numeric.hpp"

namespace tapfw {

enum class Algorithm { fw, cfw, ffw, wffw, nfw };

// The 2/(k+1) rule (clamped to 1) is the paper's alternative for plain FW;
// every other algorithm always line-searches.
enum class StepPolicy { exact_linesearch, harmonic };

// The conjugacy weight of the combined target reads, in the source listing,
//   alpha = (x*-f^k)' H (s^k-f^k) / (x*-f^k)' H (s^k - f^{k-1})
// with the previous *flow* in the denominator. stored_previous_flow keeps
// that literal form; previous_target replaces f^{k-1} with the previous
// combined target x*, which is the reading consistent with making the new
// direction conjugate to the old one. Both coincide on the first step.
enum class CfwDenominator { stored_previous_flow, previous_target };

enum class TerminationReason { rgap_tol, max_iter, time_budget };

struct SolverConfig {
    Algorithm algorithm = Algorithm::fw;
    int n_conjugate = 3;             // NFW: number of conjugate directions N
    double gamma_max = 0.99;         // NFW: history reset threshold (strict >)
    double smoothing_weight = 0.15;  // WFFW: W in (0, 1]
    int ffw_memory = 3;              // FFW: l
    double cfw_alpha_cap = 0.99;     // CFW: alpha projected to [0, cap]
    CfwDenominator cfw_denominator = CfwDenominator::stored_previous_flow;
    StepPolicy step_policy = StepPolicy::exact_linesearch;
    long max_iter = 100000;
    double time_budget_sec = std::numeric_limits<double>::infinity();
    double rgap_tol = 1e-6;  // +inf disables the gap rule
    double linesearch_tol = kLineSearchTol;
};

struct DirectionRecord {
    FlowVector direction;
    double gamma = 0.0;
};

struct SolverState {
    long k = 0;
    FlowVector flow;

    // NFW: previous directions with their step sizes, oldest first.
    // history.size() == n_curr.
    std::deque<DirectionRecord> history;
    int n_curr = 0;

    // CFW
    FlowVector x_star;
    FlowVector prev_flow;

    // WFFW
    FlowVector smoothed_target;

    // FFW: previous all-or-nothing targets, oldest first, up to l.
    std::deque<FlowVector> target_history;
};

// What a step hands back for the metric bookkeeping of that iteration.
struct StepInfo {
    double gamma = 0.0;
    bool reset = false;          // degeneracy fallback or history reset
    double grad_dot_flow = 0.0;  // <tau(f^k), f^k>
    double lp_value = 0.0;       // <tau(f^k), s_fw^k>
};

struct AlgorithmResult {
    FlowVector flow;
    TerminationReason reason = TerminationReason::max_iter;
    std::vector<ConvergenceRecord> trace;
    long iterations = 0;
    double final_rgap = 0.0;
};

// Fatal error mid-run; carries the records of the completed iterations.
class SolverAbort : public std::runtime_error {
public:
    SolverAbort(const std::string& what, std::vector<ConvergenceRecord> trace)
        : std::runtime_error(what), partial_trace(std::move(trace)) {}

    std::vector<ConvergenceRecord> partial_trace;
};

using ProgressSink = std::function<void(const ConvergenceRecord&)>;

namespace detail {

struct OracleEval {
    CostVector tau;
    double grad_dot_flow = 0.0;
    FlowVector s_fw;
    double lp_value = 0.0;
};

inline OracleEval evaluate_oracle(const Network& net, const DemandMatrix& dm,
                                  const FlowVector& f) {
    OracleEval ev;
    ev.tau = edge_costs(net, f);
    ev.grad_dot_flow = dot(ev.tau, f);
    AonResult aon = all_or_nothing(net, dm, ev.tau);
    ev.s_fw = std::move(aon.flow);
    ev.lp_value = aon.lp_value;
    return ev;
}

inline double choose_gamma(const Network& net, const FlowVector& f, const FlowVector& d,
                           const SolverConfig& cfg, long k) {
    if (cfg.algorithm == Algorithm::fw && cfg.step_policy == StepPolicy::harmonic)
        return std::min(1.0, 2.0 / static_cast<double>(k + 1));
    return line_search(net, f, d, cfg.linesearch_tol);
}

inline void apply_update(SolverState& st, const FlowVector& d, double gamma) {
    double neg_tol = 1e-12 * max_abs(st.flow);
    st.prev_flow = st.flow;
    st.flow = point_on_segment(st.flow, d, gamma, neg_tol);
    ++st.k;
}

inline FlowVector subtract(const FlowVector& a, const FlowVector& b) {
    FlowVector out(a.size());
    for (std::size_t e = 0; e < a.size(); ++e) out[e] = a[e] - b[e];
    return out;
}

inline double norm2(const FlowVector& v) {
    KahanSum s;
    for (double x : v) s.add(x * x);
    return std::sqrt(s.value());
}

}  // namespace detail

// f^0 = all-or-nothing at free-flow costs; the CFW target, the WFFW
// accumulator and the stored previous flow all start at f^0.
inline SolverState initialize(const Network& net, const DemandMatrix& dm) {
    SolverState st;
    CostVector free_flow = edge_costs(net, FlowVector(net.edge_count(), 0.0));
    st.flow = all_or_nothing(net, dm, free_flow).flow;
    st.x_star = st.flow;
    st.prev_flow = st.flow;
    st.smoothed_target = st.flow;
    return st;
}

inline StepInfo step_fw(const Network& net, const DemandMatrix& dm, SolverState& st,
                        const SolverConfig& cfg) {
    auto ev = detail::evaluate_oracle(net, dm, st.flow);
    FlowVector d = detail::subtract(ev.s_fw, st.flow);
    double gamma = detail::choose_gamma(net, st.flow, d, cfg, st.k);
    detail::apply_update(st, d, gamma);
    return {gamma, false, ev.grad_dot_flow, ev.lp_value};
}

// Weight of the old combined target in x* := alpha x* + (1-alpha) s^k,
// computed from the diagonal Hessian quadratic forms and projected to
// [0, cap]. A vanishing denominator degrades to alpha = 0 (a plain FW
// step), which the caller records in the trace.
inline double cfw_target_weight(const std::vector<double>& h, const FlowVector& x_star,
                                const FlowVector& f, const FlowVector& s_fw,
                                const FlowVector& denom_ref, double cap, bool& degenerate) {
    FlowVector a = detail::subtract(x_star, f);
    FlowVector b = detail::subtract(s_fw, f);
    FlowVector c = detail::subtract(s_fw, denom_ref);
    double num = hessian_quadratic_form(h, a, b);
    double den = hessian_quadratic_form(h, a, c);
    degenerate = false;
    if (std::abs(den) < 1e-30) {
        degenerate = true;
        return 0.0;
    }
    double alpha = num / den;
    if (!std::isfinite(alpha)) {
        degenerate = true;
        return 0.0;
    }
    return std::clamp(alpha, 0.0, cap);
}

inline StepInfo step_cfw(const Network& net, const DemandMatrix& dm, SolverState& st,
                         const SolverConfig& cfg) {
    auto ev = detail::evaluate_oracle(net, dm, st.flow);
    if (st.k == 0) {
        // one plain FW step first; the combined target stays at f^0
        FlowVector d = detail::subtract(ev.s_fw, st.flow);
        double gamma = line_search(net, st.flow, d, cfg.linesearch_tol);
        detail::apply_update(st, d, gamma);
        return {gamma, false, ev.grad_dot_flow, ev.lp_value};
    }

    std::vector<double> h = hessian_diag(net, st.flow);
    const FlowVector& ref = cfg.cfw_denominator == CfwDenominator::stored_previous_flow
                                ? st.prev_flow
                                : st.x_star;
    bool degenerate = false;
    double alpha =
        cfw_target_weight(h, st.x_star, st.flow, ev.s_fw, ref, cfg.cfw_alpha_cap, degenerate);

    for (std::size_t e = 0; e < st.x_star.size(); ++e)
        st.x_star[e] = alpha * st.x_star[e] + (1.0 - alpha) * ev.s_fw[e];

    FlowVector d = detail::subtract(st.x_star, st.flow);
    double gamma = line_search(net, st.flow, d, cfg.linesearch_tol);
    detail::apply_update(st, d, gamma);
    return {gamma, degenerate, ev.grad_dot_flow, ev.lp_value};
}

inline StepInfo step_ffw(const Network& net, const DemandMatrix& dm, SolverState& st,
                         const SolverConfig& cfg) {
    auto ev = detail::evaluate_oracle(net, dm, st.flow);
    long q = std::max<long>(0, std::min<long>(st.k, cfg.ffw_memory) - 1);

    // nu = mean of the q+1 most recent targets (incl. the fresh one) - f
    double mu = 1.0 / static_cast<double>(q + 1);
    FlowVector nu(st.flow.size(), 0.0);
    for (long i = 0; i < q; ++i) {
        const FlowVector& s_prev = st.target_history[st.target_history.size() - 1 - i];
        for (std::size_t e = 0; e < nu.size(); ++e) nu[e] += mu * s_prev[e];
    }
    for (std::size_t e = 0; e < nu.size(); ++e) nu[e] += mu * ev.s_fw[e] - st.flow[e];

    FlowVector w = detail::subtract(ev.s_fw, st.flow);
    double norm_nu = detail::norm2(nu);
    double norm_w = detail::norm2(w);

    const FlowVector* d = &w;
    if (norm_w == 0.0) {
        d = &w;  // equilibrium: zero direction, line search returns 0
    } else if (norm_nu > 0.0 &&
               dot(ev.tau, nu) / norm_nu <= dot(ev.tau, w) / norm_w) {
        d = &nu;
    }

    double gamma = line_search(net, st.flow, *d, cfg.linesearch_tol);
    detail::apply_update(st, *d, gamma);

    st.target_history.push_back(std::move(ev.s_fw));
    while (static_cast<long>(st.target_history.size()) > cfg.ffw_memory)
        st.target_history.pop_front();
    return {gamma, false, ev.grad_dot_flow, ev.lp_value};
}

inline StepInfo step_wffw(const Network& net, const DemandMatrix& dm, SolverState& st,
                          const SolverConfig& cfg) {
    auto ev = detail::evaluate_oracle(net, dm, st.flow);
    double w = cfg.smoothing_weight;
    for (std::size_t e = 0; e < st.smoothed_target.size(); ++e)
        st.smoothed_target[e] = (1.0 - w) * st.smoothed_target[e] + w * ev.s_fw[e];

    FlowVector d = detail::subtract(st.smoothed_target, st.flow);
    double gamma = detail::choose_gamma(net, st.flow, d, cfg, st.k);
    detail::apply_update(st, d, gamma);
    return {gamma, false, ev.grad_dot_flow, ev.lp_value};
}

// Coefficients alpha_0..alpha_M of the conjugate combination, where
// alpha_0 weighs the fresh FW direction and alpha_m the m-th most recent
// stored direction. Solved by the descending beta recursion
//   beta_m = -A_m / (B_m (1 - g_m)) + g_m / (1 - g_m) * sum_{n>m} beta_n,
//   alpha_m = beta_m * alpha_0,  alpha_0 = 1 / (1 + sum beta),
// so the coefficients sum to 1 by construction. Returns nullopt on a
// degenerate history (vanishing B, step size at 1, or exploding alpha);
// the caller then falls back to the plain FW direction.
inline std::optional<std::vector<double>> nfw_coefficients(
    const std::deque<DirectionRecord>& history, const std::vector<double>& h,
    const FlowVector& d_fw) {
    const int m_count = static_cast<int>(history.size());
    std::vector<double> a(m_count + 1), b(m_count + 1), g(m_count + 1);
    for (int m = 1; m <= m_count; ++m) {
        const DirectionRecord& rec = history[m_count - m];
        a[m] = hessian_quadratic_form(h, rec.direction, d_fw);
        b[m] = hessian_quadratic_form(h, rec.direction, rec.direction);
        g[m] = rec.gamma;
        if (!(b[m] > 1e-30)) return std::nullopt;
        if (std::abs(1.0 - g[m]) <= 1e-12) return std::nullopt;
    }

    std::vector<double> beta(m_count + 1, 0.0);
    double suffix = 0.0;  // sum of beta_n for n > m
    for (int m = m_count; m >= 1; --m) {
        beta[m] = -a[m] / (b[m] * (1.0 - g[m])) + g[m] / (1.0 - g[m]) * suffix;
        suffix += beta[m];
    }

    std::vector<double> alpha(m_count + 1);
    alpha[0] = 1.0 / (1.0 + suffix);
    for (int m = 1; m <= m_count; ++m) alpha[m] = beta[m] * alpha[0];
    for (double v : alpha)
        if (!std::isfinite(v) || std::abs(v) > 1e6) return std::nullopt;
    return alpha;
}

// Assembles d^k from stored directions without reconstructing old flows:
//   d^k = alpha_0 d_fw + sum_r [(1 - g_r) S_r - S_{r+1}] d^{k-r},
// with S_r the suffix sum of the alphas. Equivalent to combining the
// stored targets s^{k-r} and subtracting f^k.
inline FlowVector nfw_direction(const std::deque<DirectionRecord>& history,
                                const std::vector<double>& alpha, const FlowVector& d_fw) {
    const int m_count = static_cast<int>(history.size());
    FlowVector d(d_fw.size());
    for (std::size_t e = 0; e < d.size(); ++e) d[e] = alpha[0] * d_fw[e];

    std::vector<double> coef(m_count + 1, 0.0);
    double suffix = 0.0;  // S_{r+1}
    for (int r = m_count; r >= 1; --r) {
        double s_r = suffix + alpha[r];
        coef[r] = (1.0 - history[m_count - r].gamma) * s_r - suffix;
        suffix = s_r;
    }
    for (int r = 1; r <= m_count; ++r) {
        const FlowVector& dir = history[m_count - r].direction;
        for (std::size_t e = 0; e < d.size(); ++e) d[e] += coef[r] * dir[e];
    }
    return d;
}

inline StepInfo step_nfw(const Network& net, const DemandMatrix& dm, SolverState& st,
                         const SolverConfig& cfg) {
    auto ev = detail::evaluate_oracle(net, dm, st.flow);
    FlowVector d_fw = detail::subtract(ev.s_fw, st.flow);

    FlowVector d;
    bool fallback = false;
    if (st.history.empty()) {
        d = d_fw;
    } else {
        std::vector<double> h = hessian_diag(net, st.flow);
        auto alpha = nfw_coefficients(st.history, h, d_fw);
        if (alpha) {
            d = nfw_direction(st.history, *alpha, d_fw);
            // The combined target f + d must stay (near) feasible; a
            // materially negative entry means the coefficients left the
            // polytope, which we treat as one more degenerate case.
            double neg_tol = 1e-12 * std::max(1.0, max_abs(st.flow));
            for (std::size_t e = 0; e < d.size(); ++e) {
                if (st.flow[e] + d[e] < -neg_tol) {
                    fallback = true;
                    break;
                }
            }
        } else {
            fallback = true;
        }
        if (fallback) d = d_fw;
    }

    double gamma = line_search(net, st.flow, d, cfg.linesearch_tol);
    detail::apply_update(st, d, gamma);

    st.history.push_back({std::move(d), gamma});
    bool reset = fallback || gamma > cfg.gamma_max;
    if (reset) {
        while (st.history.size() > 1) st.history.pop_front();
        st.n_curr = 1;
    } else {
        st.n_curr = std::min(st.n_curr + 1, cfg.n_conjugate);
        while (static_cast<int>(st.history.size()) > st.n_curr) st.history.pop_front();
    }
    return {gamma, reset, ev.grad_dot_flow, ev.lp_value};
}

inline StepInfo step(const Network& net, const DemandMatrix& dm, SolverState& st,
                     const SolverConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::fw: return step_fw(net, dm, st, cfg);
        case Algorithm::cfw: return step_cfw(net, dm, st, cfg);
        case Algorithm::ffw: return step_ffw(net, dm, st, cfg);
        case Algorithm::wffw: return step_wffw(net, dm, st, cfg);
        case Algorithm::nfw: return step_nfw(net, dm, st, cfg);
    }
    throw std::logic_error("step: unknown algorithm");
}

namespace detail {

inline void check_config(const SolverConfig& cfg) {
    if (cfg.n_conjugate < 1) throw std::invalid_argument("solver: N must be >= 1");
    if (!(cfg.gamma_max > 0.0 && cfg.gamma_max < 1.0))
        throw std::invalid_argument("solver: gamma_max must lie in (0, 1)");
    if (!(cfg.smoothing_weight > 0.0 && cfg.smoothing_weight <= 1.0))
        throw std::invalid_argument("solver: W must lie in (0, 1]");
    if (cfg.ffw_memory < 1) throw std::invalid_argument("solver: l must be >= 1");
    if (!(cfg.cfw_alpha_cap > 0.0 && cfg.cfw_alpha_cap < 1.0))
        throw std::invalid_argument("solver: alpha cap must lie in (0, 1)");
    if (cfg.max_iter < 0) throw std::invalid_argument("solver: max_iter must be >= 0");
    if (!(cfg.linesearch_tol > 0.0))
        throw std::invalid_argument("solver: line search tol must be > 0");
}

inline bool has_effective_demand(const DemandMatrix& dm) {
    for (const DemandEntry& d : dm.entries)
        if (d.demand > 0.0 && d.origin != d.destination) return true;
    return false;
}

}  // namespace detail

// Runs `initialize` and then the configured step until the relative gap
// drops to rgap_tol, max_iter iterations complete, or the time budget runs
// out. Time is measured from after initialization on a monotone clock.
// Every finished iteration emits one ConvergenceRecord to the sink. A
// fatal error mid-run surfaces as SolverAbort with the partial trace.
inline AlgorithmResult solve(const Network& net, const DemandMatrix& dm, const SolverConfig& cfg,
                             const ProgressSink& sink = {}) {
    detail::check_config(cfg);

    AlgorithmResult res;
    SolverState st;
    try {
        st = initialize(net, dm);
        if (!detail::has_effective_demand(dm)) {
            // Degenerate input: the zero flow is optimal, RG defined as 0.
            res.flow = st.flow;
            res.reason = TerminationReason::rgap_tol;
            return res;
        }

        const auto t_start = std::chrono::steady_clock::now();
        double psi_cur = potential(net, st.flow);
        double blb = kNoLowerBound;

        while (true) {
            if (st.k >= cfg.max_iter) {
                res.reason = TerminationReason::max_iter;
                break;
            }

            StepInfo si = step(net, dm, st, cfg);

            double gap = std::max(0.0, fw_gap(si.grad_dot_flow, si.lp_value));
            double lb = lower_bound(psi_cur, gap);
            blb = update_best_lower_bound(blb, lb);
            double psi_next = potential(net, st.flow);
            double rg = relative_gap(psi_next, blb);
            if (!std::isnan(rg)) rg = std::max(0.0, rg);

            ConvergenceRecord rec;
            rec.iter = st.k - 1;
            rec.elapsed_sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            rec.psi = psi_next;
            rec.fw_gap = gap;
            rec.lb = lb;
            rec.blb = blb;
            rec.rel_gap = rg;
            rec.gamma = si.gamma;
            rec.reset = si.reset;
            res.trace.push_back(rec);
            if (sink) sink(rec);

            psi_cur = psi_next;
            res.final_rgap = rg;

            double stop_gap = std::isnan(rg) ? gap : rg;
            if (std::isfinite(cfg.rgap_tol) && stop_gap <= cfg.rgap_tol) {
                res.reason = TerminationReason::rgap_tol;
                break;
            }
            if (st.k >= cfg.max_iter) {
                res.reason = TerminationReason::max_iter;
                break;
            }
            if (rec.elapsed_sec > cfg.time_budget_sec) {
                res.reason = TerminationReason::time_budget;
                break;
            }
        }
    } catch (const std::exception& e) {
        throw SolverAbort(e.what(), std::move(res.trace));
    }

    res.flow = std::move(st.flow);
    res.iterations = st.k;
    return res;
}

}  // namespace tapfw
