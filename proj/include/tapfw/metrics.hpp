#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace tapfw {

// One finished iteration. psi is the value after the update (the upper
// bound UBD_k), so the record for iteration k is final only once the k-th
// step has been applied. rel_gap is NaN while blb is still nonpositive.
struct ConvergenceRecord {
    long iter = 0;
    double elapsed_sec = 0.0;
    double psi = 0.0;
    double fw_gap = 0.0;
    double lb = 0.0;
    double blb = 0.0;
    double rel_gap = 0.0;
    double gamma = 0.0;
    bool reset = false;  // conjugate-history reset or degeneracy fallback
};

constexpr double kNoLowerBound = -std::numeric_limits<double>::infinity();

// g = <grad Psi(f), f - s> given the two inner products the assignment
// oracle already produced. The raw difference may round slightly negative
// near equilibrium; records store it clamped at 0.
inline double fw_gap(double grad_dot_flow, double lp_value) { return grad_dot_flow - lp_value; }

// LB = Psi(f) - g, a valid lower bound on the optimal potential.
inline double lower_bound(double psi, double gap) { return psi - gap; }

// BLB = max of all lower bounds seen so far; start from kNoLowerBound.
inline double update_best_lower_bound(double blb, double lb) { return std::max(blb, lb); }

// RG = (UBD - BLB) / BLB. Undefined (NaN) for nonpositive BLB; the solver
// then falls back to the FW gap for its stopping rule.
inline double relative_gap(double ubd, double blb) {
    if (!(blb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (ubd - blb) / blb;
}

}  // namespace tapfw
