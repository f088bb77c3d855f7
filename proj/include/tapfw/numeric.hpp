#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tapfw {

// Kahan-Babuska (Neumaier) compensated accumulator. Edge counts reach ~1e5
// and relative gaps of 1e-8 are read off sums of such lengths, so plain
// accumulation is not good enough for the potential and the dual values.
class KahanSum {
public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    KahanSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value();
}

inline double max_abs(std::span<const double> v) noexcept {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline bool has_nan(std::span<const double> v) noexcept {
    for (double x : v)
        if (std::isnan(x)) return true;
    return false;
}

}  // namespace tapfw
