#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "noisekit/error.hpp"

namespace noisekit {

// Quantile with linear interpolation between closest ranks (type 7):
// position p*(n-1) on the sorted sample, fractional part interpolated.
inline double quantile(std::span<const double> xs, double p) {
    if (xs.empty()) throw ValidationError("quantile: empty sample");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    if (p <= 0.0) return s.front();
    if (p >= 1.0) return s.back();
    const double pos = p * static_cast<double>(s.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (const double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Sample variance with the given delta degrees of freedom (1 = unbiased).
inline double variance(std::span<const double> xs, int ddof = 1) {
    const double m = mean(xs);
    double s = 0.0;
    for (const double x : xs) s += (x - m) * (x - m);
    const double denom = static_cast<double>(xs.size()) - static_cast<double>(ddof);
    return denom > 0.0 ? s / denom : 0.0;
}

// Deterministic pairwise summation: fixed midpoint-split tree, left-to-right
// runs of at most 8 at the leaves. Used for log-likelihood totals so reductions
// do not depend on thread count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (const double x : v)
        if (x > m) m = x;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (const double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace noisekit
