#pragma once

#include <cmath>
#include <numeric>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "w2sg/common.hpp"

namespace w2sg::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return std::nan("");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Standard error of the mean (sample standard deviation / sqrt(n)); 0 for n < 2.
inline double stderr_of_mean(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const auto n = static_cast<double>(xs.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

struct PairedTest {
    double mean_difference = 0.0;
    double t = 0.0;
    double p_value = 1.0;  // one-sided, H1: mean(a - b) > 0
};

inline PairedTest paired_t_test_greater(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw Error("paired test needs two equal samples of size >= 2");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    PairedTest out;
    out.mean_difference = mean(diff);
    const double se = stderr_of_mean(diff);
    if (se == 0.0) {
        out.t = out.mean_difference > 0 ? INFINITY : (out.mean_difference < 0 ? -INFINITY : 0.0);
        out.p_value = out.mean_difference > 0 ? 0.0 : 1.0;
        return out;
    }
    out.t = out.mean_difference / se;
    const boost::math::students_t dist(static_cast<double>(diff.size() - 1));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
    return out;
}

}  // namespace w2sg::stats
