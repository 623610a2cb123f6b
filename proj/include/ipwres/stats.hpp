#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace ipwres {

inline double normal_cdf(double x) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::cdf(n01, x);
}

//! Standard normal quantile. p is clamped away from {0,1} so residual
//! transforms at the support boundary stay finite.
inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> n01;
    const double clamped = std::clamp(p, 1e-300, 1.0 - 1e-16);
    return boost::math::quantile(n01, clamped);
}

//! Two-sided normal critical value for confidence level 1 - alpha.
inline double normal_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1)");
    return normal_quantile(1.0 - alpha / 2.0);
}

//! One-sample Kolmogorov-Smirnov distance against the standard normal.
inline double ks_statistic_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

//! Asymptotic KS critical value at level alpha for sample size n
//! (Kolmogorov limit with the small-sample denominator of Stephens).
inline double ks_critical_value(std::size_t n, double alpha) {
    const double c = std::sqrt(std::log(2.0 / alpha) / 2.0);
    const double sn = std::sqrt(static_cast<double>(n));
    return c / (sn + 0.12 + 0.11 / sn);
}

}  // namespace ipwres
