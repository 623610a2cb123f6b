#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipwres/inclusion.hpp"
#include "ipwres/stats.hpp"

namespace ipwres {

enum class ReserveKind { ibns, rbns, ibnr, count, cumulative, incremental };

inline std::string to_string(ReserveKind k) {
    switch (k) {
        case ReserveKind::ibns: return "IBNS";
        case ReserveKind::rbns: return "RBNS";
        case ReserveKind::ibnr: return "IBNR";
        case ReserveKind::count: return "COUNT";
        case ReserveKind::cumulative: return "CUMULATIVE";
        case ReserveKind::incremental: return "INCREMENTAL";
    }
    return "?";
}

//! Point estimate with the simplified variance and a log-transformed
//! confidence interval. The variance is NaN when fewer than two payments are
//! in sample (the estimator needs N^P >= 2).
struct ReserveEstimate {
    ReserveKind kind = ReserveKind::ibns;
    double point = 0.0;
    double variance = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double alpha = 0.05;
    std::size_t n_paid = 0;
    bool trimmed = false;
};

namespace detail {

inline void check_probabilities(const std::vector<double>& pi, const char* where) {
    for (double p : pi)
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument(std::string(where) + ": probabilities must lie in (0,1]");
}

inline void check_lengths(std::size_t a, std::size_t b, const char* where) {
    if (a != b)
        throw std::invalid_argument(std::string(where) +
                                    ": payment and probability vectors differ in length");
}

}  // namespace detail

//! Log-transformed interval exp(log point -+ z_{alpha/2} sqrt(var)/point).
//! A zero reserve yields the degenerate interval [0, 0].
inline std::pair<double, double> confidence_interval(double point, double variance,
                                                     double alpha) {
    if (point < 0.0)
        throw std::invalid_argument("confidence_interval: point must be >= 0");
    if (point == 0.0) return {0.0, 0.0};
    if (std::isnan(variance))
        return {std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN()};
    if (variance < 0.0)
        throw std::invalid_argument("confidence_interval: variance must be >= 0");
    const double z = normal_critical_value(alpha);
    const double half_width = z * std::sqrt(variance) / point;
    return {point * std::exp(-half_width), point * std::exp(half_width)};
}

//! Simplified variance estimator applied to arbitrary per-payment summands:
//!   sum_i (N^P a_i - sum_j a_j)^2 / (N^P (N^P - 1)).
inline double variance_from_terms(const std::vector<double>& terms) {
    const std::size_t n = terms.size();
    if (n < 2) throw std::invalid_argument("variance undefined for fewer than two payments");
    const double total = std::accumulate(terms.begin(), terms.end(), 0.0);
    const double np = static_cast<double>(n);
    double ss = 0.0;
    for (double a : terms) {
        const double d = np * a - total;
        ss += d * d;
    }
    return ss / (np * (np - 1.0));
}

//! Variance of the IBNS estimator: per-payment terms (1 - pi)/pi * Y.
inline double variance_estimate(const std::vector<double>& amounts,
                                const std::vector<double>& pi) {
    detail::check_lengths(amounts.size(), pi.size(), "variance_estimate");
    detail::check_probabilities(pi, "variance_estimate");
    std::vector<double> terms(amounts.size());
    for (std::size_t i = 0; i < amounts.size(); ++i)
        terms[i] = (1.0 - pi[i]) / pi[i] * amounts[i];
    return variance_from_terms(terms);
}

namespace detail {

inline ReserveEstimate reserve_from_terms(ReserveKind kind, const std::vector<double>& terms,
                                          double alpha) {
    ReserveEstimate est;
    est.kind = kind;
    est.alpha = alpha;
    est.n_paid = terms.size();
    est.point = std::accumulate(terms.begin(), terms.end(), 0.0);
    est.variance = terms.size() >= 2 ? variance_from_terms(terms)
                                     : std::numeric_limits<double>::quiet_NaN();
    if (est.point < 0.0) {
        // Mixed trimmed/raw composites can dip below zero; the log-scale
        // interval is undefined there.
        est.ci_lower = std::numeric_limits<double>::quiet_NaN();
        est.ci_upper = std::numeric_limits<double>::quiet_NaN();
        return est;
    }
    const auto ci = confidence_interval(est.point, est.variance, alpha);
    est.ci_lower = ci.first;
    est.ci_upper = ci.second;
    return est;
}

}  // namespace detail

//! Estimate assembled from explicit per-payment summands. Used where a
//! composite (for example a trimmed IBNS minus a trimmed RBNS) replaces the
//! standard per-kind formulas.
inline ReserveEstimate reserve_from_summands(ReserveKind kind, const std::vector<double>& terms,
                                             double alpha = 0.05) {
    return detail::reserve_from_terms(kind, terms, alpha);
}

//! L_hat(tau) = sum Y_i / pi_i, the estimated ultimate liability.
inline double ultimate_estimate(const std::vector<double>& amounts,
                                const std::vector<double>& pi) {
    detail::check_lengths(amounts.size(), pi.size(), "ultimate_estimate");
    detail::check_probabilities(pi, "ultimate_estimate");
    double total = 0.0;
    for (std::size_t i = 0; i < amounts.size(); ++i) total += amounts[i] / pi[i];
    return total;
}

//! IBNS reserve: sum Y_i (1 - pi_i)/pi_i.
inline ReserveEstimate ibns_reserve(const std::vector<double>& amounts,
                                    const std::vector<double>& pi, double alpha = 0.05) {
    detail::check_lengths(amounts.size(), pi.size(), "ibns_reserve");
    detail::check_probabilities(pi, "ibns_reserve");
    std::vector<double> terms(amounts.size());
    for (std::size_t i = 0; i < amounts.size(); ++i)
        terms[i] = (1.0 - pi[i]) / pi[i] * amounts[i];
    return detail::reserve_from_terms(ReserveKind::ibns, terms, alpha);
}

inline ReserveEstimate ibns_reserve(const std::vector<double>& amounts,
                                    const InclusionProbabilities& probs, double alpha = 0.05) {
    return ibns_reserve(amounts, probs.pi, alpha);
}

//! Outstanding payment count: the Y_i = 1 specialization.
inline ReserveEstimate outstanding_count(const std::vector<double>& pi, double alpha = 0.05) {
    detail::check_probabilities(pi, "outstanding_count");
    std::vector<double> terms(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i) terms[i] = (1.0 - pi[i]) / pi[i];
    return detail::reserve_from_terms(ReserveKind::count, terms, alpha);
}

//! RBNS reserve: sum Y_i (1 - pi_v)/pi_v over payments of reported claims.
inline ReserveEstimate rbns_reserve(const std::vector<double>& amounts,
                                    const std::vector<double>& pi_v, double alpha = 0.05) {
    detail::check_lengths(amounts.size(), pi_v.size(), "rbns_reserve");
    detail::check_probabilities(pi_v, "rbns_reserve");
    std::vector<double> terms(amounts.size());
    for (std::size_t i = 0; i < amounts.size(); ++i)
        terms[i] = (1.0 - pi_v[i]) / pi_v[i] * amounts[i];
    return detail::reserve_from_terms(ReserveKind::rbns, terms, alpha);
}

inline ReserveEstimate rbns_reserve(const std::vector<double>& amounts,
                                    const InclusionProbabilities& probs, double alpha = 0.05) {
    return rbns_reserve(amounts, probs.pi_v, alpha);
}

//! Pure IBNR reserve: sum (1 - pi_u)/pi_u * Y_i / pi_v. Equals IBNS - RBNS
//! whenever pi = pi_u * pi_v holds exactly.
inline ReserveEstimate ibnr_reserve(const std::vector<double>& amounts,
                                    const std::vector<double>& pi_u,
                                    const std::vector<double>& pi_v, double alpha = 0.05) {
    detail::check_lengths(amounts.size(), pi_u.size(), "ibnr_reserve");
    detail::check_lengths(amounts.size(), pi_v.size(), "ibnr_reserve");
    detail::check_probabilities(pi_u, "ibnr_reserve");
    detail::check_probabilities(pi_v, "ibnr_reserve");
    std::vector<double> terms(amounts.size());
    for (std::size_t i = 0; i < amounts.size(); ++i)
        terms[i] = (1.0 - pi_u[i]) / pi_u[i] * amounts[i] / pi_v[i];
    return detail::reserve_from_terms(ReserveKind::ibnr, terms, alpha);
}

inline ReserveEstimate ibnr_reserve(const std::vector<double>& amounts,
                                    const InclusionProbabilities& probs, double alpha = 0.05) {
    return ibnr_reserve(amounts, probs.pi_u, probs.pi_v, alpha);
}

//! Cumulative claims paid by t as estimated from the sample at tau:
//!   sum Y_i pi_i(t) / pi_i(tau).
inline double cumulative_estimate(const std::vector<double>& amounts,
                                  const std::vector<double>& pi_at_tau,
                                  const std::vector<double>& pi_at_t) {
    detail::check_lengths(amounts.size(), pi_at_tau.size(), "cumulative_estimate");
    detail::check_lengths(amounts.size(), pi_at_t.size(), "cumulative_estimate");
    detail::check_probabilities(pi_at_tau, "cumulative_estimate");
    detail::check_probabilities(pi_at_t, "cumulative_estimate");
    double total = 0.0;
    for (std::size_t i = 0; i < amounts.size(); ++i) {
        if (pi_at_t[i] < pi_at_tau[i] - 1e-12)
            throw std::invalid_argument("cumulative_estimate: inconsistent probability curves");
        total += amounts[i] * pi_at_t[i] / pi_at_tau[i];
    }
    return total;
}

//! Incremental claims over (t1, t2]: sum Y_i (pi_i(t2) - pi_i(t1)) / pi_i(tau).
inline double incremental_estimate(const std::vector<double>& amounts,
                                   const std::vector<double>& pi_at_tau,
                                   const std::vector<double>& pi_at_t1,
                                   const std::vector<double>& pi_at_t2) {
    detail::check_lengths(amounts.size(), pi_at_tau.size(), "incremental_estimate");
    detail::check_lengths(amounts.size(), pi_at_t1.size(), "incremental_estimate");
    detail::check_lengths(amounts.size(), pi_at_t2.size(), "incremental_estimate");
    detail::check_probabilities(pi_at_tau, "incremental_estimate");
    detail::check_probabilities(pi_at_t1, "incremental_estimate");
    detail::check_probabilities(pi_at_t2, "incremental_estimate");
    double total = 0.0;
    for (std::size_t i = 0; i < amounts.size(); ++i) {
        if (pi_at_t1[i] < pi_at_tau[i] - 1e-12 || pi_at_t2[i] < pi_at_t1[i] - 1e-12)
            throw std::invalid_argument("incremental_estimate: inconsistent probability ordering");
        total += amounts[i] * (pi_at_t2[i] - pi_at_t1[i]) / pi_at_tau[i];
    }
    return total;
}

//! Result of the order-statistic trimming pass: values only ever increase.
struct TrimmedProbabilities {
    std::vector<double> original;
    std::vector<double> trimmed;
    std::size_t n_modified = 0;
};

//! Trimming of small inclusion probabilities: with the order statistics
//! pi_(1) <= ... <= pi_(N) and the sentinel pi_(N+1) := 1, every index j with
//! pi_(j) <= 1/(j+1) and pi_(j+1) > 1/(j+2) raises the first j-1 order
//! statistics to pi_(j); the largest firing j wins. Ties sort stably by
//! original index, so the result is deterministic.
inline TrimmedProbabilities trim_probabilities(const std::vector<double>& pi) {
    detail::check_probabilities(pi, "trim_probabilities");
    TrimmedProbabilities out;
    out.original = pi;
    out.trimmed = pi;
    const std::size_t n = pi.size();
    if (n == 0) return out;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&pi](std::size_t a, std::size_t b) { return pi[a] < pi[b]; });

    std::size_t fired = 0;  // 1-based index of the last firing j
    for (std::size_t j = 1; j <= n; ++j) {
        const double pj = pi[order[j - 1]];
        const double pj1 = j < n ? pi[order[j]] : 1.0;
        if (pj <= 1.0 / static_cast<double>(j + 1) && pj1 > 1.0 / static_cast<double>(j + 2))
            fired = j;
    }
    if (fired >= 2) {
        const double level = pi[order[fired - 1]];
        for (std::size_t k = 0; k + 1 < fired; ++k) {
            const std::size_t idx = order[k];
            if (out.trimmed[idx] < level) {
                out.trimmed[idx] = level;
                ++out.n_modified;
            }
        }
    }
    return out;
}

}  // namespace ipwres
