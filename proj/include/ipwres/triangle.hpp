#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipwres/csv.hpp"
#include "ipwres/estimators.hpp"
#include "ipwres/portfolio.hpp"

namespace ipwres {

enum class TriangleMeasure { amount, count };

//! Development clock: claims develop from the accident (delay Z, the
//! classical triangle) or from reporting (delay V, the reported-claims
//! development used for the RBNS split).
enum class DevClock { accident, reporting };

namespace detail {

inline double dev_anchor(const ObservedPayment& p, DevClock clock) {
    return clock == DevClock::accident ? p.accident_time : p.reporting_time;
}

inline double dev_delay(const ObservedPayment& p, DevClock clock) {
    return clock == DevClock::accident ? p.total_delay : p.payment_delay;
}

}  // namespace detail

//! Weight gamma_i in the empirical development-factor estimator: claim-size
//! weights reproduce the classical paid-triangle factors, unit weights the
//! count-triangle factors, squared weights the regression-through-origin
//! variant.
enum class ClWeight { amount, unit, amount_squared };

inline std::string to_string(ClWeight w) {
    switch (w) {
        case ClWeight::amount: return "amount";
        case ClWeight::unit: return "unit";
        case ClWeight::amount_squared: return "amount-squared";
    }
    return "?";
}

inline double cl_weight_of(ClWeight scheme, double amount) {
    switch (scheme) {
        case ClWeight::amount: return amount;
        case ClWeight::unit: return 1.0;
        case ClWeight::amount_squared: return amount * amount;
    }
    return 0.0;
}

//! Cumulative run-off triangle. Development columns are half-open: a payment
//! with total delay exactly equal to a cut belongs to the next column.
//! Cell (o, d) is observable once tau - origin_start >= dev_cuts[d].
struct RunoffTriangle {
    std::vector<double> origin_cuts;            // bin edges, rows() + 1 of them
    std::vector<double> dev_cuts;               // t_1 .. t_m (t_0 = 0 implicit)
    std::vector<std::vector<double>> cells;     // cumulative amounts or counts
    std::vector<std::vector<char>> observed;    // staircase mask
    TriangleMeasure measure = TriangleMeasure::amount;
    double valuation_time = 0.0;

    std::size_t rows() const { return cells.size(); }
    std::size_t columns() const { return dev_cuts.size(); }

    std::optional<std::size_t> latest_observed(std::size_t row) const {
        std::optional<std::size_t> latest;
        for (std::size_t d = 0; d < columns(); ++d)
            if (observed[row][d]) latest = d;
        return latest;
    }
};

namespace detail {

inline std::vector<double> regular_cuts(double width, double end) {
    if (!(width > 0.0)) throw std::invalid_argument("triangle: widths must be positive");
    std::vector<double> cuts;
    for (double c = width; c < end - 1e-9; c += width) cuts.push_back(c);
    cuts.push_back(end);
    return cuts;
}

}  // namespace detail

inline RunoffTriangle build_triangle(const ObservedSnapshot& snapshot, double origin_width,
                                     double dev_width, TriangleMeasure measure,
                                     DevClock clock = DevClock::accident) {
    const double tau = snapshot.valuation_time;
    const double omega = snapshot.portfolio->max_settlement;
    if (!(origin_width > 0.0) || !(dev_width > 0.0))
        throw std::invalid_argument("build_triangle: widths must be positive");

    RunoffTriangle tri;
    tri.measure = measure;
    tri.valuation_time = tau;
    tri.dev_cuts = detail::regular_cuts(dev_width, omega);
    const std::size_t n_rows =
        static_cast<std::size_t>(std::ceil(tau / origin_width - 1e-9));
    tri.origin_cuts.resize(n_rows + 1);
    for (std::size_t o = 0; o <= n_rows; ++o)
        tri.origin_cuts[o] = static_cast<double>(o) * origin_width;

    tri.cells.assign(n_rows, std::vector<double>(tri.dev_cuts.size(), 0.0));
    tri.observed.assign(n_rows, std::vector<char>(tri.dev_cuts.size(), 0));
    for (std::size_t o = 0; o < n_rows; ++o)
        for (std::size_t d = 0; d < tri.dev_cuts.size(); ++d)
            tri.observed[o][d] = tri.dev_cuts[d] <= tau - tri.origin_cuts[o] + 1e-9 ? 1 : 0;

    for (const ObservedPayment& p : snapshot.payments) {
        const double anchor = detail::dev_anchor(p, clock);
        if (anchor < 0.0 || anchor >= tri.origin_cuts.back()) continue;
        const std::size_t o = static_cast<std::size_t>(std::floor(anchor / origin_width));
        const double value = measure == TriangleMeasure::amount ? p.amount : 1.0;
        const double delay = detail::dev_delay(p, clock);
        for (std::size_t d = 0; d < tri.dev_cuts.size(); ++d)
            if (delay < tri.dev_cuts[d]) tri.cells[o][d] += value;
    }
    return tri;
}

//! Incremental display of a cumulative triangle.
inline std::vector<std::vector<double>> incremental_cells(const RunoffTriangle& tri) {
    std::vector<std::vector<double>> inc = tri.cells;
    for (auto& row : inc)
        for (std::size_t d = row.size(); d-- > 1;) row[d] -= row[d - 1];
    return inc;
}

struct DevelopmentFactors {
    std::vector<double> dev_cuts;  // aligned with the triangle columns
    std::vector<double> factors;   // factors[n]: from dev_cuts[n] to dev_cuts[n+1]
    ClWeight scheme = ClWeight::amount;
};

//! Weighted empirical development factors
//!   f(t_{n-1}, t_n) = sum gamma_i 1{Z_i < t_n} / sum gamma_i 1{Z_i < t_{n-1}},
//! each step restricted to payments whose claims could be observed through
//! t_n at tau. With origin_width > 0 the restriction uses the claim's origin
//! bin start (matching the aggregated triangle), otherwise its accident time.
inline DevelopmentFactors estimate_factors(const ObservedSnapshot& snapshot,
                                           const std::vector<double>& dev_cuts, ClWeight scheme,
                                           double origin_width = 0.0,
                                           DevClock clock = DevClock::accident) {
    if (dev_cuts.size() < 2)
        throw std::invalid_argument("estimate_factors: need at least two development cuts");
    for (std::size_t d = 1; d < dev_cuts.size(); ++d)
        if (!(dev_cuts[d] > dev_cuts[d - 1]))
            throw std::invalid_argument("estimate_factors: cuts must be strictly increasing");

    const double tau = snapshot.valuation_time;
    DevelopmentFactors out;
    out.dev_cuts = dev_cuts;
    out.scheme = scheme;
    for (std::size_t n = 1; n < dev_cuts.size(); ++n) {
        double num = 0.0, den = 0.0;
        for (const ObservedPayment& p : snapshot.payments) {
            const double t0 = detail::dev_anchor(p, clock);
            const double anchor =
                origin_width > 0.0 ? std::floor(t0 / origin_width) * origin_width : t0;
            if (dev_cuts[n] > tau - anchor + 1e-9) continue;
            const double gamma = cl_weight_of(scheme, p.amount);
            const double delay = detail::dev_delay(p, clock);
            if (delay < dev_cuts[n]) num += gamma;
            if (delay < dev_cuts[n - 1]) den += gamma;
        }
        if (den <= 0.0) {
            std::ostringstream msg;
            msg << "estimate_factors: insufficient mass at step " << n << " (cut "
                << dev_cuts[n - 1] << ")";
            throw std::invalid_argument(msg.str());
        }
        out.factors.push_back(num / den);
    }
    return out;
}

struct ClProjection {
    std::vector<std::vector<double>> completed;  // observed cells kept, rest projected
    std::vector<double> ultimate;                // per origin row
    std::vector<double> reserve;                 // ultimate minus latest observed
    double total_reserve = 0.0;
};

//! Classical Chain-Ladder projection: each row's latest observed cumulative
//! cell multiplied through the remaining factors. Rows with no observed cell
//! are left untouched and carry zero reserve.
inline ClProjection cl_project(const RunoffTriangle& tri, const DevelopmentFactors& factors) {
    if (factors.dev_cuts != tri.dev_cuts)
        throw std::invalid_argument("cl_project: factors were estimated on different cuts");
    ClProjection out;
    out.completed = tri.cells;
    out.ultimate.assign(tri.rows(), 0.0);
    out.reserve.assign(tri.rows(), 0.0);
    for (std::size_t o = 0; o < tri.rows(); ++o) {
        const auto latest = tri.latest_observed(o);
        if (!latest) continue;
        double value = tri.cells[o][*latest];
        const double latest_value = value;
        for (std::size_t d = *latest + 1; d < tri.columns(); ++d) {
            value *= factors.factors[d - 1];
            out.completed[o][d] = value;
        }
        out.ultimate[o] = value;
        out.reserve[o] = value - latest_value;
        out.total_reserve += out.reserve[o];
    }
    return out;
}

//! Development factors implied by a monotone inclusion-probability curve:
//! f_n = pi(t_n) / pi(t_{n-1}).
inline DevelopmentFactors implied_factors_from_probabilities(
    const std::vector<double>& pi_curve, const std::vector<double>& dev_cuts,
    ClWeight scheme = ClWeight::amount) {
    if (pi_curve.size() != dev_cuts.size())
        throw std::invalid_argument("implied_factors: curve and cuts differ in length");
    if (pi_curve.size() < 2)
        throw std::invalid_argument("implied_factors: need at least two curve points");
    DevelopmentFactors out;
    out.dev_cuts = dev_cuts;
    out.scheme = scheme;
    for (std::size_t n = 1; n < pi_curve.size(); ++n) {
        if (!(pi_curve[n - 1] > 0.0) || pi_curve[n] < pi_curve[n - 1])
            throw std::invalid_argument("implied_factors: curve must be positive, non-decreasing");
        out.factors.push_back(pi_curve[n] / pi_curve[n - 1]);
    }
    return out;
}

//! The same factors through the reverse-time hazard identity:
//!   alpha_n = (pi(t_n) - pi(t_{n-1})) / (delta_n pi(t_n)),
//!   f_n = (1 - delta_n alpha_n)^{-1}.
//! Agrees with the probability-ratio route algebraically.
inline DevelopmentFactors reverse_hazard_factors(const std::vector<double>& pi_curve,
                                                 const std::vector<double>& dev_cuts,
                                                 ClWeight scheme = ClWeight::amount) {
    if (pi_curve.size() != dev_cuts.size())
        throw std::invalid_argument("reverse_hazard_factors: curve and cuts differ in length");
    if (pi_curve.size() < 2)
        throw std::invalid_argument("reverse_hazard_factors: need at least two curve points");
    DevelopmentFactors out;
    out.dev_cuts = dev_cuts;
    out.scheme = scheme;
    for (std::size_t n = 1; n < pi_curve.size(); ++n) {
        if (!(pi_curve[n] > 0.0) || pi_curve[n] < pi_curve[n - 1])
            throw std::invalid_argument(
                "reverse_hazard_factors: curve must be positive, non-decreasing");
        const double delta = dev_cuts[n] - dev_cuts[n - 1];
        const double alpha = (pi_curve[n] - pi_curve[n - 1]) / (delta * pi_curve[n]);
        out.factors.push_back(1.0 / (1.0 - delta * alpha));
    }
    return out;
}

//! Empirical inclusion-probability curve over the development cuts, anchored
//! at pi(t_m) = 1 and chained down through the weighted empirical factors.
inline std::vector<double> empirical_pi_curve(const ObservedSnapshot& snapshot,
                                              const std::vector<double>& dev_cuts,
                                              ClWeight scheme, double origin_width = 0.0,
                                              DevClock clock = DevClock::accident) {
    const DevelopmentFactors f = estimate_factors(snapshot, dev_cuts, scheme, origin_width, clock);
    std::vector<double> curve(dev_cuts.size(), 1.0);
    for (std::size_t n = dev_cuts.size() - 1; n-- > 0;)
        curve[n] = curve[n + 1] / f.factors[n];
    return curve;
}

//! Homogeneous double Chain-Ladder product for the window (t1, t2]:
//!   N_hat(tau) * p(t1, t2) * Ybar(tau)
//! with N_hat = N^P / pi_u, p = pi(t2) - pi(t1) and Ybar the average payment
//! grossed up by pi_v = pi_tau / pi_u. Coincides with the homogeneous
//! incremental IPW estimate by rearrangement.
inline double double_cl_decomposition(const ObservedSnapshot& snapshot, double pi_u_tau,
                                      double pi_tau, double pi_t1, double pi_t2) {
    if (snapshot.n_paid == 0)
        throw std::invalid_argument("double_cl_decomposition: no payments in sample");
    if (!(pi_u_tau > 0.0 && pi_u_tau <= 1.0))
        throw std::invalid_argument("double_cl_decomposition: pi_u outside (0,1]");
    if (!(pi_tau > 0.0 && pi_tau <= pi_u_tau + 1e-12))
        throw std::invalid_argument("double_cl_decomposition: pi(tau) must lie in (0, pi_u]");
    if (pi_t1 < pi_tau - 1e-12 || pi_t2 < pi_t1 - 1e-12)
        throw std::invalid_argument("double_cl_decomposition: probability window not monotone");

    const double n_paid = static_cast<double>(snapshot.n_paid);
    const double pi_v_tau = pi_tau / pi_u_tau;
    const double n_hat = n_paid / pi_u_tau;
    const double proportion = pi_t2 - pi_t1;
    double grossed = 0.0;
    for (const ObservedPayment& p : snapshot.payments) grossed += p.amount / pi_v_tau;
    const double mean_ultimate = grossed / n_paid;
    return n_hat * proportion * mean_ultimate;
}

//! IPW completion of a run-off triangle (the Chain-Ladder equivalence route):
//! for every unobserved cell, the cumulative IPW estimate with the empirical
//! probability curve, where each row's sample is its latest observed
//! development window.
inline ClProjection ipw_complete_triangle(const ObservedSnapshot& snapshot,
                                          const RunoffTriangle& tri, ClWeight scheme) {
    const double origin_width = tri.origin_cuts.size() > 1
        ? tri.origin_cuts[1] - tri.origin_cuts[0] : 1.0;
    const std::vector<double> curve =
        empirical_pi_curve(snapshot, tri.dev_cuts, scheme, origin_width);

    ClProjection out;
    out.completed = tri.cells;
    out.ultimate.assign(tri.rows(), 0.0);
    out.reserve.assign(tri.rows(), 0.0);

    // Collect per-row gridded samples: payments with Z < t_{latest(o)}.
    std::vector<std::vector<double>> row_amounts(tri.rows());
    std::vector<std::optional<std::size_t>> row_latest(tri.rows());
    for (std::size_t o = 0; o < tri.rows(); ++o) row_latest[o] = tri.latest_observed(o);
    for (const ObservedPayment& p : snapshot.payments) {
        if (p.accident_time < 0.0 || p.accident_time >= tri.origin_cuts.back()) continue;
        const std::size_t o =
            static_cast<std::size_t>(std::floor(p.accident_time / origin_width));
        if (!row_latest[o]) continue;
        if (p.total_delay < tri.dev_cuts[*row_latest[o]])
            row_amounts[o].push_back(tri.measure == TriangleMeasure::amount ? p.amount : 1.0);
    }

    for (std::size_t o = 0; o < tri.rows(); ++o) {
        if (!row_latest[o]) continue;
        const std::size_t latest = *row_latest[o];
        const std::vector<double> pi_tau(row_amounts[o].size(), curve[latest]);
        double ultimate = tri.cells[o][latest];
        for (std::size_t d = latest + 1; d < tri.columns(); ++d) {
            const std::vector<double> pi_t(row_amounts[o].size(), curve[d]);
            out.completed[o][d] = cumulative_estimate(row_amounts[o], pi_tau, pi_t);
            ultimate = out.completed[o][d];
        }
        out.ultimate[o] = ultimate;
        out.reserve[o] = ultimate - tri.cells[o][latest];
        out.total_reserve += out.reserve[o];
    }
    return out;
}

inline void write_triangle_csv(const RunoffTriangle& tri, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "origin";
    for (double c : tri.dev_cuts) out << ',' << format_double(c);
    out << '\n';
    for (std::size_t o = 0; o < tri.rows(); ++o) {
        out << format_double(tri.origin_cuts[o]);
        for (std::size_t d = 0; d < tri.columns(); ++d) {
            out << ',';
            if (tri.observed[o][d]) out << format_double(tri.cells[o][d]);
        }
        out << '\n';
    }
}

inline void write_factors_csv(const DevelopmentFactors& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "step,from,to,factor,weight_scheme\n";
    for (std::size_t n = 0; n < f.factors.size(); ++n)
        out << (n + 1) << ',' << format_double(f.dev_cuts[n]) << ','
            << format_double(f.dev_cuts[n + 1]) << ',' << format_double(f.factors[n]) << ','
            << to_string(f.scheme) << '\n';
}

}  // namespace ipwres
