#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipwres/portfolio.hpp"
#include "ipwres/time_grid.hpp"

namespace ipwres {

enum class ModelKind { reporting_delay, payment_intensity };

inline std::string to_string(ModelKind k) {
    return k == ModelKind::reporting_delay ? "reporting-delay" : "payment-intensity";
}

struct FitReport {
    bool converged = true;
    int iterations = 0;
    double gradient_norm = 0.0;
    double log_likelihood = 0.0;
    std::vector<std::size_t> pinned_intervals;  // zero-exposure intervals held at the rate floor
    std::vector<double> std_errors;             // per parameter: log rates then coefficients
};

//! Piecewise-exponential proportional-hazards model:
//!   lambda(t | x) = exp(log_baseline[interval of t] + <x, coefficients>).
//! Serves as the reporting-delay hazard and as the payment-process intensity.
struct PemModel {
    ModelKind kind = ModelKind::reporting_delay;
    TimeGrid grid{std::vector<double>{0.0, 1.0}};
    std::vector<double> log_baseline;           // one per grid interval
    std::vector<double> coefficients;           // one per feature
    std::vector<std::string> feature_names;
    FitReport fit;

    void check_shape() const {
        if (log_baseline.size() != grid.intervals())
            throw std::invalid_argument("PemModel: one log-baseline value per grid interval");
        if (coefficients.size() != feature_names.size())
            throw std::invalid_argument("PemModel: coefficient count must match feature names");
    }

    double linear_predictor(const std::vector<double>& x) const {
        if (x.size() != coefficients.size())
            throw std::invalid_argument("PemModel: feature vector has wrong length");
        double lp = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) lp += coefficients[k] * x[k];
        return lp;
    }

    double hazard(double t, const std::vector<double>& x) const {
        return std::exp(log_baseline[grid.interval_of(t)] + linear_predictor(x));
    }

    //! Baseline cumulative hazard: exact sum of rate * overlap per interval.
    double cumulative_baseline(double t) const {
        if (t <= 0.0) return 0.0;
        double total = 0.0;
        for (std::size_t n = 0; n < grid.intervals(); ++n) {
            const double w = grid.overlap(n, t);
            if (w > 0.0) total += std::exp(log_baseline[n]) * w;
        }
        return total;
    }

    //! Lambda(min(t, omega) | x).
    double cumulative(double t, const std::vector<double>& x) const {
        return std::exp(linear_predictor(x)) * cumulative_baseline(std::min(t, grid.omega()));
    }

    //! F(t | x) = 1 - exp(-Lambda(t | x)).
    double cdf(double t, const std::vector<double>& x) const {
        return -std::expm1(-cumulative(t, x));
    }
};

//! pi^U(tau) = 1 - exp(-integral_0^{min(tau-T, omega)} lambda_U), and exactly 1
//! once the full settlement window has elapsed.
inline double reporting_inclusion_probability(const PemModel& model, const Claim& claim,
                                              double tau) {
    if (model.kind != ModelKind::reporting_delay)
        throw std::invalid_argument("reporting_inclusion_probability: wrong model kind");
    const double elapsed = tau - claim.accident_time;
    if (elapsed < 0.0)
        throw std::invalid_argument("reporting_inclusion_probability: claim '" + claim.id +
                                    "' occurs after the valuation date");
    if (elapsed >= model.grid.omega()) return 1.0;
    return model.cdf(elapsed, claim.covariates);
}

//! Feature vector of the payment model: claim covariates, the realized
//! reporting delay, and (when the model was fitted with it) the claim's mean
//! observed payment amount.
inline std::vector<double> payment_model_features(const PemModel& model, const Claim& claim,
                                                  double reporting_delay,
                                                  double mean_amount = 0.0) {
    std::vector<double> x = claim.covariates;
    x.push_back(reporting_delay);
    if (model.feature_names.size() == x.size() + 1 &&
        model.feature_names.back() == "claim_mean_amount")
        x.push_back(mean_amount);
    if (x.size() != model.feature_names.size())
        throw std::invalid_argument("payment_model_features: claim does not match model features");
    return x;
}

//! pi^V(tau) = Lambda(min(tau-R, w) | F) / Lambda(w | F) with the per-claim
//! payment window w = omega - U, so that all development completes within
//! omega of the accident. The proportional covariate factor cancels.
inline double payment_inclusion_probability(const PemModel& model, const Claim& claim,
                                            double reporting_delay, double tau,
                                            double mean_amount = 0.0) {
    if (model.kind != ModelKind::payment_intensity)
        throw std::invalid_argument("payment_inclusion_probability: wrong model kind");
    if (claim.reporting_time > tau)
        throw std::invalid_argument("payment_inclusion_probability: claim '" + claim.id +
                                    "' not reported by the valuation date");
    const double window = model.grid.omega() - reporting_delay;
    if (window <= 0.0) return 1.0;  // no payment window left; vacuously complete
    const double elapsed = tau - claim.reporting_time;
    if (elapsed >= window) return 1.0;
    const double denom = model.cumulative_baseline(window);
    if (denom <= 0.0)
        throw std::invalid_argument("payment_inclusion_probability: degenerate intensity");
    if (elapsed <= 0.0) return 0.0;
    return model.cumulative_baseline(elapsed) / denom;
}

inline nlohmann::json to_json(const PemModel& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind);
    j["grid_cut_points"] = model.grid.cuts();
    j["log_baseline"] = model.log_baseline;
    j["coefficients"] = model.coefficients;
    j["feature_names"] = model.feature_names;
    j["fit"] = {{"converged", model.fit.converged},
                {"iterations", model.fit.iterations},
                {"gradient_norm", model.fit.gradient_norm},
                {"log_likelihood", model.fit.log_likelihood},
                {"pinned_intervals", model.fit.pinned_intervals},
                {"std_errors", model.fit.std_errors}};
    return j;
}

inline PemModel pem_from_json(const nlohmann::json& j) {
    PemModel model;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "reporting-delay") model.kind = ModelKind::reporting_delay;
    else if (kind == "payment-intensity") model.kind = ModelKind::payment_intensity;
    else throw std::invalid_argument("pem_from_json: unknown kind '" + kind + "'");
    model.grid = TimeGrid(j.at("grid_cut_points").get<std::vector<double>>());
    model.log_baseline = j.at("log_baseline").get<std::vector<double>>();
    model.coefficients = j.at("coefficients").get<std::vector<double>>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        model.fit.converged = f.at("converged").get<bool>();
        model.fit.iterations = f.at("iterations").get<int>();
        model.fit.gradient_norm = f.at("gradient_norm").get<double>();
        model.fit.log_likelihood = f.at("log_likelihood").get<double>();
        model.fit.pinned_intervals = f.at("pinned_intervals").get<std::vector<std::size_t>>();
        model.fit.std_errors = f.at("std_errors").get<std::vector<double>>();
    }
    model.check_shape();
    return model;
}

}  // namespace ipwres
