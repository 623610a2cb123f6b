#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ipwres/pem.hpp"
#include "ipwres/portfolio.hpp"
#include "ipwres/time_grid.hpp"

namespace ipwres {

enum class WeightScheme { unit, amount };

struct FitOptions {
    // Unset picks the model-specific default: amount weights for the
    // reporting model (claim sizes, as in Chain-Ladder style estimation),
    // unit weights for the payment-intensity model.
    std::optional<WeightScheme> weight_scheme;
    int max_iterations = 100;
    double gradient_tolerance = 1e-8;
    double ridge_penalty = 1e-8;     // on covariate coefficients only
    bool adjust_truncation = true;   // reporting model: divide by F(tau - T)
    bool include_amount = false;     // payment model: claim mean paid amount as a feature
    double pinned_rate = 1e-12;      // rate assigned to zero-exposure intervals

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("FitOptions: max_iterations >= 1");
        if (!(gradient_tolerance > 0.0))
            throw std::invalid_argument("FitOptions: gradient tolerance must be positive");
        if (ridge_penalty < 0.0)
            throw std::invalid_argument("FitOptions: ridge penalty must be >= 0");
    }
};

namespace detail {

//! One likelihood unit: a claim with its event times, an exposure window and
//! an optional right-truncation bound. Both model kinds reduce to this form.
struct PemSubject {
    std::vector<double> x;
    double weight = 1.0;
    std::vector<double> event_times;
    double exposure_time = 0.0;    // events integrate against [0, exposure_time)
    double truncation_time = -1.0; // <0: no truncation adjustment
};

struct PemEval {
    double loglik = 0.0;          // penalized objective
    double data_loglik = 0.0;     // without the ridge term
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

class PemProblem {
  public:
    PemProblem(const TimeGrid& grid, std::vector<PemSubject> subjects, std::size_t n_features,
               const FitOptions& options)
        : grid_(grid), subjects_(std::move(subjects)), n_features_(n_features),
          options_(options) {
        const std::size_t m = grid_.intervals();
        std::vector<double> total_exposure(m, 0.0);
        double events = 0.0, exposure = 0.0;
        for (const PemSubject& s : subjects_) {
            for (std::size_t n = 0; n < m; ++n)
                total_exposure[n] += s.weight * grid_.overlap(n, s.exposure_time);
            events += s.weight * static_cast<double>(s.event_times.size());
            exposure += s.weight * s.exposure_time;
        }
        slot_of_interval_.assign(m, static_cast<std::size_t>(-1));
        for (std::size_t n = 0; n < m; ++n) {
            if (total_exposure[n] > 0.0) {
                slot_of_interval_[n] = free_intervals_.size();
                free_intervals_.push_back(n);
            } else {
                pinned_intervals_.push_back(n);
            }
        }
        init_log_rate_ = std::log(std::max(events, 0.5) / std::max(exposure, 1e-12));
    }

    std::size_t dim() const { return free_intervals_.size() + n_features_; }
    const std::vector<std::size_t>& pinned() const { return pinned_intervals_; }

    Eigen::VectorXd initial_theta() const {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim());
        for (std::size_t i = 0; i < free_intervals_.size(); ++i) theta[i] = init_log_rate_;
        return theta;
    }

    std::vector<double> full_log_baseline(const Eigen::VectorXd& theta) const {
        std::vector<double> rho(grid_.intervals(), std::log(options_.pinned_rate));
        for (std::size_t i = 0; i < free_intervals_.size(); ++i) rho[free_intervals_[i]] = theta[i];
        return rho;
    }

    PemEval evaluate(const Eigen::VectorXd& theta, bool with_derivatives) const {
        const std::size_t m = grid_.intervals();
        const std::size_t mf = free_intervals_.size();
        const std::size_t p = n_features_;
        const std::vector<double> rho = full_log_baseline(theta);

        PemEval out;
        if (with_derivatives) {
            out.grad = Eigen::VectorXd::Zero(dim());
            out.hess = Eigen::MatrixXd::Zero(dim(), dim());
        }

        std::vector<double> piece(m);
        for (const PemSubject& s : subjects_) {
            const double w = s.weight;
            if (w == 0.0) continue;
            double lp = 0.0;
            for (std::size_t k = 0; k < p; ++k) lp += theta[mf + k] * s.x[k];
            const double elp = std::exp(lp);

            // Event terms are linear in the parameters.
            for (double t : s.event_times) {
                const std::size_t n = grid_.interval_of(t);
                out.loglik += w * (rho[n] + lp);
                if (with_derivatives) {
                    const std::size_t slot = slot_of_interval_[n];
                    if (slot != static_cast<std::size_t>(-1)) out.grad[slot] += w;
                }
            }
            if (with_derivatives && !s.event_times.empty()) {
                const double wd = w * static_cast<double>(s.event_times.size());
                for (std::size_t k = 0; k < p; ++k) out.grad[mf + k] += wd * s.x[k];
            }

            // Exposure: -Lambda(exposure_time).
            double csum = 0.0;
            for (std::size_t n = 0; n < m; ++n) {
                const double width = grid_.overlap(n, s.exposure_time);
                const double c = width > 0.0 ? width * std::exp(rho[n]) * elp : 0.0;
                piece[n] = c;
                csum += c;
            }
            out.loglik -= w * csum;
            if (with_derivatives) {
                for (std::size_t n = 0; n < m; ++n) {
                    const double c = piece[n];
                    if (c == 0.0) continue;
                    const std::size_t slot = slot_of_interval_[n];
                    if (slot != static_cast<std::size_t>(-1)) {
                        out.grad[slot] -= w * c;
                        out.hess(slot, slot) -= w * c;
                        for (std::size_t k = 0; k < p; ++k)
                            out.hess(slot, mf + k) -= w * c * s.x[k];
                    }
                }
                for (std::size_t k = 0; k < p; ++k) {
                    out.grad[mf + k] -= w * csum * s.x[k];
                    for (std::size_t l = k; l < p; ++l)
                        out.hess(mf + k, mf + l) -= w * csum * s.x[k] * s.x[l];
                }
            }

            // Right truncation: -log F(truncation_time).
            if (s.truncation_time > 0.0) {
                double bsum = 0.0;
                for (std::size_t n = 0; n < m; ++n) {
                    const double width = grid_.overlap(n, s.truncation_time);
                    const double b = width > 0.0 ? width * std::exp(rho[n]) * elp : 0.0;
                    piece[n] = b;
                    bsum += b;
                }
                bsum = std::max(bsum, 1e-300);
                out.loglik -= w * std::log(-std::expm1(-bsum));
                if (with_derivatives) {
                    const double em = std::expm1(bsum);
                    const double q = std::isinf(em) ? 0.0 : 1.0 / em;
                    if (q > 0.0) {
                        const double q1 = q * (1.0 + q);
                        for (std::size_t n = 0; n < m; ++n) {
                            const double bn = piece[n];
                            if (bn == 0.0) continue;
                            const std::size_t sn = slot_of_interval_[n];
                            if (sn != static_cast<std::size_t>(-1)) {
                                out.grad[sn] -= w * q * bn;
                                out.hess(sn, sn) -= w * q * bn;
                                for (std::size_t n2 = n; n2 < m; ++n2) {
                                    const double bn2 = piece[n2];
                                    if (bn2 == 0.0) continue;
                                    const std::size_t sn2 = slot_of_interval_[n2];
                                    if (sn2 != static_cast<std::size_t>(-1))
                                        out.hess(sn, sn2) += w * q1 * bn * bn2;
                                }
                                for (std::size_t k = 0; k < p; ++k)
                                    out.hess(sn, mf + k) += w * (q1 * bn * bsum - q * bn) * s.x[k];
                            }
                        }
                        for (std::size_t k = 0; k < p; ++k) {
                            out.grad[mf + k] -= w * q * bsum * s.x[k];
                            const double hbb = q1 * bsum * bsum - q * bsum;
                            for (std::size_t l = k; l < p; ++l)
                                out.hess(mf + k, mf + l) += w * hbb * s.x[k] * s.x[l];
                        }
                    }
                }
            }
        }

        out.data_loglik = out.loglik;

        // Ridge on coefficients.
        const double ridge = options_.ridge_penalty;
        if (ridge > 0.0) {
            for (std::size_t k = 0; k < p; ++k) {
                const double beta = theta[mf + k];
                out.loglik -= 0.5 * ridge * beta * beta;
                if (with_derivatives) {
                    out.grad[mf + k] -= ridge * beta;
                    out.hess(mf + k, mf + k) -= ridge;
                }
            }
        }

        if (with_derivatives) {
            // Mirror the upper triangle.
            for (std::size_t a = 0; a < dim(); ++a)
                for (std::size_t b = a + 1; b < dim(); ++b) out.hess(b, a) = out.hess(a, b);
        }
        return out;
    }

  private:
    TimeGrid grid_;
    std::vector<PemSubject> subjects_;
    std::size_t n_features_;
    FitOptions options_;
    std::vector<std::size_t> free_intervals_;
    std::vector<std::size_t> pinned_intervals_;
    std::vector<std::size_t> slot_of_interval_;
    double init_log_rate_ = 0.0;
};

//! Damped Newton ascent with Levenberg-style jitter when the Hessian is not
//! usable as-is (the truncated likelihood need not be globally concave).
inline void newton_maximize(const PemProblem& problem, Eigen::VectorXd& theta, FitReport& report,
                            const FitOptions& options) {
    PemEval eval = problem.evaluate(theta, true);
    int iterations = 0;
    while (iterations < options.max_iterations &&
           eval.grad.lpNorm<Eigen::Infinity>() >= options.gradient_tolerance) {
        Eigen::MatrixXd neg_hess = -eval.hess;
        const double scale = std::max(neg_hess.diagonal().maxCoeff(), 1.0);
        Eigen::VectorXd direction;
        bool have_direction = false;
        for (double jitter = 0.0; jitter <= 1e2 * scale;
             jitter = (jitter == 0.0 ? 1e-10 * scale : jitter * 10.0)) {
            Eigen::MatrixXd m = neg_hess;
            m.diagonal().array() += jitter;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
            if (ldlt.info() != Eigen::Success) continue;
            direction = ldlt.solve(eval.grad);
            if (direction.dot(eval.grad) > 0.0 && direction.allFinite()) {
                have_direction = true;
                break;
            }
        }
        if (!have_direction) break;
        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= 30; ++halving) {
            const Eigen::VectorXd candidate = theta + step * direction;
            const PemEval trial = problem.evaluate(candidate, false);
            if (std::isfinite(trial.loglik) &&
                trial.loglik > eval.loglik - 1e-12 * (1.0 + std::abs(eval.loglik))) {
                theta = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        eval = problem.evaluate(theta, true);
        ++iterations;
    }
    report.iterations = iterations;
    report.gradient_norm = eval.grad.lpNorm<Eigen::Infinity>();
    report.log_likelihood = eval.data_loglik;
    report.converged = report.gradient_norm < options.gradient_tolerance;

    // Standard errors from the observed information at the solution.
    const std::size_t d = problem.dim();
    Eigen::MatrixXd info = -eval.hess;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    if (ldlt.info() == Eigen::Success) cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    report.std_errors.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        report.std_errors[i] = std::sqrt(std::max(cov(i, i), 0.0));
}

inline std::vector<double> fit_weights(const ObservedSnapshot& snapshot, WeightScheme scheme) {
    if (scheme == WeightScheme::unit)
        return std::vector<double>(snapshot.portfolio->claims.size(), 1.0);
    return claim_paid_amounts(snapshot);
}

//! Scale weights to mean one over the used subjects so the gradient tolerance
//! means the same thing under both schemes.
inline void normalize_weights(std::vector<PemSubject>& subjects) {
    double total = 0.0;
    for (const PemSubject& s : subjects) total += s.weight;
    if (total <= 0.0) throw std::invalid_argument("fit: all subject weights are zero");
    const double scale = static_cast<double>(subjects.size()) / total;
    for (PemSubject& s : subjects) s.weight *= scale;
}

inline PemModel finish_fit(PemProblem& problem, const TimeGrid& grid, ModelKind kind,
                           std::vector<std::string> feature_names, const FitOptions& options) {
    Eigen::VectorXd theta = problem.initial_theta();
    FitReport report;
    newton_maximize(problem, theta, report, options);
    report.pinned_intervals = problem.pinned();

    PemModel model;
    model.kind = kind;
    model.grid = grid;
    model.log_baseline = problem.full_log_baseline(theta);
    model.feature_names = std::move(feature_names);
    model.coefficients.resize(model.feature_names.size());
    const std::size_t mf = grid.intervals() - problem.pinned().size();
    for (std::size_t k = 0; k < model.coefficients.size(); ++k)
        model.coefficients[k] = theta[mf + k];

    // Map free-parameter standard errors to the full layout (pinned: 0).
    std::vector<double> se(grid.intervals() + model.coefficients.size(), 0.0);
    std::size_t slot = 0;
    for (std::size_t n = 0; n < grid.intervals(); ++n) {
        const bool pinned = std::find(report.pinned_intervals.begin(),
                                      report.pinned_intervals.end(),
                                      n) != report.pinned_intervals.end();
        if (!pinned) se[n] = report.std_errors[slot++];
    }
    for (std::size_t k = 0; k < model.coefficients.size(); ++k)
        se[grid.intervals() + k] = report.std_errors[slot++];
    report.std_errors = std::move(se);

    model.fit = std::move(report);
    model.check_shape();
    return model;
}

//! Likelihood-unit construction for the reporting model: one subject per
//! reported claim, event at U, exposure over [0, U], truncation bound
//! tau - T. The adjustment term is dropped for claims whose full settlement
//! window is already observed (tau - T >= omega).
inline std::vector<PemSubject> reporting_subjects(const ObservedSnapshot& snapshot,
                                                  const TimeGrid& grid,
                                                  const FitOptions& options) {
    const Portfolio& portfolio = *snapshot.portfolio;
    const double omega = grid.omega();
    const double tau = snapshot.valuation_time;
    if (snapshot.reported_claims.empty())
        throw std::invalid_argument("fit_reporting_model: no events to fit");

    const WeightScheme scheme = options.weight_scheme.value_or(WeightScheme::amount);
    const std::vector<double> weights = fit_weights(snapshot, scheme);

    std::vector<PemSubject> subjects;
    subjects.reserve(snapshot.reported_claims.size());
    for (std::size_t j : snapshot.reported_claims) {
        const Claim& c = portfolio.claims[j];
        const double delay = c.reporting_time - c.accident_time;
        if (delay > omega + 1e-9)
            throw std::invalid_argument("fit_reporting_model: claim '" + c.id +
                                        "' has reporting delay beyond omega");
        PemSubject s;
        s.x = c.covariates;
        s.weight = weights[j];
        s.event_times.push_back(std::min(delay, omega));
        s.exposure_time = std::min(delay, omega);
        const double bound = tau - c.accident_time;
        if (options.adjust_truncation && bound < omega) s.truncation_time = bound;
        subjects.push_back(std::move(s));
    }
    normalize_weights(subjects);
    return subjects;
}

//! Likelihood units for the payment model: one subject per reported claim
//! with positive window, events at the observed payment delays, exposure
//! E_j = min(tau - R, omega - U). The realized reporting delay joins the
//! claim covariates as a feature.
inline std::vector<PemSubject> payment_subjects(const ObservedSnapshot& snapshot,
                                                const TimeGrid& grid,
                                                const FitOptions& options) {
    const Portfolio& portfolio = *snapshot.portfolio;
    const double omega = grid.omega();
    const double tau = snapshot.valuation_time;
    if (snapshot.payments.empty())
        throw std::invalid_argument("fit_payment_model: no events to fit");

    const WeightScheme scheme = options.weight_scheme.value_or(WeightScheme::unit);
    const std::vector<double> weights = fit_weights(snapshot, scheme);
    const std::vector<double> claim_paid = claim_paid_amounts(snapshot);
    std::vector<double> claim_events(portfolio.claims.size(), 0.0);
    for (const ObservedPayment& p : snapshot.payments) claim_events[p.claim_index] += 1.0;

    std::vector<PemSubject> subjects;
    std::vector<std::size_t> subject_of_claim(portfolio.claims.size(),
                                              static_cast<std::size_t>(-1));
    for (std::size_t j : snapshot.reported_claims) {
        const Claim& c = portfolio.claims[j];
        const double delay = c.reporting_time - c.accident_time;
        const double window = std::min(tau - c.reporting_time, omega - delay);
        if (window <= 0.0) continue;
        PemSubject s;
        s.x = c.covariates;
        s.x.push_back(delay);
        if (options.include_amount)
            s.x.push_back(claim_events[j] > 0.0 ? claim_paid[j] / claim_events[j] : 0.0);
        s.weight = weights[j];
        s.exposure_time = window;
        subject_of_claim[j] = subjects.size();
        subjects.push_back(std::move(s));
    }
    for (const ObservedPayment& p : snapshot.payments) {
        const std::size_t i = subject_of_claim[p.claim_index];
        if (i == static_cast<std::size_t>(-1)) continue;  // zero-width window
        subjects[i].event_times.push_back(std::min(p.payment_delay, subjects[i].exposure_time));
    }
    normalize_weights(subjects);
    return subjects;
}

}  // namespace detail

inline PemModel fit_reporting_model(const ObservedSnapshot& snapshot, const TimeGrid& grid,
                                    const FitOptions& options = {}) {
    options.validate();
    auto subjects = detail::reporting_subjects(snapshot, grid, options);
    detail::PemProblem problem(grid, std::move(subjects),
                               snapshot.portfolio->feature_names.size(), options);
    return detail::finish_fit(problem, grid, ModelKind::reporting_delay,
                              snapshot.portfolio->feature_names, options);
}

inline PemModel fit_payment_model(const ObservedSnapshot& snapshot, const TimeGrid& grid,
                                  const FitOptions& options = {}) {
    options.validate();
    auto subjects = detail::payment_subjects(snapshot, grid, options);
    std::vector<std::string> feature_names = snapshot.portfolio->feature_names;
    feature_names.push_back("reporting_delay");
    if (options.include_amount) feature_names.push_back("claim_mean_amount");
    detail::PemProblem problem(grid, std::move(subjects), feature_names.size(), options);
    return detail::finish_fit(problem, grid, ModelKind::payment_intensity,
                              std::move(feature_names), options);
}

}  // namespace ipwres
