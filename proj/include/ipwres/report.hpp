#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipwres/csv.hpp"
#include "ipwres/estimators.hpp"
#include "ipwres/portfolio.hpp"

namespace ipwres {

inline void write_reserves_csv(const std::vector<ReserveEstimate>& rows,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "kind,point,variance,ci_lower,ci_upper,alpha,n_paid,trimmed\n";
    for (const ReserveEstimate& r : rows) {
        out << to_string(r.kind) << ',' << format_double(r.point) << ','
            << format_double(r.variance) << ',' << format_double(r.ci_lower) << ','
            << format_double(r.ci_upper) << ',' << format_double(r.alpha) << ',' << r.n_paid
            << ',' << (r.trimmed ? "true" : "false") << '\n';
    }
}

inline nlohmann::json reserve_json(const ReserveEstimate& r) {
    return nlohmann::json{{"kind", to_string(r.kind)},     {"point", r.point},
                          {"variance", r.variance},        {"ci_lower", r.ci_lower},
                          {"ci_upper", r.ci_upper},        {"alpha", r.alpha},
                          {"n_paid", r.n_paid},            {"trimmed", r.trimmed}};
}

inline nlohmann::json reserves_json(double tau, const std::vector<ReserveEstimate>& rows) {
    nlohmann::json j;
    j["tau"] = tau;
    j["reserves"] = nlohmann::json::array();
    for (const ReserveEstimate& r : rows) j["reserves"].push_back(reserve_json(r));
    return j;
}

//! Per-payment weight diagnostics for the --explain report.
inline nlohmann::json explain_json(const ObservedSnapshot& snapshot,
                                   const InclusionProbabilities& probs) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < snapshot.payments.size(); ++i) {
        const ObservedPayment& p = snapshot.payments[i];
        arr.push_back({{"payment_index", p.payment_index},
                       {"claim_index", p.claim_index},
                       {"amount", p.amount},
                       {"pi_u", probs.pi_u[i]},
                       {"pi_v", probs.pi_v[i]},
                       {"pi", probs.pi[i]},
                       {"ibns_weight", (1.0 - probs.pi[i]) / probs.pi[i] * p.amount}});
    }
    return arr;
}

struct ErrorMetrics {
    double me = 0.0;    // mean error (estimate - truth)
    double rmse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // relative to |truth|
};

inline ErrorMetrics compute_error_metrics(const std::vector<double>& estimates,
                                          const std::vector<double>& truths) {
    if (estimates.size() != truths.size() || estimates.empty())
        throw std::invalid_argument("compute_error_metrics: size mismatch or empty input");
    ErrorMetrics m;
    const double n = static_cast<double>(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double e = estimates[i] - truths[i];
        m.me += e / n;
        m.rmse += e * e / n;
        m.mae += std::abs(e) / n;
        m.mape += (truths[i] != 0.0 ? std::abs(e) / std::abs(truths[i]) : 0.0) / n;
    }
    m.rmse = std::sqrt(m.rmse);
    return m;
}

}  // namespace ipwres
