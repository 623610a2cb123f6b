#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ipwres/csv.hpp"
#include "ipwres/portfolio.hpp"

namespace ipwres {

// claims.csv: claim_id,accident_time,reporting_time,<feature_1>,...,<feature_k>
// payments.csv: claim_id,payment_time,amount
// Times are real-valued months since the run epoch.

inline Portfolio load_portfolio(const std::string& claims_file, const std::string& payments_file,
                                double max_settlement) {
    if (!(max_settlement > 0.0))
        throw std::invalid_argument("load_portfolio: max settlement time must be positive");

    const CsvTable claims_csv = read_csv(claims_file);
    if (claims_csv.header.size() < 3 || claims_csv.header[0] != "claim_id" ||
        claims_csv.header[1] != "accident_time" || claims_csv.header[2] != "reporting_time")
        throw std::runtime_error(claims_file +
                                 ": header must start with claim_id,accident_time,reporting_time");

    Portfolio portfolio;
    portfolio.max_settlement = max_settlement;
    portfolio.feature_names.assign(claims_csv.header.begin() + 3, claims_csv.header.end());

    std::unordered_map<std::string, std::size_t> claim_index;
    claim_index.reserve(claims_csv.rows.size());
    for (std::size_t r = 0; r < claims_csv.rows.size(); ++r) {
        const auto& row = claims_csv.rows[r];
        const std::size_t line = claims_csv.line_numbers[r];
        Claim c;
        c.id = row[0];
        c.accident_time = parse_csv_double(row[1], claims_file, line, "accident_time");
        c.reporting_time = parse_csv_double(row[2], claims_file, line, "reporting_time");
        for (std::size_t k = 3; k < row.size(); ++k)
            c.covariates.push_back(
                parse_csv_double(row[k], claims_file, line, claims_csv.header[k]));
        if (!claim_index.emplace(c.id, portfolio.claims.size()).second) {
            std::ostringstream msg;
            msg << claims_file << ":" << line << ": duplicate claim_id '" << c.id << "'";
            throw std::runtime_error(msg.str());
        }
        portfolio.claims.push_back(std::move(c));
    }

    const CsvTable pay_csv = read_csv(payments_file);
    const std::vector<std::string> expected{"claim_id", "payment_time", "amount"};
    if (pay_csv.header != expected)
        throw std::runtime_error(payments_file + ": header must be claim_id,payment_time,amount");
    for (std::size_t r = 0; r < pay_csv.rows.size(); ++r) {
        const auto& row = pay_csv.rows[r];
        const std::size_t line = pay_csv.line_numbers[r];
        const auto it = claim_index.find(row[0]);
        if (it == claim_index.end()) {
            std::ostringstream msg;
            msg << payments_file << ":" << line << ": unknown claim '" << row[0] << "'";
            throw std::runtime_error(msg.str());
        }
        Payment p;
        p.claim_index = it->second;
        p.payment_time = parse_csv_double(row[1], payments_file, line, "payment_time");
        p.amount = parse_csv_double(row[2], payments_file, line, "amount");
        portfolio.payments.push_back(p);
    }

    portfolio.validate();
    return portfolio;
}

inline void write_claims_csv(const Portfolio& portfolio, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "claim_id,accident_time,reporting_time";
    for (const auto& name : portfolio.feature_names) out << ',' << name;
    out << '\n';
    for (const Claim& c : portfolio.claims) {
        out << c.id << ',' << format_double(c.accident_time) << ','
            << format_double(c.reporting_time);
        for (double x : c.covariates) out << ',' << format_double(x);
        out << '\n';
    }
}

inline void write_payments_csv(const Portfolio& portfolio, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "claim_id,payment_time,amount\n";
    for (const Payment& p : portfolio.payments) {
        out << portfolio.claims[p.claim_index].id << ',' << format_double(p.payment_time) << ','
            << format_double(p.amount) << '\n';
    }
}

}  // namespace ipwres
