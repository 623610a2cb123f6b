// ipwres: claims-reserving pipeline over granular payment data.
//
// Subcommands: simulate | fit | reserve | triangle | compare | residuals.
// Every subcommand reads a flat JSON config plus --key value overrides.
// Exit codes: 0 success, 2 data/config error, 3 fit non-convergence.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ipwres/ipwres.hpp"

using nlohmann::json;
using namespace ipwres;

namespace {

struct FitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string claims_file;
    std::string payments_file;
    std::string truth_json;     // provided ground truth for compare
    std::string output_dir = ".";

    std::vector<double> taus;
    double omega = 24.0;

    double grid_width = 1.0;
    std::vector<double> grid_cuts;  // explicit cuts override the width

    std::string weights_reporting = "amount";
    std::string weights_payment = "unit";
    bool include_amount = false;
    bool adjust_truncation = true;
    int max_iterations = 100;
    double gradient_tolerance = 1e-8;
    double ridge_penalty = 1e-8;

    bool trim = false;
    double trim_threshold = 0.03;  // relative difference that retains the trimmed estimate
    double alpha = 0.05;
    double probability_floor = 1e-6;

    double origin_width = 1.0;
    double dev_width = 1.0;
    std::string measure = "amount";

    double window = 0.0;       // rolling fit window in months; 0 = all history
    double refit_every = 0.0;  // reuse fitted models within buckets; 0 = refit per tau
    std::string probabilities = "fitted";  // fitted | oracle | empirical
    bool explain = false;

    // Generator keys (present when the config describes a simulation).
    bool has_sim = false;
    std::uint64_t seed = 1;
    double horizon = 36.0;
    double claim_rate = 10.0;
    std::vector<double> reporting_cuts, reporting_rates, beta;
    std::vector<double> payment_cuts, payment_rates, alpha_coef;
    double alpha_u = 0.0;
    std::vector<std::string> covariates;
    double amount_mu = 4.0;
    double amount_sigma = 1.0;
    double amount_delay_corr = 0.0;

    int threads = 1;  // upper bound from IPWRESERVE_THREADS; evaluation is sequential
};

template <typename T>
void read_key(const json& j, const char* key, T& value) {
    if (j.contains(key)) value = j.at(key).get<T>();
}

void apply_json(RunConfig& cfg, const json& j) {
    read_key(j, "claims", cfg.claims_file);
    read_key(j, "payments", cfg.payments_file);
    read_key(j, "truth", cfg.truth_json);
    read_key(j, "output_dir", cfg.output_dir);
    if (j.contains("tau")) {
        cfg.taus.clear();
        if (j.at("tau").is_array())
            cfg.taus = j.at("tau").get<std::vector<double>>();
        else
            cfg.taus.push_back(j.at("tau").get<double>());
    }
    read_key(j, "omega", cfg.omega);
    read_key(j, "grid_width", cfg.grid_width);
    read_key(j, "grid_cuts", cfg.grid_cuts);
    read_key(j, "weights_reporting", cfg.weights_reporting);
    read_key(j, "weights_payment", cfg.weights_payment);
    read_key(j, "include_amount", cfg.include_amount);
    read_key(j, "adjust_truncation", cfg.adjust_truncation);
    read_key(j, "max_iterations", cfg.max_iterations);
    read_key(j, "gradient_tolerance", cfg.gradient_tolerance);
    read_key(j, "ridge_penalty", cfg.ridge_penalty);
    read_key(j, "trim", cfg.trim);
    read_key(j, "trim_threshold", cfg.trim_threshold);
    read_key(j, "alpha", cfg.alpha);
    read_key(j, "probability_floor", cfg.probability_floor);
    read_key(j, "origin_width", cfg.origin_width);
    read_key(j, "dev_width", cfg.dev_width);
    read_key(j, "measure", cfg.measure);
    read_key(j, "window", cfg.window);
    read_key(j, "refit_every", cfg.refit_every);
    read_key(j, "probabilities", cfg.probabilities);
    read_key(j, "explain", cfg.explain);

    cfg.has_sim = cfg.has_sim || j.contains("claim_rate") || j.contains("reporting_rates");
    read_key(j, "seed", cfg.seed);
    read_key(j, "horizon", cfg.horizon);
    read_key(j, "claim_rate", cfg.claim_rate);
    read_key(j, "reporting_cuts", cfg.reporting_cuts);
    read_key(j, "reporting_rates", cfg.reporting_rates);
    read_key(j, "beta", cfg.beta);
    read_key(j, "payment_cuts", cfg.payment_cuts);
    read_key(j, "payment_rates", cfg.payment_rates);
    read_key(j, "alpha_coef", cfg.alpha_coef);
    read_key(j, "alpha_u", cfg.alpha_u);
    read_key(j, "covariates", cfg.covariates);
    read_key(j, "amount_mu", cfg.amount_mu);
    read_key(j, "amount_sigma", cfg.amount_sigma);
    read_key(j, "amount_delay_corr", cfg.amount_delay_corr);
}

SimConfig sim_config_of(const RunConfig& cfg) {
    if (!cfg.has_sim)
        throw std::runtime_error("config has no generator keys (claim_rate, reporting_rates, ...)");
    SimConfig c;
    c.horizon = cfg.horizon;
    c.claim_rate = cfg.claim_rate;
    c.omega = cfg.omega;
    c.seed = cfg.seed;
    c.reporting_hazard = {TimeGrid(cfg.reporting_cuts), cfg.reporting_rates};
    c.payment_intensity = {TimeGrid(cfg.payment_cuts), cfg.payment_rates};
    c.beta = cfg.beta;
    c.alpha = cfg.alpha_coef;
    c.alpha_u = cfg.alpha_u;
    for (const std::string& spec : cfg.covariates) {
        CovariateSpec cov;
        std::string kind = spec;
        const auto colon = spec.find(':');
        if (colon != std::string::npos) {
            kind = spec.substr(0, colon);
            cov.name = spec.substr(colon + 1);
        }
        if (kind == "binary") cov.kind = CovariateKind::symmetric_binary;
        else if (kind == "normal") cov.kind = CovariateKind::standard_normal;
        else throw std::runtime_error("unknown covariate kind '" + kind + "'");
        c.covariates.push_back(cov);
    }
    c.amount_mu = cfg.amount_mu;
    c.amount_sigma = cfg.amount_sigma;
    c.amount_delay_corr = cfg.amount_delay_corr;
    c.validate();
    return c;
}

WeightScheme parse_weights(const std::string& name) {
    if (name == "unit") return WeightScheme::unit;
    if (name == "amount") return WeightScheme::amount;
    throw std::runtime_error("unknown weight scheme '" + name + "'");
}

FitOptions fit_options_of(const RunConfig& cfg, bool reporting) {
    FitOptions o;
    o.weight_scheme = parse_weights(reporting ? cfg.weights_reporting : cfg.weights_payment);
    o.max_iterations = cfg.max_iterations;
    o.gradient_tolerance = cfg.gradient_tolerance;
    o.ridge_penalty = cfg.ridge_penalty;
    o.adjust_truncation = cfg.adjust_truncation;
    o.include_amount = cfg.include_amount;
    return o;
}

TimeGrid fit_grid_of(const RunConfig& cfg) {
    if (!cfg.grid_cuts.empty()) {
        const TimeGrid grid(cfg.grid_cuts);
        if (std::abs(grid.omega() - cfg.omega) > 1e-9)
            throw std::runtime_error("grid_cuts must terminate at omega");
        return grid;
    }
    return TimeGrid::regular(cfg.omega, cfg.grid_width);
}

std::string out_path(const RunConfig& cfg, const std::string& stem, std::size_t idx,
                     std::size_t count, const std::string& ext) {
    std::filesystem::create_directories(cfg.output_dir);
    std::string name = stem;
    if (count > 1) {
        std::ostringstream suffix;
        suffix << '_' << std::setw(3) << std::setfill('0') << (idx + 1);
        name += suffix.str();
    }
    return (std::filesystem::path(cfg.output_dir) / (name + ext)).string();
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Portfolio acquisition and model fitting
// ---------------------------------------------------------------------------

struct Workspace {
    RunConfig cfg;
    Portfolio portfolio;
    std::optional<SimConfig> sim;
};

Workspace open_workspace(const RunConfig& cfg, bool need_data = true) {
    Workspace w;
    w.cfg = cfg;
    if (cfg.has_sim) w.sim = sim_config_of(cfg);
    if (!cfg.claims_file.empty() || !cfg.payments_file.empty()) {
        if (cfg.claims_file.empty() || cfg.payments_file.empty())
            throw std::runtime_error("both claims and payments files are required");
        w.portfolio = load_portfolio(cfg.claims_file, cfg.payments_file, cfg.omega);
    } else if (w.sim) {
        w.portfolio = simulate_portfolio(*w.sim).population;
    } else if (need_data) {
        throw std::runtime_error("no input data: set claims/payments or generator keys");
    }
    if (cfg.taus.empty()) throw std::runtime_error("no valuation dates: set tau");
    return w;
}

//! Claims with accidents inside [lo, inf) and their payments, reindexed.
Portfolio window_portfolio(const Portfolio& full, double lo) {
    Portfolio p;
    p.max_settlement = full.max_settlement;
    p.feature_names = full.feature_names;
    std::vector<std::size_t> remap(full.claims.size(), static_cast<std::size_t>(-1));
    for (std::size_t j = 0; j < full.claims.size(); ++j) {
        if (full.claims[j].accident_time >= lo) {
            remap[j] = p.claims.size();
            p.claims.push_back(full.claims[j]);
        }
    }
    for (const Payment& pay : full.payments) {
        if (remap[pay.claim_index] == static_cast<std::size_t>(-1)) continue;
        Payment q = pay;
        q.claim_index = remap[pay.claim_index];
        p.payments.push_back(q);
    }
    return p;
}

struct FittedModels {
    PemModel reporting;
    PemModel payment;
    double fitted_at = 0.0;
};

void require_converged(const PemModel& model, const std::string& which) {
    if (model.fit.converged) return;
    std::ostringstream msg;
    msg << which << " model did not converge: iterations=" << model.fit.iterations
        << " gradient_norm=" << model.fit.gradient_norm
        << " log_likelihood=" << model.fit.log_likelihood;
    throw FitFailure(msg.str());
}

FittedModels fit_models_at(const Workspace& w, double tau_fit) {
    const Portfolio* source = &w.portfolio;
    Portfolio windowed;
    if (w.cfg.window > 0.0) {
        windowed = window_portfolio(w.portfolio, tau_fit - w.cfg.window);
        source = &windowed;
    }
    const ObservedSnapshot s = snapshot(*source, tau_fit);
    const TimeGrid grid = fit_grid_of(w.cfg);
    FittedModels m;
    m.fitted_at = tau_fit;
    m.reporting = fit_reporting_model(s, grid, fit_options_of(w.cfg, true));
    require_converged(m.reporting, "reporting");
    m.payment = fit_payment_model(s, grid, fit_options_of(w.cfg, false));
    require_converged(m.payment, "payment");
    return m;
}

//! Fits once per refit bucket and reuses the models for later taus in the
//! same bucket.
class ModelProvider {
  public:
    explicit ModelProvider(const Workspace& w) : w_(w) {}

    const FittedModels& at(double tau) {
        const double key =
            w_.cfg.refit_every > 0.0
                ? std::floor((tau - w_.cfg.taus.front()) / w_.cfg.refit_every)
                : tau;
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, fit_models_at(w_, tau)).first;
        return it->second;
    }

  private:
    const Workspace& w_;
    std::map<double, FittedModels> cache_;
};

InclusionProbabilities probabilities_at(const Workspace& w, ModelProvider& models,
                                        const ObservedSnapshot& s) {
    if (w.cfg.probabilities == "oracle") {
        if (!w.sim) throw std::runtime_error("oracle probabilities need generator keys");
        return oracle_inclusion(*w.sim, s, w.cfg.probability_floor);
    }
    if (w.cfg.probabilities == "fitted") {
        const FittedModels& m = models.at(s.valuation_time);
        return compute_inclusion_probabilities(m.reporting, m.payment, s,
                                               w.cfg.probability_floor);
    }
    throw std::runtime_error("probability source '" + w.cfg.probabilities +
                             "' not usable here (use fitted or oracle)");
}

// ---------------------------------------------------------------------------
// Reserve assembly (with the optional trimming adjustment)
// ---------------------------------------------------------------------------

struct ReserveSet {
    std::vector<ReserveEstimate> rows;  // IBNS, RBNS, IBNR, COUNT
};

bool retain_trimmed(double raw, double trimmed, double threshold) {
    return raw > 0.0 && std::abs(raw - trimmed) / raw > threshold;
}

ReserveSet make_reserves(const ObservedSnapshot& s, const InclusionProbabilities& probs,
                         const RunConfig& cfg) {
    std::vector<double> amounts;
    amounts.reserve(s.payments.size());
    for (const ObservedPayment& p : s.payments) amounts.push_back(p.amount);

    ReserveSet out;
    if (amounts.empty()) {
        for (ReserveKind kind : {ReserveKind::ibns, ReserveKind::rbns, ReserveKind::ibnr,
                                 ReserveKind::count}) {
            ReserveEstimate zero;
            zero.kind = kind;
            zero.alpha = cfg.alpha;
            out.rows.push_back(zero);
        }
        return out;
    }

    const std::vector<double>* pi = &probs.pi;
    const std::vector<double>* pi_v = &probs.pi_v;
    TrimmedProbabilities trimmed_pi, trimmed_pi_v;
    bool ibns_trimmed = false, rbns_trimmed = false;
    if (cfg.trim) {
        trimmed_pi = trim_probabilities(probs.pi);
        trimmed_pi_v = trim_probabilities(probs.pi_v);
        const double raw_ibns = ibns_reserve(amounts, probs.pi, cfg.alpha).point;
        const double adj_ibns = ibns_reserve(amounts, trimmed_pi.trimmed, cfg.alpha).point;
        ibns_trimmed = retain_trimmed(raw_ibns, adj_ibns, cfg.trim_threshold);
        const double raw_rbns = rbns_reserve(amounts, probs.pi_v, cfg.alpha).point;
        const double adj_rbns = rbns_reserve(amounts, trimmed_pi_v.trimmed, cfg.alpha).point;
        rbns_trimmed = retain_trimmed(raw_rbns, adj_rbns, cfg.trim_threshold);
        if (ibns_trimmed) pi = &trimmed_pi.trimmed;
        if (rbns_trimmed) pi_v = &trimmed_pi_v.trimmed;
    }

    ReserveEstimate ibns = ibns_reserve(amounts, *pi, cfg.alpha);
    ibns.trimmed = ibns_trimmed;
    ReserveEstimate rbns = rbns_reserve(amounts, *pi_v, cfg.alpha);
    rbns.trimmed = rbns_trimmed;

    // IBNR as the per-payment difference of the (possibly trimmed) summands,
    // which keeps IBNS = RBNS + IBNR exact under any retention choice.
    std::vector<double> ibnr_terms(amounts.size());
    for (std::size_t i = 0; i < amounts.size(); ++i)
        ibnr_terms[i] = (1.0 - (*pi)[i]) / (*pi)[i] * amounts[i] -
                        (1.0 - (*pi_v)[i]) / (*pi_v)[i] * amounts[i];
    ReserveEstimate ibnr = reserve_from_summands(ReserveKind::ibnr, ibnr_terms, cfg.alpha);
    ibnr.trimmed = ibns_trimmed || rbns_trimmed;

    ReserveEstimate count = outstanding_count(*pi, cfg.alpha);
    count.trimmed = ibns_trimmed;

    out.rows = {ibns, rbns, ibnr, count};
    return out;
}

// ---------------------------------------------------------------------------
// Chain-Ladder columns for the comparison report
// ---------------------------------------------------------------------------

struct ClColumns {
    double ibns = std::numeric_limits<double>::quiet_NaN();
    double rbns = std::numeric_limits<double>::quiet_NaN();
    double ibnr = std::numeric_limits<double>::quiet_NaN();
};

ClColumns chain_ladder_columns(const ObservedSnapshot& s, const RunConfig& cfg) {
    ClColumns out;
    try {
        const RunoffTriangle tri =
            build_triangle(s, cfg.origin_width, cfg.dev_width, TriangleMeasure::amount);
        const auto f = estimate_factors(s, tri.dev_cuts, ClWeight::amount, cfg.origin_width);
        out.ibns = cl_project(tri, f).total_reserve;
    } catch (const std::invalid_argument&) {
        return out;  // triangle not estimable at this date
    }
    try {
        // Reported-claims development (delay from reporting) projects the
        // ultimate of reported claims; the remainder is the IBNR share.
        const RunoffTriangle tri = build_triangle(s, cfg.origin_width, cfg.dev_width,
                                                  TriangleMeasure::amount, DevClock::reporting);
        const auto f = estimate_factors(s, tri.dev_cuts, ClWeight::amount, cfg.origin_width,
                                        DevClock::reporting);
        out.rbns = cl_project(tri, f).total_reserve;
        out.ibnr = out.ibns - out.rbns;
    } catch (const std::invalid_argument&) {
    }
    return out;
}

double empirical_ibns(const ObservedSnapshot& s, const RunConfig& cfg) {
    const RunoffTriangle tri =
        build_triangle(s, cfg.origin_width, cfg.dev_width, TriangleMeasure::amount);
    return ipw_complete_triangle(s, tri, ClWeight::amount).total_reserve;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int do_simulate(const RunConfig& cfg) {
    const SimConfig sim = sim_config_of(cfg);
    const GroundTruth truth = simulate_portfolio(sim);
    std::filesystem::create_directories(cfg.output_dir);
    const auto dir = std::filesystem::path(cfg.output_dir);
    write_claims_csv(truth.population, (dir / "claims.csv").string());
    write_payments_csv(truth.population, (dir / "payments.csv").string());

    json reserves = json::array();
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        write_truth_csv(truth, cfg.taus[k],
                        out_path(cfg, "truth", k, cfg.taus.size(), ".csv"));
        reserves.push_back(reserves_truth_json(truth, cfg.taus[k]));
    }
    write_json_file(reserves, (dir / "reserves_truth.json").string());
    std::cout << "simulated " << truth.population.claims.size() << " claims, "
              << truth.population.payments.size() << " payments -> " << cfg.output_dir
              << std::endl;
    return 0;
}

int do_fit(const RunConfig& cfg) {
    Workspace w = open_workspace(cfg);
    ModelProvider models(w);
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        const FittedModels& m = models.at(cfg.taus[k]);
        write_json_file(to_json(m.reporting),
                        out_path(cfg, "model_reporting", k, cfg.taus.size(), ".json"));
        write_json_file(to_json(m.payment),
                        out_path(cfg, "model_payment", k, cfg.taus.size(), ".json"));
        std::cout << "tau=" << cfg.taus[k] << " reporting: iterations="
                  << m.reporting.fit.iterations << " loglik=" << m.reporting.fit.log_likelihood
                  << "; payment: iterations=" << m.payment.fit.iterations
                  << " loglik=" << m.payment.fit.log_likelihood << std::endl;
    }
    return 0;
}

int do_reserve(const RunConfig& cfg) {
    Workspace w = open_workspace(cfg);
    ModelProvider models(w);
    json mirror = json::array();
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        const double tau = cfg.taus[k];
        const ObservedSnapshot s = snapshot(w.portfolio, tau);
        const InclusionProbabilities probs = probabilities_at(w, models, s);
        const ReserveSet set = make_reserves(s, probs, cfg);
        write_reserves_csv(set.rows, out_path(cfg, "reserves", k, cfg.taus.size(), ".csv"));
        json entry = reserves_json(tau, set.rows);
        entry["paid"] = paid_amount(s);
        entry["n_floored"] = probs.n_floored;
        if (cfg.explain) entry["payments"] = explain_json(s, probs);
        mirror.push_back(entry);
        std::cout << "tau=" << tau;
        for (const ReserveEstimate& r : set.rows)
            std::cout << ' ' << to_string(r.kind) << '=' << r.point;
        std::cout << std::endl;
    }
    write_json_file(mirror,
                    (std::filesystem::path(cfg.output_dir) / "reserves.json").string());
    return 0;
}

int do_triangle(const RunConfig& cfg) {
    Workspace w = open_workspace(cfg);
    const TriangleMeasure measure =
        cfg.measure == "count" ? TriangleMeasure::count : TriangleMeasure::amount;
    const ClWeight scheme = cfg.measure == "count" ? ClWeight::unit : ClWeight::amount;
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        const double tau = cfg.taus[k];
        const ObservedSnapshot s = snapshot(w.portfolio, tau);
        const RunoffTriangle tri = build_triangle(s, cfg.origin_width, cfg.dev_width, measure);
        write_triangle_csv(tri, out_path(cfg, "triangle", k, cfg.taus.size(), ".csv"));
        // Development steps beyond the oldest observable age have no data yet;
        // emit factors for the estimable prefix of cuts.
        std::vector<double> cuts;
        for (double t : tri.dev_cuts)
            if (t <= tau + 1e-9) cuts.push_back(t);
        DevelopmentFactors f;
        f.scheme = scheme;
        if (cuts.size() >= 2) f = estimate_factors(s, cuts, scheme, cfg.origin_width);
        write_factors_csv(f, out_path(cfg, "factors", k, cfg.taus.size(), ".csv"));
    }
    return 0;
}

int do_residuals(const RunConfig& cfg) {
    Workspace w = open_workspace(cfg);
    ModelProvider models(w);
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        const double tau = cfg.taus[k];
        const ObservedSnapshot s = snapshot(w.portfolio, tau);
        const FittedModels& m = models.at(tau);
        const std::vector<double> rep = pseudo_residuals(m.reporting, s);
        const std::vector<double> pay = pseudo_residuals(m.payment, s);

        {
            std::ofstream out(out_path(cfg, "residuals_reporting", k, cfg.taus.size(), ".csv"));
            out << "claim_id,residual\n";
            for (std::size_t i = 0; i < rep.size(); ++i)
                out << s.claim(s.reported_claims[i]).id << ',' << format_double(rep[i]) << '\n';
        }
        {
            std::ofstream out(out_path(cfg, "residuals_payment", k, cfg.taus.size(), ".csv"));
            out << "payment_row,residual\n";
            for (std::size_t i = 0; i < pay.size(); ++i)
                out << s.payments[i].payment_index << ',' << format_double(pay[i]) << '\n';
        }
        std::cout << "tau=" << tau << " reporting KS=" << ks_statistic_normal(rep)
                  << " (1% critical " << ks_critical_value(rep.size(), 0.01) << ")"
                  << " payment KS=" << ks_statistic_normal(pay) << " (1% critical "
                  << ks_critical_value(pay.size(), 0.01) << ")" << std::endl;
    }
    return 0;
}

struct CompareRow {
    double tau = 0.0;
    std::string kind;
    double truth = std::numeric_limits<double>::quiet_NaN();
    double ipw = std::numeric_limits<double>::quiet_NaN();
    double ipw_lower = std::numeric_limits<double>::quiet_NaN();
    double ipw_upper = std::numeric_limits<double>::quiet_NaN();
    double cl = std::numeric_limits<double>::quiet_NaN();
};

int do_compare(const RunConfig& cfg) {
    Workspace w = open_workspace(cfg);
    ModelProvider models(w);

    // Truth per tau: from the generator, or from a provided reserves file.
    std::map<double, TrueReserves> truths;
    if (w.sim && cfg.claims_file.empty()) {
        const GroundTruth truth{*w.sim, w.portfolio};
        for (double tau : cfg.taus) truths[tau] = true_reserves(truth, tau);
    } else if (!cfg.truth_json.empty()) {
        std::ifstream in(cfg.truth_json);
        if (!in) throw std::runtime_error("cannot open truth file: " + cfg.truth_json);
        json j;
        in >> j;
        for (const auto& entry : j) {
            TrueReserves r;
            r.ibns = entry.at("ibns").get<double>();
            r.rbns = entry.at("rbns").get<double>();
            r.ibnr = entry.at("ibnr").get<double>();
            truths[entry.at("tau").get<double>()] = r;
        }
    } else if (w.sim) {
        const GroundTruth truth{*w.sim, w.portfolio};
        for (double tau : cfg.taus) truths[tau] = true_reserves(truth, tau);
    } else {
        throw std::runtime_error("compare needs generator keys or a truth file");
    }

    std::vector<CompareRow> rows;
    for (double tau : cfg.taus) {
        const auto it = truths.find(tau);
        if (it == truths.end())
            throw std::runtime_error("no ground truth for tau=" + std::to_string(tau));
        const ObservedSnapshot s = snapshot(w.portfolio, tau);
        const ClColumns cl = chain_ladder_columns(s, cfg);

        if (cfg.probabilities == "empirical") {
            CompareRow row;
            row.tau = tau;
            row.kind = "IBNS";
            row.truth = it->second.ibns;
            try {
                row.ipw = empirical_ibns(s, cfg);
            } catch (const std::invalid_argument&) {
            }
            row.cl = cl.ibns;
            rows.push_back(row);
            continue;
        }

        const InclusionProbabilities probs = probabilities_at(w, models, s);
        const ReserveSet set = make_reserves(s, probs, cfg);
        const double cl_values[3] = {cl.ibns, cl.rbns, cl.ibnr};
        const double truth_values[3] = {it->second.ibns, it->second.rbns, it->second.ibnr};
        for (int i = 0; i < 3; ++i) {
            CompareRow row;
            row.tau = tau;
            row.kind = to_string(set.rows[i].kind);
            row.truth = truth_values[i];
            row.ipw = set.rows[i].point;
            row.ipw_lower = set.rows[i].ci_lower;
            row.ipw_upper = set.rows[i].ci_upper;
            row.cl = cl_values[i];
            rows.push_back(row);
        }
    }

    std::filesystem::create_directories(cfg.output_dir);
    {
        std::ofstream out((std::filesystem::path(cfg.output_dir) / "compare.csv").string());
        out << "tau,kind,true_value,ipw_point,ipw_ci_lower,ipw_ci_upper,cl_point\n";
        for (const CompareRow& r : rows)
            out << format_double(r.tau) << ',' << r.kind << ',' << format_double(r.truth) << ','
                << format_double(r.ipw) << ',' << format_double(r.ipw_lower) << ','
                << format_double(r.ipw_upper) << ',' << format_double(r.cl) << '\n';
    }

    // Aggregate error metrics per kind and method over the dates where the
    // method produced an estimate.
    json metrics = json::array();
    std::ofstream mout((std::filesystem::path(cfg.output_dir) / "compare_metrics.csv").string());
    mout << "kind,method,me,rmse,mae,mape,n\n";
    for (const std::string kind : {"IBNS", "RBNS", "IBNR"}) {
        for (const std::string method : {"ipw", "cl"}) {
            std::vector<double> est, tru;
            for (const CompareRow& r : rows) {
                if (r.kind != kind) continue;
                const double e = method == "ipw" ? r.ipw : r.cl;
                if (std::isnan(e) || std::isnan(r.truth)) continue;
                est.push_back(e);
                tru.push_back(r.truth);
            }
            if (est.empty()) continue;
            const ErrorMetrics m = compute_error_metrics(est, tru);
            mout << kind << ',' << method << ',' << format_double(m.me) << ','
                 << format_double(m.rmse) << ',' << format_double(m.mae) << ','
                 << format_double(m.mape) << ',' << est.size() << '\n';
            metrics.push_back({{"kind", kind},
                               {"method", method},
                               {"me", m.me},
                               {"rmse", m.rmse},
                               {"mae", m.mae},
                               {"mape", m.mape},
                               {"n", est.size()}});
        }
    }

    json mirror;
    mirror["rows"] = json::array();
    for (const CompareRow& r : rows)
        mirror["rows"].push_back({{"tau", r.tau},
                                  {"kind", r.kind},
                                  {"true_value", r.truth},
                                  {"ipw_point", r.ipw},
                                  {"ipw_ci_lower", r.ipw_lower},
                                  {"ipw_ci_upper", r.ipw_upper},
                                  {"cl_point", r.cl}});
    mirror["metrics"] = metrics;
    write_json_file(mirror, (std::filesystem::path(cfg.output_dir) / "compare.json").string());
    return 0;
}

// ---------------------------------------------------------------------------

RunConfig build_config(const std::string& config_path, const json& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + config_path);
        json j;
        try {
            in >> j;
        } catch (const json::parse_error& e) {
            throw std::runtime_error("config parse error: " + std::string(e.what()));
        }
        apply_json(cfg, j);
    }
    apply_json(cfg, overrides);
    if (const char* env = std::getenv("IPWRESERVE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) cfg.threads = n;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Claims reserving via inverse-probability-weighted estimators"};
    app.require_subcommand(1);

    std::string config_path;
    json overrides = json::object();

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON config file");
        auto opt = [&, sub](const std::string& name, const char* help) {
            sub->add_option_function<std::string>(
                "--" + name,
                [&overrides, name](const std::string& v) {
                    overrides[name] = json::parse(v, nullptr, false).is_discarded()
                                          ? json(v)
                                          : json::parse(v);
                },
                help);
        };
        opt("claims", "claims csv path");
        opt("payments", "payments csv path");
        opt("truth", "ground-truth reserves json (compare)");
        opt("output_dir", "output directory");
        opt("tau", "valuation date(s), number or JSON array");
        opt("omega", "maximum settlement time in months");
        opt("grid_width", "fitting grid width in months");
        opt("seed", "simulation seed");
        opt("alpha", "confidence level complement");
        opt("trim", "apply the trimming adjustment (true/false)");
        opt("trim_threshold", "relative difference that retains the trimmed estimate");
        opt("probability_floor", "lower floor applied to evaluated probabilities");
        opt("origin_width", "triangle origin bin width");
        opt("dev_width", "triangle development bin width");
        opt("measure", "triangle measure: amount or count");
        opt("probabilities", "probability source: fitted, oracle or empirical");
        opt("weights_reporting", "reporting fit weights: amount or unit");
        opt("weights_payment", "payment fit weights: amount or unit");
        opt("window", "rolling fit window in months (0 = all history)");
        opt("refit_every", "months between refits when sweeping taus");
        opt("max_iterations", "fit iteration cap");
        opt("gradient_tolerance", "fit gradient tolerance");
        opt("explain", "emit per-payment weight diagnostics (true/false)");
        return sub;
    };

    CLI::App* sim = add_common(app.add_subcommand("simulate", "generate a synthetic portfolio"));
    CLI::App* fit = add_common(app.add_subcommand("fit", "fit the delay models"));
    CLI::App* res = add_common(app.add_subcommand("reserve", "estimate reserves"));
    CLI::App* tri = add_common(app.add_subcommand("triangle", "emit run-off triangles"));
    CLI::App* cmp = add_common(app.add_subcommand("compare", "compare IPW against Chain-Ladder"));
    CLI::App* rsd = add_common(app.add_subcommand("residuals", "pseudo-residual diagnostics"));

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = build_config(config_path, overrides);
        if (sim->parsed()) return do_simulate(cfg);
        if (fit->parsed()) return do_fit(cfg);
        if (res->parsed()) return do_reserve(cfg);
        if (tri->parsed()) return do_triangle(cfg);
        if (cmp->parsed()) return do_compare(cfg);
        if (rsd->parsed()) return do_residuals(cfg);
    } catch (const FitFailure& e) {
        std::cerr << "ipwres: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "ipwres: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
