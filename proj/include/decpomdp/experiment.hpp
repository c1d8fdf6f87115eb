#pragma once

#include "decpomdp/error.hpp"
#include "decpomdp/mdp.hpp"
#include "decpomdp/planner.hpp"
#include "decpomdp/policy.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace decpomdp {

struct ExperimentResult {
    std::string algorithm;
    int width = 0;
    int horizon = 0;
    int runs = 0;
    std::vector<double> values;
    std::vector<double> times;
    double aev = 0.0;
    double sigma = 0.0;
    double mean_time = 0.0;
    double total_time = 0.0;
};

/// Fill the aggregate fields from the per-run values and times.
inline void aggregate(ExperimentResult& r) {
    r.runs = static_cast<int>(r.values.size());
    r.aev = r.sigma = r.mean_time = r.total_time = 0.0;
    if (r.values.empty()) return;
    double sum = 0.0;
    for (double v : r.values) sum += v;
    r.aev = sum / r.runs;
    if (r.runs > 1) {
        double ss = 0.0;
        for (double v : r.values) ss += (v - r.aev) * (v - r.aev);
        r.sigma = std::sqrt(ss / (r.runs - 1));
    }
    for (double t : r.times) r.total_time += t;
    r.mean_time = r.total_time / r.runs;
}

/**
 * Runs `plan` R times with seeds base_seed + k. Each value is the exact value
 * of the returned joint policy at b0; each time covers the whole plan call.
 */
inline ExperimentResult run_experiment(const DecPomdp& model, const PlannerConfig& config, int runs,
                                       std::uint64_t base_seed,
                                       const std::function<void(int, double, double)>& progress = {}) {
    if (runs < 1) throw SemanticError("run count must be at least 1");
    ExperimentResult r;
    r.algorithm = algorithm_name(config.algorithm);
    r.width = config.width;
    r.horizon = config.horizon > 0 ? config.horizon : model.default_horizon();
    for (int k = 0; k < runs; ++k) {
        PlannerConfig c = config;
        c.seed = base_seed + static_cast<std::uint64_t>(k);
        const auto start = std::chrono::steady_clock::now();
        const PlanResult p = plan(model, c);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.values.push_back(p.value);
        r.times.push_back(elapsed);
        if (progress) progress(k, p.value, elapsed);
    }
    aggregate(r);
    return r;
}

enum class OutputFormat { Csv, Json, Table };

inline OutputFormat parse_output_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    if (s == "table") return OutputFormat::Table;
    throw SemanticError("unknown output format '" + s + "'");
}

namespace detail {

inline std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

inline std::string exact(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace detail

/// Rows sorted by (algorithm, W), then by H for stability.
inline std::string emit_results(std::vector<ExperimentResult> results, OutputFormat format) {
    std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
        return std::tie(a.algorithm, a.width, a.horizon) < std::tie(b.algorithm, b.width, b.horizon);
    });
    std::ostringstream os;
    switch (format) {
    case OutputFormat::Csv:
        os << "algorithm,W,H,runs,AEV,sigma,mean_time_s\n";
        for (const auto& r : results)
            os << r.algorithm << ',' << r.width << ',' << r.horizon << ',' << r.runs << ',' << detail::exact(r.aev)
               << ',' << detail::exact(r.sigma) << ',' << detail::exact(r.mean_time) << '\n';
        break;
    case OutputFormat::Json: {
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& r : results) {
            nlohmann::ordered_json row;
            row["algorithm"] = r.algorithm;
            row["W"] = r.width;
            row["H"] = r.horizon;
            row["runs"] = r.runs;
            row["AEV"] = r.aev;
            row["sigma"] = r.sigma;
            row["mean_time_s"] = r.mean_time;
            row["total_time_s"] = r.total_time;
            row["values"] = r.values;
            row["times_s"] = r.times;
            doc.push_back(std::move(row));
        }
        os << doc.dump(2) << '\n';
        break;
    }
    case OutputFormat::Table:
        os << std::left << std::setw(14) << "algorithm" << std::right << std::setw(5) << "W" << std::setw(6) << "H"
           << std::setw(6) << "runs" << std::setw(12) << "AEV" << std::setw(10) << "sigma" << std::setw(12)
           << "T/run (s)" << std::setw(12) << "T total (s)" << '\n';
        for (const auto& r : results)
            os << std::left << std::setw(14) << r.algorithm << std::right << std::setw(5) << r.width
               << std::setw(6) << r.horizon << std::setw(6) << r.runs << std::setw(12) << detail::fixed(r.aev, 2)
               << std::setw(10) << detail::fixed(r.sigma, 2) << std::setw(12) << detail::fixed(r.mean_time, 3)
               << std::setw(12) << detail::fixed(r.total_time, 3) << '\n';
        break;
    }
    return os.str();
}

/// Inverse of the json format of emit_results.
inline std::vector<ExperimentResult> parse_results_json(const std::string& text) {
    std::vector<ExperimentResult> out;
    for (const auto& row : nlohmann::json::parse(text)) {
        ExperimentResult r;
        r.algorithm = row.at("algorithm").get<std::string>();
        r.width = row.at("W").get<int>();
        r.horizon = row.at("H").get<int>();
        r.values = row.at("values").get<std::vector<double>>();
        r.times = row.at("times_s").get<std::vector<double>>();
        aggregate(r);
        out.push_back(std::move(r));
    }
    return out;
}

struct PolicyEvaluation {
    double exact = 0.0;
    double simulated = 0.0;
    double standard_error = 0.0;
    bool warning = false; // |exact - simulated| > 4 standard errors
};

inline PolicyEvaluation evaluate_policy(const DecPomdp& model, const std::string& policy_text, int episodes,
                                        std::uint64_t seed) {
    TreePool pool(model.num_agents());
    const JointPolicy q = parse_policy(model, pool, policy_text);
    PolicyEvaluation e;
    if (q.depth == 0) return e;
    e.exact = value_at(evaluate(model, pool, q), model.initial_belief());
    std::mt19937_64 rng(seed);
    const RolloutResult r = rollout(model, pool, q, model.initial_belief(), episodes, rng);
    e.simulated = r.mean;
    e.standard_error = r.standard_error;
    const double gap = std::abs(e.exact - e.simulated);
    e.warning = e.standard_error > 0.0 ? gap > 4 * e.standard_error : gap > 1e-9 * (1 + std::abs(e.exact));
    return e;
}

/// MDP upper bound at b0 for the given horizon.
inline double mdp_bound(const DecPomdp& model, int horizon) {
    return mdp_value_at(value_iteration(model, horizon), model.initial_belief(), 0);
}

/**
 * Heuristic mix such as "mdp=0.5,random=0.5", "mdp" or "random". Weights
 * default to an equal split among the listed heuristics.
 */
inline std::vector<HeuristicShare> parse_heuristics(const std::string& text, const DecPomdp& model, int horizon) {
    std::vector<std::pair<std::string, double>> items;
    std::stringstream ss(text);
    std::string item;
    bool weighted = false;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        std::string name = item.substr(0, eq);
        double w = 0.0;
        if (eq != std::string::npos) {
            weighted = true;
            try {
                w = std::stod(item.substr(eq + 1));
            } catch (const std::logic_error&) {
                throw SemanticError("bad heuristic weight in '" + item + "'");
            }
        }
        items.emplace_back(name, w);
    }
    if (items.empty()) throw SemanticError("empty heuristic specification");
    std::vector<HeuristicShare> out;
    for (const auto& [name, w] : items) {
        const double fraction = weighted ? w : 1.0 / static_cast<double>(items.size());
        if (name == "mdp")
            out.push_back({MdpGreedyHeuristic{value_iteration(model, horizon)}, fraction});
        else if (name == "random")
            out.push_back({RandomHeuristic{}, fraction});
        else
            throw SemanticError("unknown heuristic '" + name + "' (expected mdp or random)");
    }
    return out;
}

} // namespace decpomdp
