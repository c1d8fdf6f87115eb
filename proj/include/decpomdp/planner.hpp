#pragma once

#include "decpomdp/belief.hpp"
#include "decpomdp/bnb.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/mdp.hpp"
#include "decpomdp/policy.hpp"
#include "decpomdp/psmbdp.hpp"
#include "decpomdp/stage.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace decpomdp {

enum class Algorithm { Exact, Mbdp, PbipDfs, PbipBefs, Psmbdp, PsmbdpBefs };

inline std::string algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::Exact: return "exact";
    case Algorithm::Mbdp: return "mbdp";
    case Algorithm::PbipDfs: return "pbip-dfs";
    case Algorithm::PbipBefs: return "pbip-befs";
    case Algorithm::Psmbdp: return "psmbdp";
    case Algorithm::PsmbdpBefs: return "psmbdp-befs";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
    for (auto a : {Algorithm::Exact, Algorithm::Mbdp, Algorithm::PbipDfs, Algorithm::PbipBefs, Algorithm::Psmbdp,
                   Algorithm::PsmbdpBefs})
        if (algorithm_name(a) == s) return a;
    throw SemanticError("unknown algorithm '" + s + "'");
}

inline bool is_psmbdp(Algorithm a) { return a == Algorithm::Psmbdp || a == Algorithm::PsmbdpBefs; }

struct PlannerConfig {
    Algorithm algorithm = Algorithm::Psmbdp;
    int width = 3;
    int samples = 100;
    int horizon = 0; // 0: the model's default horizon
    std::uint64_t seed = 0;
    /// Heuristic mix; empty means half MDP-greedy, half random.
    std::vector<HeuristicShare> heuristics;
    /// Sampling space; unset means beliefs for PSMBDP, state priors otherwise.
    std::optional<HeuristicSpace> space;
    int prior_batch = 4;
    std::uint64_t node_limit = 100'000'000;
    AgentOrder agent_order = AgentOrder::RoundRobin;
    std::size_t backup_limit = 10'000'000;
};

struct StageStats {
    int stage = 0; // time step t the stage's trees start at
    std::vector<int> set_sizes;
    double elapsed_s = 0.0;
};

struct PlanResult {
    std::shared_ptr<TreePool> pool;
    std::vector<std::vector<int>> final_sets;
    JointPolicy policy;
    double value = 0.0;
    std::vector<StageStats> stages;
};

/**
 * Backward DP from the empty tree: for t = H-1 down to 0 the configured
 * operator builds the depth H-t sets from the depth H-t-1 ones. The returned
 * policy is the best joint tree of the final product at b0.
 */
inline PlanResult plan(const DecPomdp& model, const PlannerConfig& config,
                       const std::function<void(const StageStats&)>& progress = {}) {
    const int horizon = config.horizon > 0 ? config.horizon : model.default_horizon();
    if (config.width < 1) throw SemanticError("width must be at least 1");
    if (config.samples < 1) throw SemanticError("sample count must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    const int n = model.num_agents();

    PlanResult result;
    result.pool = std::make_shared<TreePool>(n);
    TreePool& pool = *result.pool;

    PointSets points;
    if (config.algorithm != Algorithm::Exact) {
        const auto heuristics = config.heuristics.empty() ? default_heuristics(model, horizon) : config.heuristics;
        SamplingOptions so;
        so.space = config.space.value_or(is_psmbdp(config.algorithm) ? HeuristicSpace::Belief
                                                                    : HeuristicSpace::StatePrior);
        so.prior_batch = config.prior_batch;
        const int count = is_psmbdp(config.algorithm) ? config.samples : config.width;
        points = sample_point_sets(model, heuristics, horizon, count, config.seed, so);
    }

    SearchOptions search;
    search.node_limit = config.node_limit;
    search.strategy = config.algorithm == Algorithm::PbipBefs || config.algorithm == Algorithm::PsmbdpBefs
                          ? SearchStrategy::BestFirst
                          : SearchStrategy::DepthFirst;

    std::vector<std::vector<int>> sets(n, std::vector<int>{0});
    for (int t = horizon - 1; t >= 0; --t) {
        const int prev_depth = horizon - t - 1;
        StageBackup backup(model, pool, prev_depth, sets);
        CandidateSets chosen;
        switch (config.algorithm) {
        case Algorithm::Exact:
            chosen = exact_prune(backup, exhaustive_backup(backup, config.backup_limit));
            break;
        case Algorithm::Mbdp:
            chosen = mbdp_prune(backup, exhaustive_backup(backup, config.backup_limit), points.points_at[t], search);
            break;
        case Algorithm::PbipDfs:
        case Algorithm::PbipBefs:
            chosen = pbip_operator(backup, points.points_at[t], search);
            break;
        case Algorithm::Psmbdp:
        case Algorithm::PsmbdpBefs: {
            PsmbdpOptions po;
            po.mode = config.algorithm == Algorithm::Psmbdp ? SelectionMode::Exhaustive : SelectionMode::BestFirst;
            po.order = config.agent_order;
            po.search = search;
            chosen = psmbdp_operator(backup, points.points_at[t], config.width, po).sets;
            break;
        }
        }
        sets = commit_stage(backup, chosen);
        if (prev_depth >= 1) pool.release_memo(prev_depth - 1);

        StageStats stats;
        stats.stage = t;
        for (const auto& s : sets) stats.set_sizes.push_back(static_cast<int>(s.size()));
        stats.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (progress) progress(stats);
        result.stages.push_back(std::move(stats));
    }

    std::vector<int> sizes;
    for (const auto& s : sets) sizes.push_back(static_cast<int>(s.size()));
    MixedRadix product(sizes);
    double best = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < product.size(); ++t) {
        JointPolicy q{horizon, std::vector<int>(n)};
        for (int i = 0; i < n; ++i) q.roots[i] = sets[i][product.component(t, i)];
        const double v = value_at(evaluate(model, pool, q), model.initial_belief());
        if (v > best) {
            best = v;
            result.policy = q;
        }
    }
    result.value = best;
    result.final_sets = sets;
    return result;
}

} // namespace decpomdp
