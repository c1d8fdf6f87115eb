#pragma once

#include "decpomdp/mdp.hpp"
#include "decpomdp/model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace decpomdp {

/// Pr(o | b, a) for every joint observation o.
inline std::vector<double> obs_marginal(const DecPomdp& model, const Belief& b, int a) {
    std::vector<double> out(model.num_joint_observations(), 0.0);
    for (int s = 0; s < model.num_states(); ++s) {
        if (b[s] == 0.0) continue;
        for (const auto& e : model.successors(a, s)) out[e.observation] += b[s] * e.probability;
    }
    return out;
}

/// Bayesian update tau(b, a, o).
inline Belief belief_update(const DecPomdp& model, const Belief& b, int a, int o) {
    Belief next(model.num_states(), 0.0);
    double total = 0.0;
    for (int s = 0; s < model.num_states(); ++s) {
        if (b[s] == 0.0) continue;
        for (const auto& e : model.successors(a, s))
            if (e.observation == o) {
                next[e.next_state] += b[s] * e.probability;
                total += b[s] * e.probability;
            }
    }
    if (!(total > 0.0))
        throw ZeroProbabilityObservation("joint observation " + std::to_string(o) +
                                         " has zero probability under joint action " +
                                         std::to_string(a));
    for (double& p : next) p /= total;
    return next;
}

/// Expected immediate reward R(b, a).
inline double expected_reward(const DecPomdp& model, const Belief& b, int a) {
    double r = 0.0;
    for (int s = 0; s < model.num_states(); ++s) r += b[s] * model.reward(s, a);
    return r;
}

/// Index of the sample drawn from `weights` with a uniform variate u in [0,1).
inline int sample_index(const std::vector<double>& weights, double u) {
    double total = 0.0;
    for (double w : weights) total += w;
    double acc = 0.0;
    const double target = u * total;
    int last = -1;
    for (int k = 0; k < static_cast<int>(weights.size()); ++k) {
        if (weights[k] <= 0.0) continue;
        last = k;
        acc += weights[k];
        if (target < acc) return k;
    }
    return last;
}

template <class Rng>
double uniform01(Rng& rng) {
    return std::generate_canonical<double, 53>(rng);
}

struct RandomHeuristic {};

/// Acts greedily on the MDP values: one-step lookahead on beliefs, the MDP
/// policy on states.
struct MdpGreedyHeuristic {
    StageValues values;
};

using HeuristicPolicy = std::variant<RandomHeuristic, MdpGreedyHeuristic>;

struct HeuristicShare {
    HeuristicPolicy policy;
    double fraction;
};

/// Where heuristic trajectories live: beliefs of the underlying POMDP, or
/// state distributions of the underlying MDP.
enum class HeuristicSpace { Belief, StatePrior };

/// Sampled points: points_at[t] holds the beliefs for time step t.
struct PointSets {
    int horizon = 0;
    std::vector<std::vector<Belief>> points_at;
};

struct SamplingOptions {
    HeuristicSpace space = HeuristicSpace::Belief;
    /// Number of simulated MDP trajectories pooled into one state-prior point.
    int prior_batch = 4;
};

namespace detail {

inline std::mt19937_64 trajectory_stream(std::uint64_t seed, int heuristic, int trajectory) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(heuristic), static_cast<std::uint32_t>(trajectory)};
    return std::mt19937_64(seq);
}

/// Belief-space lookahead: argmax_a R(b,a) + sum_s' Pr(s'|b,a) V^{t+1}(s').
inline int greedy_belief_action(const DecPomdp& model, const StageValues& values, const Belief& b,
                                int t) {
    int best_a = 0;
    double best = 0.0;
    for (int a = 0; a < model.num_joint_actions(); ++a) {
        double q = 0.0;
        for (int s = 0; s < model.num_states(); ++s) {
            if (b[s] == 0.0) continue;
            double inner = model.reward(s, a);
            for (const auto& e : model.transitions_from(a, s))
                inner += e.probability * values.value(t + 1, e.state);
            q += b[s] * inner;
        }
        if (a == 0 || q > best) {
            best = q;
            best_a = a;
        }
    }
    return best_a;
}

template <class Rng>
int choose_action(const DecPomdp& model, const HeuristicPolicy& h, const Belief* b, int state, int t,
                  Rng& rng) {
    if (std::holds_alternative<RandomHeuristic>(h))
        return static_cast<int>(uniform01(rng) * model.num_joint_actions()) %
               model.num_joint_actions();
    const auto& values = std::get<MdpGreedyHeuristic>(h).values;
    if (b) return greedy_belief_action(model, values, *b, t);
    return values.greedy(t, state);
}

template <class Rng>
void belief_trajectory(const DecPomdp& model, const HeuristicPolicy& h, int horizon, Rng& rng,
                       std::vector<std::vector<Belief>>& out) {
    Belief b = model.initial_belief();
    for (int t = 0; t < horizon; ++t) {
        out[t].push_back(b);
        if (t + 1 == horizon) break;
        const int a = choose_action(model, h, &b, -1, t, rng);
        const int o = sample_index(obs_marginal(model, b, a), uniform01(rng));
        b = belief_update(model, b, a, o);
    }
}

template <class Rng>
void state_prior_trajectory(const DecPomdp& model, const HeuristicPolicy& h, int horizon, int batch,
                            Rng& rng, std::vector<std::vector<Belief>>& out) {
    const int ns = model.num_states();
    std::vector<int> states(batch);
    for (int& s : states) s = sample_index(model.initial_belief(), uniform01(rng));
    std::vector<double> row(ns);
    for (int t = 0; t < horizon; ++t) {
        // The first point is b0 itself, as for belief-space sampling.
        if (t == 0) {
            out[t].push_back(model.initial_belief());
        } else {
            Belief p(ns, 0.0);
            for (int s : states) p[s] += 1.0 / batch;
            out[t].push_back(std::move(p));
        }
        if (t + 1 == horizon) break;
        for (int& s : states) {
            const int a = choose_action(model, h, nullptr, s, t, rng);
            for (int s2 = 0; s2 < ns; ++s2) row[s2] = model.transition(a, s, s2);
            s = sample_index(row, uniform01(rng));
        }
    }
}

} // namespace detail

/**
 * Monte-Carlo belief points for every time step in [0, H).
 *
 * Each trajectory starts from b0 and follows its heuristic; the point it
 * reaches at time t is stored in points_at[t]. floor(fraction * N)
 * trajectories go to each heuristic, the remainder to the first one. Every
 * trajectory draws from its own stream derived from (seed, heuristic index,
 * trajectory index), so results do not depend on evaluation order.
 */
inline PointSets sample_point_sets(const DecPomdp& model, const std::vector<HeuristicShare>& heuristics,
                                   int horizon, int samples, std::uint64_t seed,
                                   const SamplingOptions& options = {}) {
    if (samples < 1) throw SemanticError("sample count must be at least 1");
    if (heuristics.empty()) throw SemanticError("at least one heuristic is required");
    double total = 0.0;
    for (const auto& h : heuristics) {
        total += h.fraction;
        if (const auto* g = std::get_if<MdpGreedyHeuristic>(&h.policy); g && g->values.horizon() < horizon)
            throw SemanticError("MDP heuristic horizon is shorter than the planning horizon");
    }
    if (std::abs(total - 1.0) > 1e-9) throw SemanticError("heuristic fractions must sum to 1");
    if (options.prior_batch < 1) throw SemanticError("state-prior batch must be at least 1");

    std::vector<int> counts;
    int assigned = 0;
    for (const auto& h : heuristics) {
        counts.push_back(static_cast<int>(std::floor(h.fraction * samples + 1e-9)));
        assigned += counts.back();
    }
    counts[0] += samples - assigned;

    PointSets ps;
    ps.horizon = horizon;
    ps.points_at.assign(horizon, {});
    for (auto& v : ps.points_at) v.reserve(samples);
    for (std::size_t h = 0; h < heuristics.size(); ++h)
        for (int k = 0; k < counts[h]; ++k) {
            auto rng = detail::trajectory_stream(seed, static_cast<int>(h), k);
            if (options.space == HeuristicSpace::Belief)
                detail::belief_trajectory(model, heuristics[h].policy, horizon, rng, ps.points_at);
            else
                detail::state_prior_trajectory(model, heuristics[h].policy, horizon,
                                               options.prior_batch, rng, ps.points_at);
        }
    return ps;
}

/// The default half MDP-greedy, half random mix.
inline std::vector<HeuristicShare> default_heuristics(const DecPomdp& model, int horizon) {
    return {{MdpGreedyHeuristic{value_iteration(model, horizon)}, 0.5}, {RandomHeuristic{}, 0.5}};
}

} // namespace decpomdp
