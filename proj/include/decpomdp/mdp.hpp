#pragma once

#include "decpomdp/model.hpp"

#include <limits>
#include <vector>

namespace decpomdp {

/**
 * Finite-horizon optimal values of the underlying MDP.
 *
 * value(t, s) is the optimal expected sum of the rewards collected from time t
 * to the horizon H starting in s, so value(H, s) = 0. greedy(t, s) is the
 * maximizing joint action at time t, ties going to the lowest flat index.
 */
class StageValues {
public:
    StageValues() = default;
    StageValues(int horizon, int num_states)
        : horizon_(horizon), num_states_(num_states),
          values_(static_cast<std::size_t>(horizon + 1) * num_states, 0.0),
          greedy_(static_cast<std::size_t>(horizon) * num_states, 0) {}

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    double value(int t, int s) const { return values_[static_cast<std::size_t>(t) * num_states_ + s]; }
    int greedy(int t, int s) const { return greedy_[static_cast<std::size_t>(t) * num_states_ + s]; }

    double& value(int t, int s) { return values_[static_cast<std::size_t>(t) * num_states_ + s]; }
    int& greedy(int t, int s) { return greedy_[static_cast<std::size_t>(t) * num_states_ + s]; }

    bool operator==(const StageValues&) const = default;

private:
    int horizon_ = 0;
    int num_states_ = 0;
    std::vector<double> values_;
    std::vector<int> greedy_;
};

/// Undiscounted Bellman backups from t = H-1 down to 0.
inline StageValues value_iteration(const Mdp& mdp, int horizon) {
    if (horizon < 0) throw SemanticError("horizon must be non-negative");
    StageValues v(horizon, mdp.num_states);
    for (int t = horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.num_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int a = 0; a < mdp.num_actions; ++a) {
                double q = mdp.R(s, a);
                for (int s2 = 0; s2 < mdp.num_states; ++s2) {
                    const double p = mdp.T(a, s, s2);
                    if (p != 0.0) q += p * v.value(t + 1, s2);
                }
                if (q > best) {
                    best = q;
                    arg = a;
                }
            }
            v.value(t, s) = best;
            v.greedy(t, s) = arg;
        }
    return v;
}

inline StageValues value_iteration(const DecPomdp& model, int horizon) {
    return value_iteration(underlying_mdp(model), horizon);
}

/// Expected optimal MDP value-to-go under a belief at time t.
inline double mdp_value_at(const StageValues& values, const Belief& belief, int t) {
    double v = 0.0;
    for (int s = 0; s < values.num_states(); ++s) v += belief[s] * values.value(t, s);
    return v;
}

} // namespace decpomdp
