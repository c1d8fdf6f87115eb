#pragma once

#include "decpomdp/error.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace decpomdp {

/// Probability distribution over states, stored densely.
using Belief = std::vector<double>;

/// Tolerance used when checking that distributions sum to one.
inline constexpr double kProbabilityTolerance = 1e-9;

/**
 * Mixed-radix encoding of index tuples. Component 0 is the most significant
 * digit, so flat indices enumerate tuples in lexicographic order.
 */
class MixedRadix {
public:
    MixedRadix() = default;

    explicit MixedRadix(std::vector<int> radices) : radices_(std::move(radices)) {
        strides_.assign(radices_.size(), 1);
        size_ = 1;
        for (std::size_t k = radices_.size(); k-- > 0;) {
            if (radices_[k] < 1) throw SemanticError("mixed radix with empty component");
            strides_[k] = size_;
            size_ *= radices_[k];
        }
    }

    int size() const { return size_; }
    int digits() const { return static_cast<int>(radices_.size()); }
    int radix(int i) const { return radices_[i]; }
    int stride(int i) const { return strides_[i]; }
    const std::vector<int>& radices() const { return radices_; }

    int encode(std::span<const int> components) const {
        int flat = 0;
        for (std::size_t k = 0; k < radices_.size(); ++k) flat += components[k] * strides_[k];
        return flat;
    }

    std::vector<int> decode(int flat) const {
        std::vector<int> out(radices_.size());
        for (std::size_t k = 0; k < radices_.size(); ++k) out[k] = (flat / strides_[k]) % radices_[k];
        return out;
    }

    int component(int flat, int i) const { return (flat / strides_[i]) % radices_[i]; }

    /// Replace digit i of `flat` by `value`.
    int with_component(int flat, int i, int value) const {
        return flat + (value - component(flat, i)) * strides_[i];
    }

private:
    std::vector<int> radices_;
    std::vector<int> strides_;
    int size_ = 1;
};

/// A nonzero entry of T(s'|s,a) O(o|s,a,s') for a fixed (a, s).
struct Successor {
    int next_state;
    int observation;
    double probability;
};

struct StateProbability {
    int state;
    double probability;
};

class ModelBuilder;

/**
 * Finite Dec-POMDP with dense tensors.
 *
 * Layouts: transition [a][s][s'], observation [a][s][s'][o], reward [s][a],
 * where a and o are flat joint indices. Instances are immutable once built by
 * ModelBuilder::build(), which enforces the distribution invariants.
 */
class DecPomdp {
public:
    int num_agents() const { return static_cast<int>(agent_names_.size()); }
    int num_states() const { return static_cast<int>(state_names_.size()); }
    int num_joint_actions() const { return joint_actions_.size(); }
    int num_joint_observations() const { return joint_observations_.size(); }
    int num_actions(int agent) const { return joint_actions_.radix(agent); }
    int num_observations(int agent) const { return joint_observations_.radix(agent); }

    const MixedRadix& joint_actions() const { return joint_actions_; }
    const MixedRadix& joint_observations() const { return joint_observations_; }

    double transition(int a, int s, int s2) const {
        return transition_[(static_cast<std::size_t>(a) * num_states() + s) * num_states() + s2];
    }
    double observation(int a, int s, int s2, int o) const {
        const std::size_t ns = num_states();
        return observation_[((a * ns + s) * ns + s2) * num_joint_observations() + o];
    }
    double reward(int s, int a) const {
        return reward_[static_cast<std::size_t>(s) * num_joint_actions() + a];
    }

    const Belief& initial_belief() const { return initial_belief_; }
    int default_horizon() const { return default_horizon_; }
    double discount() const { return discount_; }

    const std::vector<std::string>& agent_names() const { return agent_names_; }
    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::vector<std::string>& action_names(int agent) const { return action_names_[agent]; }
    const std::vector<std::string>& observation_names(int agent) const {
        return observation_names_[agent];
    }

    /// Nonzero (s', o, T*O) entries reachable from state s under joint action a.
    std::span<const Successor> successors(int a, int s) const {
        const std::size_t k = static_cast<std::size_t>(a) * num_states() + s;
        return {successors_.data() + successor_offsets_[k],
                successors_.data() + successor_offsets_[k + 1]};
    }

    /// Nonzero T(s'|s,a) entries.
    std::span<const StateProbability> transitions_from(int a, int s) const {
        const std::size_t k = static_cast<std::size_t>(a) * num_states() + s;
        return {transitions_.data() + transition_offsets_[k],
                transitions_.data() + transition_offsets_[k + 1]};
    }

    /// True when some O(o|s,a,s') differs across start states s.
    bool observation_depends_on_start_state() const { return observation_depends_on_start_; }

    const std::vector<double>& transition_tensor() const { return transition_; }
    const std::vector<double>& observation_tensor() const { return observation_; }
    const std::vector<double>& reward_table() const { return reward_; }

private:
    friend class ModelBuilder;
    DecPomdp() = default;

    std::vector<std::string> agent_names_;
    std::vector<std::string> state_names_;
    std::vector<std::vector<std::string>> action_names_;
    std::vector<std::vector<std::string>> observation_names_;
    MixedRadix joint_actions_;
    MixedRadix joint_observations_;
    std::vector<double> transition_;
    std::vector<double> observation_;
    std::vector<double> reward_;
    Belief initial_belief_;
    int default_horizon_ = 10;
    double discount_ = 1.0;
    bool observation_depends_on_start_ = false;

    std::vector<std::size_t> successor_offsets_;
    std::vector<Successor> successors_;
    std::vector<std::size_t> transition_offsets_;
    std::vector<StateProbability> transitions_;
};

/// Mutable staging area for a DecPomdp. All tensors start at zero.
class ModelBuilder {
public:
    ModelBuilder(std::vector<std::string> agent_names, std::vector<std::string> state_names,
                 std::vector<std::vector<std::string>> action_names,
                 std::vector<std::vector<std::string>> observation_names) {
        if (agent_names.empty()) throw SemanticError("model needs at least one agent");
        if (state_names.empty()) throw SemanticError("model needs at least one state");
        if (action_names.size() != agent_names.size() ||
            observation_names.size() != agent_names.size())
            throw SemanticError("agent count mismatch: " + std::to_string(agent_names.size()) +
                                " agents but " + std::to_string(action_names.size()) +
                                " action sets and " + std::to_string(observation_names.size()) +
                                " observation sets");
        std::vector<int> na, no;
        for (std::size_t i = 0; i < agent_names.size(); ++i) {
            if (action_names[i].empty() || observation_names[i].empty())
                throw SemanticError("agent " + agent_names[i] + " has an empty action or observation set");
            na.push_back(static_cast<int>(action_names[i].size()));
            no.push_back(static_cast<int>(observation_names[i].size()));
        }
        m_.agent_names_ = std::move(agent_names);
        m_.state_names_ = std::move(state_names);
        m_.action_names_ = std::move(action_names);
        m_.observation_names_ = std::move(observation_names);
        m_.joint_actions_ = MixedRadix(na);
        m_.joint_observations_ = MixedRadix(no);
        const std::size_t ns = m_.state_names_.size();
        const std::size_t nja = m_.joint_actions_.size();
        const std::size_t njo = m_.joint_observations_.size();
        m_.transition_.assign(nja * ns * ns, 0.0);
        m_.observation_.assign(nja * ns * ns * njo, 0.0);
        m_.reward_.assign(ns * nja, 0.0);
        m_.initial_belief_.assign(ns, 1.0 / static_cast<double>(ns));
    }

    int num_states() const { return m_.num_states(); }
    int num_joint_actions() const { return m_.num_joint_actions(); }
    int num_joint_observations() const { return m_.num_joint_observations(); }
    const MixedRadix& joint_actions() const { return m_.joint_actions_; }
    const MixedRadix& joint_observations() const { return m_.joint_observations_; }
    const DecPomdp& staged() const { return m_; }

    ModelBuilder& set_transition(int a, int s, int s2, double p) {
        m_.transition_[(static_cast<std::size_t>(a) * num_states() + s) * num_states() + s2] = p;
        return *this;
    }
    double transition(int a, int s, int s2) const { return m_.transition(a, s, s2); }

    ModelBuilder& set_observation(int a, int s, int s2, int o, double p) {
        const std::size_t ns = num_states();
        m_.observation_[((a * ns + s) * ns + s2) * num_joint_observations() + o] = p;
        return *this;
    }
    double observation(int a, int s, int s2, int o) const { return m_.observation(a, s, s2, o); }

    /// Set O(o|s,a,s') for every start state s.
    ModelBuilder& set_observation_all_starts(int a, int s2, int o, double p) {
        for (int s = 0; s < num_states(); ++s) set_observation(a, s, s2, o, p);
        return *this;
    }

    ModelBuilder& set_reward(int s, int a, double r) {
        m_.reward_[static_cast<std::size_t>(s) * num_joint_actions() + a] = r;
        return *this;
    }
    double reward(int s, int a) const { return m_.reward(s, a); }

    ModelBuilder& set_initial_belief(Belief b) {
        if (b.size() != m_.state_names_.size())
            throw SemanticError("initial belief has wrong length");
        m_.initial_belief_ = std::move(b);
        return *this;
    }
    ModelBuilder& set_default_horizon(int h) {
        if (h < 1) throw SemanticError("default horizon must be positive");
        m_.default_horizon_ = h;
        return *this;
    }
    ModelBuilder& set_discount(double d) {
        m_.discount_ = d;
        return *this;
    }

    /// Validate, renormalize near-unit rows, and build the sparse caches.
    DecPomdp build() const {
        DecPomdp m = m_;
        const int ns = m.num_states();
        const int nja = m.num_joint_actions();
        const int njo = m.num_joint_observations();
        for (int a = 0; a < nja; ++a)
            for (int s = 0; s < ns; ++s) {
                double* row = m.transition_.data() + (static_cast<std::size_t>(a) * ns + s) * ns;
                check_row(row, ns, "transition row T(.|" + m.state_names_[s] + ", a=" +
                                       std::to_string(a) + ")");
                for (int s2 = 0; s2 < ns; ++s2) {
                    double* orow =
                        m.observation_.data() + ((static_cast<std::size_t>(a) * ns + s) * ns + s2) * njo;
                    check_row(orow, njo, "observation row O(.|" + m.state_names_[s] + ", a=" +
                                             std::to_string(a) + ", " + m.state_names_[s2] + ")");
                }
            }
        check_row(m.initial_belief_.data(), ns, "initial belief");
        for (double r : m.reward_)
            if (!std::isfinite(r)) throw SemanticError("reward table contains a non-finite value");

        m.observation_depends_on_start_ = false;
        for (int a = 0; a < nja && !m.observation_depends_on_start_; ++a)
            for (int s = 1; s < ns && !m.observation_depends_on_start_; ++s)
                for (int s2 = 0; s2 < ns && !m.observation_depends_on_start_; ++s2)
                    for (int o = 0; o < njo; ++o)
                        if (m.observation(a, s, s2, o) != m.observation(a, 0, s2, o)) {
                            m.observation_depends_on_start_ = true;
                            break;
                        }

        m.successor_offsets_.assign(static_cast<std::size_t>(nja) * ns + 1, 0);
        m.transition_offsets_.assign(static_cast<std::size_t>(nja) * ns + 1, 0);
        m.successors_.clear();
        m.transitions_.clear();
        for (int a = 0; a < nja; ++a)
            for (int s = 0; s < ns; ++s) {
                for (int s2 = 0; s2 < ns; ++s2) {
                    const double t = m.transition(a, s, s2);
                    if (t <= 0.0) continue;
                    m.transitions_.push_back({s2, t});
                    for (int o = 0; o < njo; ++o) {
                        const double p = t * m.observation(a, s, s2, o);
                        if (p > 0.0) m.successors_.push_back({s2, o, p});
                    }
                }
                const std::size_t k = static_cast<std::size_t>(a) * ns + s;
                m.successor_offsets_[k + 1] = m.successors_.size();
                m.transition_offsets_[k + 1] = m.transitions_.size();
            }
        return m;
    }

private:
    // Rows off by more than this (but within tolerance) are rescaled; smaller
    // deviations are rounding noise and are kept bit-for-bit.
    static constexpr double kRenormalizeThreshold = 1e-12;

    static void check_row(double* row, int n, const std::string& what) {
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            if (!(row[k] >= 0.0 && row[k] <= 1.0 + kProbabilityTolerance))
                throw SemanticError(what + " has an entry outside [0,1]: " + std::to_string(row[k]));
            sum += row[k];
        }
        if (std::abs(sum - 1.0) > kProbabilityTolerance)
            throw SemanticError(what + " sums to " + std::to_string(sum) + ", not 1");
        if (std::abs(sum - 1.0) > kRenormalizeThreshold)
            for (int k = 0; k < n; ++k) row[k] /= sum;
    }

    DecPomdp m_;
};

/// Fully observable projection: states, joint actions, T and R.
struct Mdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transition; // [a][s][s']
    std::vector<double> reward;     // [s][a]

    double T(int a, int s, int s2) const {
        return transition[(static_cast<std::size_t>(a) * num_states + s) * num_states + s2];
    }
    double R(int s, int a) const { return reward[static_cast<std::size_t>(s) * num_actions + a]; }
};

/// Joint-action names such as "listen+open-left"; identity for one agent.
inline std::string joint_name(const MixedRadix& radix,
                              const std::vector<std::vector<std::string>>& names, int flat) {
    std::string out;
    for (int i = 0; i < radix.digits(); ++i) {
        if (i) out += '+';
        out += names[i][radix.component(flat, i)];
    }
    return out;
}

/**
 * The centralized single-agent view: one agent choosing joint actions and
 * receiving joint observations. Tensors are reused unchanged because the
 * flat indexing already matches.
 */
inline DecPomdp underlying_pomdp(const DecPomdp& model) {
    if (model.num_agents() == 1) return model;
    std::vector<std::string> actions, observations;
    std::vector<std::vector<std::string>> an, on;
    for (int i = 0; i < model.num_agents(); ++i) {
        an.push_back(model.action_names(i));
        on.push_back(model.observation_names(i));
    }
    for (int a = 0; a < model.num_joint_actions(); ++a)
        actions.push_back(joint_name(model.joint_actions(), an, a));
    for (int o = 0; o < model.num_joint_observations(); ++o)
        observations.push_back(joint_name(model.joint_observations(), on, o));
    ModelBuilder b({"centralized"}, model.state_names(), {actions}, {observations});
    const int ns = model.num_states();
    for (int a = 0; a < model.num_joint_actions(); ++a)
        for (int s = 0; s < ns; ++s) {
            b.set_reward(s, a, model.reward(s, a));
            for (int s2 = 0; s2 < ns; ++s2) {
                b.set_transition(a, s, s2, model.transition(a, s, s2));
                for (int o = 0; o < model.num_joint_observations(); ++o)
                    b.set_observation(a, s, s2, o, model.observation(a, s, s2, o));
            }
        }
    b.set_initial_belief(model.initial_belief());
    b.set_default_horizon(model.default_horizon());
    b.set_discount(model.discount());
    return b.build();
}

inline Mdp underlying_mdp(const DecPomdp& model) {
    Mdp mdp;
    mdp.num_states = model.num_states();
    mdp.num_actions = model.num_joint_actions();
    mdp.transition = model.transition_tensor();
    mdp.reward = model.reward_table();
    return mdp;
}

} // namespace decpomdp
