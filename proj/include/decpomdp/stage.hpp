#pragma once

#include "decpomdp/belief.hpp"
#include "decpomdp/error.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/policy.hpp"

#include <algorithm>
#include <compare>
#include <limits>
#include <vector>

namespace decpomdp {

/**
 * A local tree of the stage under construction, written over positions in
 * its agent's previous-stage set: children[o_i] indexes prev_sets[agent].
 */
struct Candidate {
    int action = 0;
    std::vector<int> children;

    auto operator<=>(const Candidate&) const = default;
    bool operator==(const Candidate&) const = default;
};

/// One candidate per agent.
using JointCandidate = std::vector<Candidate>;

/**
 * Projection of one belief through the backup:
 *   reward[a]          = R(b, a)
 *   obs_prob[a][o]     = Pr(o | b, a)
 *   value[a][o][tuple] = sum_s b(s) sum_s' T(s'|s,a) O(o|s,a,s') alpha_tuple(s')
 * so that V_q(b) = reward[a_q] + sum_o value[a_q][o][q(o)] for any joint
 * candidate q. value[a][o][.] equals Pr(o|b,a) * alpha . tau(b,a,o).
 */
struct PointTable {
    int num_observations = 0;
    int num_tuples = 0;
    std::vector<double> reward;
    std::vector<double> obs_prob;
    std::vector<double> value;

    double h(int a, int o, int tuple) const {
        return value[(static_cast<std::size_t>(a) * num_observations + o) * num_tuples + tuple];
    }
    const double* row(int a, int o) const {
        return value.data() + (static_cast<std::size_t>(a) * num_observations + o) * num_tuples;
    }
    double prob(int a, int o) const { return obs_prob[static_cast<std::size_t>(a) * num_observations + o]; }
};

/**
 * Everything a DP operator needs about the previous stage: the per-agent
 * tree sets Q_i^{t+1} (pool ids at depth `prev_depth`), the alpha-vector of
 * every joint tuple of their product, and the projections
 *   g[a][s][o][tuple] = sum_s' T(s'|s,a) O(o|s,a,s') alpha_tuple(s').
 * Joint tuples are flat mixed-radix indices over the per-agent set positions.
 */
class StageBackup {
public:
    StageBackup(const DecPomdp& model, TreePool& pool, int prev_depth,
                std::vector<std::vector<int>> prev_sets)
        : model_(&model), pool_(&pool), prev_depth_(prev_depth), prev_sets_(std::move(prev_sets)) {
        const int n = model.num_agents();
        if (static_cast<int>(prev_sets_.size()) != n) throw SemanticError("one set per agent required");
        std::vector<int> sizes;
        for (const auto& s : prev_sets_) {
            if (s.empty()) throw SemanticError("previous-stage set is empty");
            sizes.push_back(static_cast<int>(s.size()));
        }
        tuples_ = MixedRadix(sizes);
        const int ns = model.num_states();
        const int nt = tuples_.size();
        const int na = model.num_joint_actions();
        const int no = model.num_joint_observations();

        // alpha_t[s'][tuple]
        alpha_t_.assign(static_cast<std::size_t>(ns) * nt, 0.0);
        for (int t = 0; t < nt; ++t) {
            JointPolicy q{prev_depth, ids_of_tuple(t)};
            const AlphaVector& alpha = evaluate(model, pool, q);
            for (int s = 0; s < ns; ++s) alpha_t_[static_cast<std::size_t>(s) * nt + t] = alpha[s];
        }

        g_.assign(static_cast<std::size_t>(na) * ns * no * nt, 0.0);
        for (int a = 0; a < na; ++a)
            for (int s = 0; s < ns; ++s)
                for (const auto& e : model.successors(a, s)) {
                    double* dst = g_.data() + g_index(a, s, e.observation);
                    const double* src = alpha_t_.data() + static_cast<std::size_t>(e.next_state) * nt;
                    for (int t = 0; t < nt; ++t) dst[t] += e.probability * src[t];
                }

        // o -> component per agent
        obs_components_.assign(static_cast<std::size_t>(no) * n, 0);
        for (int o = 0; o < no; ++o)
            for (int i = 0; i < n; ++i)
                obs_components_[static_cast<std::size_t>(o) * n + i] = model.joint_observations().component(o, i);
    }

    const DecPomdp& model() const { return *model_; }
    TreePool& pool() const { return *pool_; }
    int prev_depth() const { return prev_depth_; }
    int depth() const { return prev_depth_ + 1; }
    int num_agents() const { return model_->num_agents(); }
    const std::vector<std::vector<int>>& prev_sets() const { return prev_sets_; }
    int prev_size(int agent) const { return static_cast<int>(prev_sets_[agent].size()); }
    const MixedRadix& tuples() const { return tuples_; }
    int num_tuples() const { return tuples_.size(); }
    int obs_component(int o, int agent) const {
        return obs_components_[static_cast<std::size_t>(o) * num_agents() + agent];
    }

    std::vector<int> ids_of_tuple(int tuple) const {
        std::vector<int> ids(prev_sets_.size());
        for (std::size_t i = 0; i < prev_sets_.size(); ++i)
            ids[i] = prev_sets_[i][tuples_.component(tuple, static_cast<int>(i))];
        return ids;
    }

    double prev_alpha(int tuple, int s) const {
        return alpha_t_[static_cast<std::size_t>(s) * num_tuples() + tuple];
    }

    PointTable project(const Belief& b) const {
        const DecPomdp& m = *model_;
        const int ns = m.num_states();
        const int na = m.num_joint_actions();
        const int no = m.num_joint_observations();
        const int nt = num_tuples();
        PointTable pt;
        pt.num_observations = no;
        pt.num_tuples = nt;
        pt.reward.assign(na, 0.0);
        pt.obs_prob.assign(static_cast<std::size_t>(na) * no, 0.0);
        pt.value.assign(static_cast<std::size_t>(na) * no * nt, 0.0);
        for (int a = 0; a < na; ++a)
            for (int s = 0; s < ns; ++s) {
                const double w = b[s];
                if (w == 0.0) continue;
                pt.reward[a] += w * m.reward(s, a);
                for (const auto& e : m.successors(a, s))
                    pt.obs_prob[static_cast<std::size_t>(a) * no + e.observation] += w * e.probability;
                for (int o = 0; o < no; ++o) {
                    const double* src = g_.data() + g_index(a, s, o);
                    double* dst = pt.value.data() + (static_cast<std::size_t>(a) * no + o) * nt;
                    for (int t = 0; t < nt; ++t) dst[t] += w * src[t];
                }
            }
        return pt;
    }

    int joint_action(const JointCandidate& q) const {
        int a = 0;
        for (int i = 0; i < num_agents(); ++i) a += q[i].action * model_->joint_actions().stride(i);
        return a;
    }

    /// Flat previous-stage tuple reached by q under joint observation o.
    int subtuple(const JointCandidate& q, int o) const {
        int t = 0;
        for (int i = 0; i < num_agents(); ++i) t += q[i].children[obs_component(o, i)] * tuples_.stride(i);
        return t;
    }

    double joint_value(const PointTable& pt, const JointCandidate& q) const {
        const int a = joint_action(q);
        double v = pt.reward[a];
        for (int o = 0; o < model_->num_joint_observations(); ++o) v += pt.h(a, o, subtuple(q, o));
        return v;
    }

    AlphaVector alpha(const JointCandidate& q) const {
        const DecPomdp& m = *model_;
        const int a = joint_action(q);
        const int no = m.num_joint_observations();
        std::vector<int> sub(no);
        for (int o = 0; o < no; ++o) sub[o] = subtuple(q, o);
        AlphaVector out(m.num_states());
        for (int s = 0; s < m.num_states(); ++s) {
            double v = m.reward(s, a);
            for (int o = 0; o < no; ++o) v += g_[g_index(a, s, o) + sub[o]];
            out[s] = v;
        }
        return out;
    }

    /// Every local tree A_i x (Q_i^{t+1})^{Omega_i}, in lexicographic order.
    std::vector<Candidate> all_candidates(int agent, std::size_t limit = 10'000'000) const {
        const int na = model_->num_actions(agent);
        const int no = model_->num_observations(agent);
        const int w = prev_size(agent);
        double count = na;
        for (int k = 0; k < no; ++k) count *= w;
        if (count > static_cast<double>(limit))
            throw CapacityExceeded("exhaustive backup would build " + std::to_string(count) +
                                   " trees for agent " + std::to_string(agent) + " (limit " +
                                   std::to_string(limit) + ")");
        std::vector<Candidate> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int a = 0; a < na; ++a) {
            Candidate c{a, std::vector<int>(no, 0)};
            while (true) {
                out.push_back(c);
                int k = no - 1;
                while (k >= 0 && ++c.children[k] == w) c.children[k--] = 0;
                if (k < 0) break;
            }
        }
        return out;
    }

    /// Store a candidate as a pool tree at depth() and return its id.
    int commit(int agent, const Candidate& c) const {
        std::vector<int> ids(c.children.size());
        for (std::size_t k = 0; k < c.children.size(); ++k) ids[k] = prev_sets_[agent][c.children[k]];
        return pool_->add(agent, depth(), c.action, std::move(ids));
    }

private:
    std::size_t g_index(int a, int s, int o) const {
        const std::size_t ns = model_->num_states();
        const std::size_t no = model_->num_joint_observations();
        return ((a * ns + s) * no + o) * num_tuples();
    }

    const DecPomdp* model_;
    TreePool* pool_;
    int prev_depth_;
    std::vector<std::vector<int>> prev_sets_;
    MixedRadix tuples_;
    std::vector<double> alpha_t_;
    std::vector<double> g_;
    std::vector<int> obs_components_;
};

/**
 * Commit per-agent candidate sets to the pool and memoize the alpha-vector of
 * every joint tuple of their product. Returns the pool ids per agent.
 */
inline std::vector<std::vector<int>> commit_stage(const StageBackup& backup,
                                                  const std::vector<std::vector<Candidate>>& sets) {
    const int n = backup.num_agents();
    std::vector<std::vector<int>> ids(n);
    for (int i = 0; i < n; ++i)
        for (const auto& c : sets[i]) ids[i].push_back(backup.commit(i, c));
    std::vector<int> sizes;
    for (const auto& s : sets) sizes.push_back(static_cast<int>(s.size()));
    MixedRadix product(sizes);
    JointCandidate q(n);
    std::vector<int> key(n);
    for (int t = 0; t < product.size(); ++t) {
        for (int i = 0; i < n; ++i) {
            const int k = product.component(t, i);
            q[i] = sets[i][k];
            key[i] = ids[i][k];
        }
        if (!backup.pool().find_alpha(backup.depth(), key))
            backup.pool().store_alpha(backup.depth(), key, backup.alpha(q));
    }
    return ids;
}

} // namespace decpomdp
