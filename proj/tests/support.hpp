#pragma once

#include "decpomdp/model.hpp"
#include "decpomdp/bnb.hpp"
#include "decpomdp/policy.hpp"
#include "decpomdp/stage.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

namespace testing_support {

using namespace decpomdp;

inline std::vector<double> random_distribution(std::mt19937_64& rng, int n, double zero_prob = 0.3) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n);
    double total = 0.0;
    for (double& x : p) {
        x = u(rng) < zero_prob ? 0.0 : u(rng);
        total += x;
    }
    if (total == 0.0) {
        p[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1.0;
        return p;
    }
    for (double& x : p) x /= total;
    return p;
}

/// Random two-agent model with per-(a, s') observation rows.
inline DecPomdp random_model(std::mt19937_64& rng, int ns, int na1, int na2, int no1, int no2) {
    std::vector<std::string> states, a1, a2, o1, o2;
    for (int s = 0; s < ns; ++s) states.push_back("s" + std::to_string(s));
    for (int a = 0; a < na1; ++a) a1.push_back("a" + std::to_string(a));
    for (int a = 0; a < na2; ++a) a2.push_back("a" + std::to_string(a));
    for (int o = 0; o < no1; ++o) o1.push_back("o" + std::to_string(o));
    for (int o = 0; o < no2; ++o) o2.push_back("o" + std::to_string(o));
    ModelBuilder b({"x", "y"}, states, {a1, a2}, {o1, o2});
    std::uniform_real_distribution<double> r(-10.0, 10.0);
    for (int a = 0; a < b.num_joint_actions(); ++a)
        for (int s = 0; s < ns; ++s) {
            const auto t = random_distribution(rng, ns);
            for (int s2 = 0; s2 < ns; ++s2) {
                b.set_transition(a, s, s2, t[s2]);
                const auto o = random_distribution(rng, b.num_joint_observations());
                for (int k = 0; k < b.num_joint_observations(); ++k) b.set_observation(a, s, s2, k, o[k]);
            }
            b.set_reward(s, a, r(rng));
        }
    b.set_initial_belief(random_distribution(rng, ns, 0.0));
    b.set_default_horizon(2);
    return b.build();
}

/// Plain recursive local policy tree, independent of TreePool.
struct Tree {
    int action = 0;
    std::vector<std::shared_ptr<const Tree>> children;
};
using TreePtr = std::shared_ptr<const Tree>;

inline std::vector<TreePtr> all_trees(int depth, int na, int no) {
    if (depth == 0) return {nullptr};
    const auto sub = all_trees(depth - 1, na, no);
    std::vector<TreePtr> out;
    std::vector<int> pick(no, 0);
    for (int a = 0; a < na; ++a) {
        std::fill(pick.begin(), pick.end(), 0);
        while (true) {
            auto t = std::make_shared<Tree>();
            t->action = a;
            for (int o = 0; o < no; ++o)
                if (depth > 1) t->children.push_back(sub[pick[o]]);
            out.push_back(t);
            int k = no - 1;
            while (k >= 0 && ++pick[k] == static_cast<int>(sub.size())) pick[k--] = 0;
            if (k < 0 || depth == 1) break;
        }
    }
    return out;
}

/// Value of a two-agent joint tree from state s, by direct recursion.
inline double tree_value(const DecPomdp& m, const TreePtr& t1, const TreePtr& t2, int s) {
    if (!t1) return 0.0;
    const int a = m.joint_actions().encode(std::vector<int>{t1->action, t2->action});
    double v = m.reward(s, a);
    if (t1->children.empty()) return v;
    for (int s2 = 0; s2 < m.num_states(); ++s2) {
        const double t = m.transition(a, s, s2);
        if (t == 0.0) continue;
        for (int o = 0; o < m.num_joint_observations(); ++o) {
            const double p = m.observation(a, s, s2, o);
            if (p == 0.0) continue;
            const auto oc = m.joint_observations().decode(o);
            v += t * p * tree_value(m, t1->children[oc[0]], t2->children[oc[1]], s2);
        }
    }
    return v;
}

inline double tree_value(const DecPomdp& m, const TreePtr& t1, const TreePtr& t2, const std::vector<double>& b) {
    double v = 0.0;
    for (int s = 0; s < m.num_states(); ++s) v += b[s] * tree_value(m, t1, t2, s);
    return v;
}

/// Optimal value over all joint depth-h policies at b, by enumeration.
inline double brute_force_optimum(const DecPomdp& m, int h, const std::vector<double>& b) {
    const auto q1 = all_trees(h, m.num_actions(0), m.num_observations(0));
    const auto q2 = all_trees(h, m.num_actions(1), m.num_observations(1));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& t1 : q1)
        for (const auto& t2 : q2) best = std::max(best, tree_value(m, t1, t2, b));
    return best;
}

/// Random local tree of the given depth added to the pool; returns its id.
inline int random_tree(TreePool& pool, const DecPomdp& m, int agent, int depth, std::mt19937_64& rng) {
    if (depth == 0) return 0;
    const int a = std::uniform_int_distribution<int>(0, m.num_actions(agent) - 1)(rng);
    std::vector<int> children;
    for (int o = 0; o < m.num_observations(agent); ++o) children.push_back(random_tree(pool, m, agent, depth - 1, rng));
    return pool.add(agent, depth, a, children);
}

/// Converts a pool tree to a plain tree.
inline TreePtr to_tree(const TreePool& pool, int agent, int depth, int id) {
    if (depth == 0) return nullptr;
    const auto& lt = pool.tree(agent, depth, id);
    auto t = std::make_shared<Tree>();
    t->action = lt.action;
    if (depth > 1)
        for (int c : lt.children) t->children.push_back(to_tree(pool, agent, depth - 1, c));
    return t;
}

/// A random previous stage: a model, a pool and per-agent tree sets.
struct StageInstance {
    DecPomdp model;
    TreePool pool{2};
    int prev_depth = 0;
    std::vector<std::vector<int>> sets;
};

inline std::unique_ptr<StageInstance> random_stage(std::mt19937_64& rng, int max_states = 4, int max_actions = 3,
                                                   int max_obs = 2, int max_set = 3) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto inst = std::make_unique<StageInstance>(StageInstance{
        random_model(rng, pick(1, max_states), pick(1, max_actions), pick(1, max_actions), pick(1, max_obs),
                     pick(1, max_obs))});
    inst->prev_depth = pick(0, 2);
    inst->sets.resize(2);
    for (int i = 0; i < 2; ++i) {
        if (inst->prev_depth == 0) {
            inst->sets[i] = {0};
            continue;
        }
        const int k = pick(1, max_set);
        for (int j = 0; j < k; ++j) {
            const int id = random_tree(inst->pool, inst->model, i, inst->prev_depth, rng);
            if (std::find(inst->sets[i].begin(), inst->sets[i].end(), id) == inst->sets[i].end())
                inst->sets[i].push_back(id);
        }
    }
    return inst;
}

/// Every local candidate (action, child position per local observation).
inline std::vector<Candidate> enumerate_candidates(const StageInstance& inst, int agent) {
    const int na = inst.model.num_actions(agent), no = inst.model.num_observations(agent);
    const int w = static_cast<int>(inst.sets[agent].size());
    std::vector<Candidate> out;
    for (int a = 0; a < na; ++a) {
        std::vector<int> pos(no, 0);
        while (true) {
            out.push_back({a, pos});
            int k = no - 1;
            while (k >= 0 && ++pos[k] == w) pos[k--] = 0;
            if (k < 0) break;
        }
    }
    return out;
}

inline TreePtr candidate_tree(const StageInstance& inst, int agent, const Candidate& c) {
    auto t = std::make_shared<Tree>();
    t->action = c.action;
    if (inst.prev_depth > 0)
        for (int p : c.children) t->children.push_back(to_tree(inst.pool, agent, inst.prev_depth, inst.sets[agent][p]));
    return t;
}

/// Values of every joint candidate at b, by direct recursion.
struct JointTable {
    std::vector<Candidate> c1, c2;
    std::vector<double> value; // value[k1 * |c2| + k2]
};

inline JointTable joint_table(const StageInstance& inst, const std::vector<double>& b) {
    JointTable jt{enumerate_candidates(inst, 0), enumerate_candidates(inst, 1), {}};
    std::vector<TreePtr> t1, t2;
    for (const auto& c : jt.c1) t1.push_back(candidate_tree(inst, 0, c));
    for (const auto& c : jt.c2) t2.push_back(candidate_tree(inst, 1, c));
    for (const auto& x : t1)
        for (const auto& y : t2) jt.value.push_back(tree_value(inst.model, x, y, b));
    return jt;
}

/// True when candidate c of an agent is a completion of the node's per-agent part.
inline bool consistent(const SearchNode& node, const DecPomdp& m, int agent, const Candidate& c) {
    if (node.action >= 0) {
        const auto comps = m.joint_actions().decode(node.action);
        if (comps[agent] != c.action) return false;
    }
    if (!node.assignment.empty())
        for (std::size_t o = 0; o < c.children.size(); ++o)
            if (node.assignment[agent][o] >= 0 && node.assignment[agent][o] != c.children[o]) return false;
    return true;
}

/// Largest value over completions of the node.
inline double best_completion(const SearchNode& node, const StageInstance& inst, const JointTable& jt) {
    double best = -std::numeric_limits<double>::infinity();
    const int n2 = static_cast<int>(jt.c2.size());
    for (std::size_t k1 = 0; k1 < jt.c1.size(); ++k1) {
        if (!consistent(node, inst.model, 0, jt.c1[k1])) continue;
        for (int k2 = 0; k2 < n2; ++k2)
            if (consistent(node, inst.model, 1, jt.c2[k2])) best = std::max(best, jt.value[k1 * n2 + k2]);
    }
    return best;
}

} // namespace testing_support
