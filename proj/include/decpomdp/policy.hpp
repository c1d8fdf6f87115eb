#pragma once

#include "decpomdp/belief.hpp"
#include "decpomdp/error.hpp"
#include "decpomdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace decpomdp {

/// |S|-vector of state-conditional values of a joint policy tree.
using AlphaVector = std::vector<double>;

/// A node of a local policy tree: root action plus one subtree id (one level
/// down in the same pool) per local observation. Depth-0 trees are the empty
/// tree and have no children.
struct LocalTree {
    int action = -1;
    std::vector<int> children;

    bool operator==(const LocalTree&) const = default;
    bool operator<(const LocalTree& o) const {
        return action != o.action ? action < o.action : children < o.children;
    }
};

struct IdTupleHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::size_t h = 0xcbf29ce484222325ull;
        for (int x : v) h = (h ^ static_cast<std::size_t>(x)) * 0x100000001b3ull;
        return h;
    }
};

/**
 * Shared storage of local policy trees, one id space per (agent, depth).
 *
 * Trees are immutable and deduplicated: adding an existing (action, children)
 * pair returns its id. Alpha-vectors of joint id tuples are memoized per depth.
 */
class TreePool {
public:
    explicit TreePool(int num_agents) : trees_(num_agents), index_(num_agents) {
        for (int i = 0; i < num_agents; ++i) add(i, 0, -1, {});
    }

    int num_agents() const { return static_cast<int>(trees_.size()); }

    int add(int agent, int depth, int action, std::vector<int> children) {
        ensure_depth(agent, depth);
        LocalTree t{action, std::move(children)};
        auto& idx = index_[agent][depth];
        if (auto it = idx.find(t); it != idx.end()) return it->second;
        const int id = static_cast<int>(trees_[agent][depth].size());
        trees_[agent][depth].push_back(t);
        idx.emplace(std::move(t), id);
        return id;
    }

    const LocalTree& tree(int agent, int depth, int id) const { return trees_[agent][depth][id]; }

    int size(int agent, int depth) const {
        return depth < static_cast<int>(trees_[agent].size())
                   ? static_cast<int>(trees_[agent][depth].size())
                   : 0;
    }

    const AlphaVector* find_alpha(int depth, const std::vector<int>& ids) const {
        if (depth >= static_cast<int>(memo_.size())) return nullptr;
        auto it = memo_[depth].find(ids);
        return it == memo_[depth].end() ? nullptr : &it->second;
    }

    const AlphaVector& store_alpha(int depth, const std::vector<int>& ids, AlphaVector alpha) {
        if (depth >= static_cast<int>(memo_.size())) memo_.resize(depth + 1);
        return memo_[depth].insert_or_assign(ids, std::move(alpha)).first->second;
    }

    void clear_memo() { memo_.clear(); }

    /// Drop memoized alpha-vectors of one depth (trees are kept).
    void release_memo(int depth) {
        if (depth < static_cast<int>(memo_.size())) memo_[depth].clear();
    }

private:
    void ensure_depth(int agent, int depth) {
        if (depth >= static_cast<int>(trees_[agent].size())) {
            trees_[agent].resize(depth + 1);
            index_[agent].resize(depth + 1);
        }
    }

    std::vector<std::vector<std::vector<LocalTree>>> trees_;
    std::vector<std::vector<std::map<LocalTree, int>>> index_;
    std::vector<std::unordered_map<std::vector<int>, AlphaVector, IdTupleHash>> memo_;
};

/// Tuple of local trees of equal depth, one per agent, living in a TreePool.
struct JointPolicy {
    int depth = 0;
    std::vector<int> roots;

    bool operator==(const JointPolicy&) const = default;
};

/// Flat joint action at the root of q.
inline int root_action(const DecPomdp& model, const TreePool& pool, const JointPolicy& q) {
    std::vector<int> comps(model.num_agents());
    for (int i = 0; i < model.num_agents(); ++i) comps[i] = pool.tree(i, q.depth, q.roots[i]).action;
    return model.joint_actions().encode(comps);
}

/// Joint subtree q(o) for flat joint observation o.
inline JointPolicy subtree(const DecPomdp& model, const TreePool& pool, const JointPolicy& q, int o) {
    JointPolicy child{q.depth - 1, std::vector<int>(model.num_agents())};
    for (int i = 0; i < model.num_agents(); ++i)
        child.roots[i] =
            pool.tree(i, q.depth, q.roots[i]).children[model.joint_observations().component(o, i)];
    return child;
}

/**
 * Alpha-vector of q by the value recursion
 *   V_q(s) = R(s, a_q) + sum_{s', o} T(s'|s,a_q) O(o|s,a_q,s') V_{q(o)}(s'),
 * memoized in the pool.
 */
inline const AlphaVector& evaluate(const DecPomdp& model, TreePool& pool, const JointPolicy& q) {
    if (const auto* hit = pool.find_alpha(q.depth, q.roots)) return *hit;
    const int ns = model.num_states();
    AlphaVector alpha(ns, 0.0);
    if (q.depth > 0) {
        const int a = root_action(model, pool, q);
        std::vector<const AlphaVector*> child(model.num_joint_observations());
        for (int o = 0; o < model.num_joint_observations(); ++o)
            child[o] = &evaluate(model, pool, subtree(model, pool, q, o));
        for (int s = 0; s < ns; ++s) {
            double v = model.reward(s, a);
            for (const auto& e : model.successors(a, s)) v += e.probability * (*child[e.observation])[e.next_state];
            alpha[s] = v;
        }
    }
    return pool.store_alpha(q.depth, q.roots, std::move(alpha));
}

inline double value_at(const AlphaVector& alpha, const Belief& b) {
    double v = 0.0;
    for (std::size_t s = 0; s < alpha.size(); ++s) v += alpha[s] * b[s];
    return v;
}

struct RolloutResult {
    double mean = 0.0;
    double standard_error = 0.0;
};

/**
 * Monte-Carlo estimate of the value of q from b0. Each agent descends its own
 * tree using only its component of the sampled joint observation.
 */
template <class Rng>
RolloutResult rollout(const DecPomdp& model, const TreePool& pool, const JointPolicy& q,
                      const Belief& b0, int episodes, Rng& rng) {
    if (episodes < 1) throw SemanticError("rollout needs at least one episode");
    const int n = model.num_agents();
    std::vector<double> weights;
    double mean = 0.0, m2 = 0.0;
    std::vector<int> node(n), comps(n);
    for (int ep = 0; ep < episodes; ++ep) {
        int s = sample_index(b0, uniform01(rng));
        node = q.roots;
        double total = 0.0;
        for (int d = q.depth; d > 0; --d) {
            for (int i = 0; i < n; ++i) comps[i] = pool.tree(i, d, node[i]).action;
            const int a = model.joint_actions().encode(comps);
            total += model.reward(s, a);
            const auto succ = model.successors(a, s);
            weights.resize(succ.size());
            for (std::size_t k = 0; k < succ.size(); ++k) weights[k] = succ[k].probability;
            const auto& e = succ[sample_index(weights, uniform01(rng))];
            s = e.next_state;
            for (int i = 0; i < n; ++i)
                node[i] = pool.tree(i, d, node[i]).children[model.joint_observations().component(e.observation, i)];
        }
        const double delta = total - mean;
        mean += delta / (ep + 1);
        m2 += delta * (total - mean);
    }
    RolloutResult r;
    r.mean = mean;
    if (episodes > 1) r.standard_error = std::sqrt(m2 / (episodes - 1) / episodes);
    return r;
}

/// Actions taken by one agent's tree when it receives `local_obs` in order.
inline std::vector<int> local_action_sequence(const TreePool& pool, int agent, int depth, int root,
                                              const std::vector<int>& local_obs) {
    std::vector<int> out;
    int id = root;
    for (int d = depth; d > 0; --d) {
        const auto& t = pool.tree(agent, d, id);
        out.push_back(t.action);
        if (d > 1) id = t.children[local_obs.at(depth - d)];
    }
    return out;
}

/**
 * Text form of a joint policy. Trees are listed bottom-up and shared by id,
 * so long horizons stay linear in size:
 *
 *   policy <num-agents> <depth>
 *   root <agent> <id>
 *   tree <agent> <depth> <id> <action> <child-id per local observation>
 *
 * Ids are renumbered densely per (agent, depth) in increasing pool-id order.
 */
inline std::string serialize_policy(const DecPomdp& model, const TreePool& pool, const JointPolicy& q) {
    const int n = model.num_agents();
    std::ostringstream out;
    out << "policy " << n << " " << q.depth << "\n";
    std::vector<std::vector<std::map<int, int>>> renumber(n, std::vector<std::map<int, int>>(q.depth + 1));
    for (int i = 0; i < n; ++i) {
        std::vector<int> frontier{q.roots[i]};
        for (int d = q.depth; d >= 0; --d) {
            std::vector<int> next;
            for (int id : frontier) renumber[i][d].emplace(id, 0);
            for (auto& [id, _] : renumber[i][d])
                if (d > 0)
                    for (int c : pool.tree(i, d, id).children) next.push_back(c);
            int k = 0;
            for (auto& [id, fresh] : renumber[i][d]) fresh = k++;
            frontier = std::move(next);
        }
    }
    for (int i = 0; i < n; ++i) out << "root " << i << " " << renumber[i][q.depth][q.roots[i]] << "\n";
    for (int i = 0; i < n; ++i)
        for (int d = 1; d <= q.depth; ++d)
            for (const auto& [id, fresh] : renumber[i][d]) {
                const auto& t = pool.tree(i, d, id);
                out << "tree " << i << " " << d << " " << fresh << " " << model.action_names(i)[t.action];
                for (int c : t.children) out << " " << renumber[i][d - 1].at(c);
                out << "\n";
            }
    return out.str();
}

/// Load a policy written by serialize_policy into `pool`.
inline JointPolicy parse_policy(const DecPomdp& model, TreePool& pool, const std::string& text) {
    const int n = model.num_agents();
    std::istringstream in(text);
    std::string word;
    int agents = 0, depth = 0;
    if (!(in >> word >> agents >> depth) || word != "policy")
        throw PolicyModelMismatch("policy text must start with 'policy <agents> <depth>'");
    if (agents != n)
        throw PolicyModelMismatch("policy has " + std::to_string(agents) + " agents, model has " +
                                  std::to_string(n));
    if (depth < 0) throw PolicyModelMismatch("negative policy depth");
    JointPolicy q{depth, std::vector<int>(n, 0)};
    std::vector<int> root_local(n, -1);
    // local id -> pool id, per agent and depth
    std::vector<std::vector<std::map<int, int>>> ids(n, std::vector<std::map<int, int>>(depth + 1));
    struct Row {
        int agent, depth, id, action;
        std::vector<int> children;
    };
    std::vector<Row> rows;
    while (in >> word) {
        if (word == "root") {
            int i, id;
            if (!(in >> i >> id) || i < 0 || i >= n) throw PolicyModelMismatch("bad root line");
            root_local[i] = id;
        } else if (word == "tree") {
            Row r;
            std::string action;
            if (!(in >> r.agent >> r.depth >> r.id >> action) || r.agent < 0 || r.agent >= n ||
                r.depth < 1 || r.depth > depth)
                throw PolicyModelMismatch("bad tree line");
            const auto& names = model.action_names(r.agent);
            auto it = std::find(names.begin(), names.end(), action);
            if (it == names.end()) throw PolicyModelMismatch("unknown action '" + action + "'");
            r.action = static_cast<int>(it - names.begin());
            const int no = model.num_observations(r.agent);
            r.children.resize(no);
            for (int k = 0; k < no; ++k)
                if (!(in >> r.children[k])) throw PolicyModelMismatch("tree line has too few children");
            rows.push_back(std::move(r));
        } else {
            throw PolicyModelMismatch("unexpected token '" + word + "' in policy");
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.depth < b.depth; });
    for (int i = 0; i < n; ++i) ids[i][0][0] = 0;
    for (const auto& r : rows) {
        std::vector<int> children;
        for (int c : r.children) {
            auto it = ids[r.agent][r.depth - 1].find(c);
            if (it == ids[r.agent][r.depth - 1].end())
                throw PolicyModelMismatch("tree references undefined subtree " + std::to_string(c));
            children.push_back(it->second);
        }
        ids[r.agent][r.depth][r.id] = pool.add(r.agent, r.depth, r.action, std::move(children));
    }
    for (int i = 0; i < n; ++i) {
        if (root_local[i] < 0) throw PolicyModelMismatch("missing root for agent " + std::to_string(i));
        auto it = ids[i][depth].find(root_local[i]);
        if (it == ids[i][depth].end()) throw PolicyModelMismatch("root refers to an undefined tree");
        q.roots[i] = it->second;
    }
    return q;
}

} // namespace decpomdp
