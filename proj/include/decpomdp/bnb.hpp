#pragma once

#include "decpomdp/error.hpp"
#include "decpomdp/stage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <vector>

namespace decpomdp {

enum class SearchStrategy { DepthFirst, BestFirst };

/**
 * Partially specified joint tree. assignment[i][o_i] is a position in agent
 * i's previous-stage set, or -1 while unassigned. Subtrees are only ever fixed
 * per agent and local observation, so every completion is decentralisable.
 */
struct SearchNode {
    int action = -1; // flat joint action, -1 when not fixed yet
    std::vector<std::vector<int>> assignment;
    double bound = 0.0;
};

/// Leaves to skip: the already selected joint trees (Sel), and optionally
/// local trees per agent that are no longer available.
struct SearchFilter {
    const std::set<JointCandidate>* selected = nullptr;
    const std::vector<std::set<Candidate>>* excluded_locals = nullptr;

    bool accepts(const JointCandidate& q) const {
        if (selected && selected->count(q)) return false;
        if (excluded_locals)
            for (std::size_t i = 0; i < q.size(); ++i)
                if ((*excluded_locals)[i].count(q[i])) return false;
        return true;
    }
};

struct SearchOptions {
    SearchStrategy strategy = SearchStrategy::DepthFirst;
    std::uint64_t node_limit = 100'000'000;
    /// Called for every node whose bound is computed (testing hook).
    std::function<void(const SearchNode&)> observer;
};

struct SearchResult {
    JointCandidate best;
    double value = 0.0;
    std::uint64_t nodes = 0;
};

namespace detail {

/// Bound bookkeeping for one fixed joint action.
class BoundEvaluator {
public:
    BoundEvaluator(const StageBackup& backup, const PointTable& table)
        : backup_(backup), table_(table), n_(backup.num_agents()),
          no_(backup.model().num_joint_observations()) {
        const int na = backup.model().num_joint_actions();
        full_max_.assign(static_cast<std::size_t>(na) * no_, 0.0);
        for (int a = 0; a < na; ++a)
            for (int o = 0; o < no_; ++o) {
                const double* row = table.row(a, o);
                full_max_[static_cast<std::size_t>(a) * no_ + o] = *std::max_element(row, row + table.num_tuples);
            }
        for (int i = 0; i < n_; ++i) stride_.push_back(backup.tuples().stride(i));
    }

    /// Best value of joint observation o's term over tuples consistent with
    /// the fixed components of `assign`.
    double contribution(int a, int o, const std::vector<std::vector<int>>& assign) const {
        int base = 0;
        free_.clear();
        for (int i = 0; i < n_; ++i) {
            const int c = assign[i][backup_.obs_component(o, i)];
            if (c < 0) free_.push_back(i);
            else base += c * stride_[i];
        }
        const double* row = table_.row(a, o);
        if (free_.empty()) return row[base];
        if (static_cast<int>(free_.size()) == n_) return full_max_[static_cast<std::size_t>(a) * no_ + o];
        if (free_.size() == 1) {
            const int i = free_[0];
            double best = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < backup_.prev_size(i); ++c) best = std::max(best, row[base + c * stride_[i]]);
            return best;
        }
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> pos(free_.size(), 0);
        while (true) {
            int t = base;
            for (std::size_t k = 0; k < free_.size(); ++k) t += pos[k] * stride_[free_[k]];
            best = std::max(best, row[t]);
            std::size_t k = free_.size();
            while (k > 0) {
                --k;
                if (++pos[k] < backup_.prev_size(free_[k])) break;
                pos[k] = 0;
                if (k == 0) return best;
            }
        }
    }

    double bound(int a, const std::vector<std::vector<int>>& assign) const {
        double f = table_.reward[a];
        for (int o = 0; o < no_; ++o) f += contribution(a, o, assign);
        return f;
    }

    double root_bound(int a) const {
        double f = table_.reward[a];
        for (int o = 0; o < no_; ++o) f += full_max_[static_cast<std::size_t>(a) * no_ + o];
        return f;
    }

private:
    const StageBackup& backup_;
    const PointTable& table_;
    int n_;
    int no_;
    std::vector<double> full_max_;
    std::vector<int> stride_;
    mutable std::vector<int> free_;
};

struct Slot {
    int agent;
    int observation;
};

class JointSearch {
public:
    JointSearch(const StageBackup& backup, const PointTable& table, const SearchFilter& filter,
                const SearchOptions& options)
        : backup_(backup), table_(table), filter_(filter), options_(options), eval_(backup, table),
          n_(backup.num_agents()) {
        const auto& m = backup.model();
        for (int i = 0; i < n_; ++i)
            for (int oi = 0; oi < m.num_observations(i); ++oi) canonical_slots_.push_back({i, oi});
    }

    SearchResult run() {
        const double best = options_.strategy == SearchStrategy::BestFirst ? best_first() : depth_first();
        if (!found_) throw SearchSpaceExhausted("every joint tree of the search space is excluded");
        // Second pass: lexicographically first leaf attaining the optimum, so
        // both strategies return the same representative.
        const double tol = 1e-9 * (1.0 + std::abs(best));
        target_ = best - tol;
        slack_ = tol;
        found_ = false;
        for (int a = 0; a < backup_.model().num_joint_actions() && !found_; ++a) {
            auto assign = empty_assignment();
            const double f = eval_.root_bound(a);
            count(a, assign, f);
            if (f < target_ - slack_) continue;
            lexicographic(a, assign, 0);
        }
        if (!found_) { // numerically unreachable; keep the first-pass leaf
            result_.best = first_pass_best_;
            result_.value = best;
        }
        result_.nodes = nodes_;
        return result_;
    }

private:
    std::vector<std::vector<int>> empty_assignment() const {
        std::vector<std::vector<int>> assign(n_);
        for (int i = 0; i < n_; ++i) assign[i].assign(backup_.model().num_observations(i), -1);
        return assign;
    }

    void count(int a, const std::vector<std::vector<int>>& assign, double bound) {
        if (++nodes_ > options_.node_limit)
            throw NodeLimitExceeded("branch-and-bound node limit of " + std::to_string(options_.node_limit) +
                                    " exceeded");
        if (options_.observer) options_.observer(SearchNode{a, assign, bound});
    }

    JointCandidate leaf(int a, const std::vector<std::vector<int>>& assign) const {
        JointCandidate q(n_);
        for (int i = 0; i < n_; ++i) {
            q[i].action = backup_.model().joint_actions().component(a, i);
            q[i].children = assign[i];
        }
        return q;
    }

    // Slots ordered by decreasing Pr(o_i | b, a), ties by (agent, o_i).
    std::vector<Slot> ordered_slots(int a) const {
        const auto& m = backup_.model();
        std::vector<std::pair<double, Slot>> keyed;
        for (const auto& sl : canonical_slots_) {
            double p = 0.0;
            for (int o = 0; o < m.num_joint_observations(); ++o)
                if (backup_.obs_component(o, sl.agent) == sl.observation) p += table_.prob(a, o);
            keyed.push_back({p, sl});
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        std::vector<Slot> out;
        for (auto& k : keyed) out.push_back(k.second);
        return out;
    }

    void accept_leaf(int a, const std::vector<std::vector<int>>& assign, double& incumbent) {
        JointCandidate q = leaf(a, assign);
        if (!filter_.accepts(q)) return;
        const double v = backup_.joint_value(table_, q);
        if (!found_ || v > incumbent) {
            incumbent = v;
            first_pass_best_ = std::move(q);
            found_ = true;
        }
    }

    double depth_first() {
        const int na = backup_.model().num_joint_actions();
        std::vector<std::pair<double, int>> roots;
        for (int a = 0; a < na; ++a) {
            const double f = eval_.root_bound(a);
            count(a, empty_assignment(), f);
            roots.push_back({f, a});
        }
        std::stable_sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
        double incumbent = -std::numeric_limits<double>::infinity();
        for (const auto& [f, a] : roots) {
            if (found_ && f <= incumbent + 1e-12) continue;
            slots_ = ordered_slots(a);
            auto assign = empty_assignment();
            dfs(a, assign, 0, incumbent);
        }
        return incumbent;
    }

    void dfs(int a, std::vector<std::vector<int>>& assign, std::size_t k, double& incumbent) {
        if (k == slots_.size()) {
            accept_leaf(a, assign, incumbent);
            return;
        }
        const Slot sl = slots_[k];
        const int w = backup_.prev_size(sl.agent);
        std::vector<std::pair<double, int>> children;
        children.reserve(w);
        for (int c = 0; c < w; ++c) {
            assign[sl.agent][sl.observation] = c;
            const double f = eval_.bound(a, assign);
            count(a, assign, f);
            children.push_back({f, c});
        }
        std::stable_sort(children.begin(), children.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        for (const auto& [f, c] : children) {
            if (found_ && f <= incumbent + 1e-12) break;
            assign[sl.agent][sl.observation] = c;
            dfs(a, assign, k + 1, incumbent);
        }
        assign[sl.agent][sl.observation] = -1;
    }

    struct QueueEntry {
        double bound;
        int depth;
        std::uint64_t seq;
        int action;
        std::vector<std::vector<int>> assign;
        bool operator<(const QueueEntry& o) const {
            if (bound != o.bound) return bound < o.bound;
            if (depth != o.depth) return depth < o.depth;
            return seq > o.seq;
        }
    };

    double best_first() {
        const int na = backup_.model().num_joint_actions();
        std::priority_queue<QueueEntry> frontier;
        std::uint64_t seq = 0;
        std::vector<std::vector<Slot>> slots(na);
        for (int a = 0; a < na; ++a) {
            auto assign = empty_assignment();
            const double f = eval_.root_bound(a);
            count(a, assign, f);
            frontier.push({f, 0, seq++, a, std::move(assign)});
        }
        double incumbent = -std::numeric_limits<double>::infinity();
        while (!frontier.empty()) {
            QueueEntry e = frontier.top();
            frontier.pop();
            if (slots[e.action].empty()) slots[e.action] = ordered_slots(e.action);
            const auto& order = slots[e.action];
            if (e.depth == static_cast<int>(order.size())) {
                accept_leaf(e.action, e.assign, incumbent);
                if (found_) return incumbent;
                continue;
            }
            const Slot sl = order[e.depth];
            for (int c = 0; c < backup_.prev_size(sl.agent); ++c) {
                e.assign[sl.agent][sl.observation] = c;
                const double f = eval_.bound(e.action, e.assign);
                count(e.action, e.assign, f);
                frontier.push({f, e.depth + 1, seq++, e.action, e.assign});
            }
        }
        return incumbent;
    }

    void lexicographic(int a, std::vector<std::vector<int>>& assign, std::size_t k) {
        if (k == canonical_slots_.size()) {
            JointCandidate q = leaf(a, assign);
            if (!filter_.accepts(q)) return;
            const double v = backup_.joint_value(table_, q);
            if (v >= target_) {
                result_.best = std::move(q);
                result_.value = v;
                found_ = true;
            }
            return;
        }
        const Slot sl = canonical_slots_[k];
        for (int c = 0; c < backup_.prev_size(sl.agent) && !found_; ++c) {
            assign[sl.agent][sl.observation] = c;
            const double f = eval_.bound(a, assign);
            count(a, assign, f);
            if (f < target_ - slack_) continue;
            lexicographic(a, assign, k + 1);
        }
        assign[sl.agent][sl.observation] = -1;
    }

    const StageBackup& backup_;
    const PointTable& table_;
    const SearchFilter& filter_;
    const SearchOptions& options_;
    BoundEvaluator eval_;
    int n_;
    std::vector<Slot> canonical_slots_;
    std::vector<Slot> slots_;
    bool found_ = false;
    JointCandidate first_pass_best_;
    double target_ = 0.0;
    double slack_ = 0.0;
    std::uint64_t nodes_ = 0;
    SearchResult result_;
};

} // namespace detail

/**
 * Upper bound f of a search node at the belief projected in `table`:
 * joint observations whose subtree is fixed contribute their exact term, the
 * others the best term over tuples consistent with their fixed components.
 * Nodes without a root action take the maximum over joint actions.
 */
inline double node_bound(const StageBackup& backup, const PointTable& table, const SearchNode& node) {
    detail::BoundEvaluator eval(backup, table);
    if (node.action >= 0) return eval.bound(node.action, node.assignment);
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < backup.model().num_joint_actions(); ++a) best = std::max(best, eval.bound(a, node.assignment));
    return best;
}

/**
 * Exact argmax of V_q(b) over decentralisable joint trees built from the
 * previous-stage sets, skipping filtered leaves. Among optimal trees the one
 * with the lexicographically smallest (actions, assignments) encoding is
 * returned, whatever the strategy.
 */
inline SearchResult best_joint(const StageBackup& backup, const PointTable& table,
                               const SearchFilter& filter = {}, const SearchOptions& options = {}) {
    return detail::JointSearch(backup, table, filter, options).run();
}

inline SearchResult best_joint(const StageBackup& backup, const Belief& b, const SearchFilter& filter = {},
                               const SearchOptions& options = {}) {
    const PointTable table = backup.project(b);
    return best_joint(backup, table, filter, options);
}

/**
 * PBIP operator: for each point, the best joint tree not selected yet joins
 * Sel and its local trees join the new sets. Stops early once every joint
 * tree of the search space has been selected.
 */
inline std::vector<std::vector<Candidate>> pbip_operator(const StageBackup& backup,
                                                          const std::vector<Belief>& points,
                                                          const SearchOptions& options = {}) {
    const int n = backup.num_agents();
    std::set<JointCandidate> sel;
    std::vector<std::vector<Candidate>> sets(n);
    SearchFilter filter{&sel, nullptr};
    for (const auto& b : points) {
        SearchResult r;
        try {
            r = best_joint(backup, b, filter, options);
        } catch (const SearchSpaceExhausted&) {
            break;
        }
        for (int i = 0; i < n; ++i)
            if (std::find(sets[i].begin(), sets[i].end(), r.best[i]) == sets[i].end()) sets[i].push_back(r.best[i]);
        sel.insert(std::move(r.best));
    }
    return sets;
}

} // namespace decpomdp
