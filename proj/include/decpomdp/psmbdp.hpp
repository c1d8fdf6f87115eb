#pragma once

#include "decpomdp/bnb.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <vector>

namespace decpomdp {

enum class SelectionMode { Exhaustive, BestFirst };
enum class AgentOrder { RoundRobin, GreedyBest };

inline constexpr double kImprovementTolerance = 1e-9;

/**
 * Sum over points of the best joint value over the product of `sets`
 * (no 1/N factor).
 */
inline double criterion_score(const StageBackup& backup, const CandidateSets& sets, const std::vector<Belief>& points) {
    const int n = backup.num_agents();
    std::vector<int> sizes;
    for (const auto& s : sets) sizes.push_back(static_cast<int>(s.size()));
    MixedRadix radix(sizes);
    double score = 0.0;
    JointCandidate q(n);
    for (const auto& b : points) {
        const PointTable table = backup.project(b);
        double best = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < radix.size(); ++t) {
            for (int i = 0; i < n; ++i) q[i] = sets[i][radix.component(t, i)];
            best = std::max(best, backup.joint_value(table, q));
        }
        score += best;
    }
    return score;
}

/**
 * Greedy selection state over a fixed multiset of points. Identical points
 * are merged into one weighted entry (in order of first occurrence); the
 * per-point cache holds the best joint value over the selected product.
 */
class SelectionState {
public:
    SelectionState(const StageBackup& backup, const std::vector<Belief>& points) : backup_(&backup) {
        std::map<Belief, int> index;
        for (const auto& b : points) {
            auto [it, fresh] = index.emplace(b, static_cast<int>(weights_.size()));
            if (fresh) {
                weights_.push_back(1.0);
                tables_.push_back(backup.project(b));
            } else {
                weights_[it->second] += 1.0;
            }
        }
        selected_.resize(backup.num_agents());
        cache_.assign(weights_.size(), -std::numeric_limits<double>::infinity());
        num_points_ = static_cast<int>(points.size());
    }

    const StageBackup& backup() const { return *backup_; }
    const CandidateSets& selected() const { return selected_; }
    int num_points() const { return num_points_; }
    int num_distinct_points() const { return static_cast<int>(weights_.size()); }
    double weight(int p) const { return weights_[p]; }
    const PointTable& table(int p) const { return tables_[p]; }
    double cached(int p) const { return cache_[p]; }

    /// Sum of cached best values (no 1/N factor).
    double score() const {
        double s = 0.0;
        for (std::size_t p = 0; p < cache_.size(); ++p) s += weights_[p] * cache_[p];
        return s;
    }
    double normalized_score() const { return score() / num_points_; }

    bool contains(int agent, const Candidate& c) const {
        return std::find(selected_[agent].begin(), selected_[agent].end(), c) != selected_[agent].end();
    }

    /// Seed every agent with the local trees of one joint tree.
    void seed(const JointCandidate& q) {
        for (int i = 0; i < backup_->num_agents(); ++i) selected_[i] = {q[i]};
        for (std::size_t p = 0; p < tables_.size(); ++p) cache_[p] = backup_->joint_value(tables_[p], q);
    }

    /// Best value at point p over tuples with `c` for `agent` and selected
    /// trees for the others.
    double best_with(int p, int agent, const Candidate& c) const {
        const int n = backup_->num_agents();
        JointCandidate q(n);
        q[agent] = c;
        double best = -std::numeric_limits<double>::infinity();
        for_each_coplayer(agent, q, [&](const JointCandidate& full) {
            best = std::max(best, backup_->joint_value(tables_[p], full));
        });
        return best;
    }

    void add(int agent, const Candidate& c) {
        for (std::size_t p = 0; p < tables_.size(); ++p)
            cache_[p] = std::max(cache_[p], best_with(static_cast<int>(p), agent, c));
        selected_[agent].push_back(c);
    }

    /// Enumerate q with q[agent] fixed and the others over the selected sets.
    template <class F>
    void for_each_coplayer(int agent, JointCandidate& q, F&& f) const {
        const int n = backup_->num_agents();
        std::vector<int> pos(n, 0);
        for (int j = 0; j < n; ++j)
            if (j != agent) q[j] = selected_[j][0];
        while (true) {
            f(q);
            int j = n - 1;
            for (; j >= 0; --j) {
                if (j == agent) continue;
                if (++pos[j] < static_cast<int>(selected_[j].size())) {
                    q[j] = selected_[j][pos[j]];
                    break;
                }
                pos[j] = 0;
                q[j] = selected_[j][0];
            }
            if (j < 0) return;
        }
    }

private:
    const StageBackup* backup_;
    std::vector<double> weights_;
    std::vector<PointTable> tables_;
    CandidateSets selected_;
    std::vector<double> cache_;
    int num_points_ = 0;
};

/// Criterion value after adding candidate c for agent i, computed
/// incrementally against the cache (no 1/N factor).
inline double marginal_gain(const SelectionState& state, int agent, const Candidate& c) {
    double f = 0.0;
    for (int p = 0; p < state.num_distinct_points(); ++p)
        f += state.weight(p) * std::max(state.cached(p), state.best_with(p, agent, c));
    return f;
}

namespace detail {

/**
 * Decomposition of Eq. (4) for one agent: for every point p, local action
 * a_i, co-player tuple c and local observation o_i, the contribution of each
 * previous-stage subtree x assigned to o_i:
 *   term[p][a_i][c][o_i][x] = sum_{o : o_i} h_p[a(a_i, c)][o][tuple(x, c(o))]
 * so that V(b_p) = base[p][a_i][c] + sum_{o_i} term[..][o_i][x_{o_i}].
 */
class LocalGainTable {
public:
    LocalGainTable(const SelectionState& state, int agent) : state_(state), agent_(agent) {
        const StageBackup& bk = state.backup();
        const DecPomdp& m = bk.model();
        const int n = bk.num_agents();
        na_ = m.num_actions(agent);
        no_ = m.num_observations(agent);
        w_ = bk.prev_size(agent);
        np_ = state.num_distinct_points();
        // co-player tuples
        JointCandidate q(n);
        q[agent] = Candidate{0, std::vector<int>(no_, 0)};
        state.for_each_coplayer(agent, q, [&](const JointCandidate& full) { coplayers_.push_back(full); });
        nc_ = static_cast<int>(coplayers_.size());

        base_.assign(static_cast<std::size_t>(np_) * na_ * nc_, 0.0);
        term_.assign(static_cast<std::size_t>(np_) * na_ * nc_ * no_ * w_, 0.0);
        tmax_.assign(static_cast<std::size_t>(np_) * na_ * nc_ * no_, 0.0);
        const int nobs = m.num_joint_observations();
        const int stride = bk.tuples().stride(agent);
        for (int ai = 0; ai < na_; ++ai)
            for (int c = 0; c < nc_; ++c) {
                JointCandidate full = coplayers_[c];
                full[agent].action = ai;
                const int a = bk.joint_action(full);
                // subtuple without agent i's component, per joint observation
                std::vector<int> rest(nobs);
                for (int o = 0; o < nobs; ++o) {
                    int t = 0;
                    for (int j = 0; j < n; ++j)
                        if (j != agent) t += full[j].children[bk.obs_component(o, j)] * bk.tuples().stride(j);
                    rest[o] = t;
                }
                for (int p = 0; p < np_; ++p) {
                    const PointTable& pt = state.table(p);
                    base_[bc(p, ai, c)] = pt.reward[a];
                    for (int o = 0; o < nobs; ++o) {
                        const int oi = bk.obs_component(o, agent);
                        const double* row = pt.row(a, o);
                        double* dst = term_.data() + (bc(p, ai, c) * no_ + oi) * w_;
                        for (int x = 0; x < w_; ++x) dst[x] += row[rest[o] + x * stride];
                    }
                    for (int oi = 0; oi < no_; ++oi) {
                        const double* src = term_.data() + (bc(p, ai, c) * no_ + oi) * w_;
                        tmax_[bc(p, ai, c) * no_ + oi] = *std::max_element(src, src + w_);
                    }
                }
            }
    }

    int num_actions() const { return na_; }
    int num_observations() const { return no_; }
    int width() const { return w_; }

    /// Exact criterion with candidate c added (no 1/N factor).
    double gain(const Candidate& c) const {
        double f = 0.0;
        for (int p = 0; p < np_; ++p) {
            double best = state_.cached(p);
            for (int k = 0; k < nc_; ++k) {
                const std::size_t i = bc(p, c.action, k);
                double v = base_[i];
                for (int oi = 0; oi < no_; ++oi) v += term_[(i * no_ + oi) * w_ + c.children[oi]];
                best = std::max(best, v);
            }
            f += state_.weight(p) * best;
        }
        return f;
    }

    /// Admissible bound for a partial candidate (-1 marks unassigned slots).
    double bound(int action, const std::vector<int>& children) const {
        double f = 0.0;
        for (int p = 0; p < np_; ++p) {
            double best = state_.cached(p);
            for (int k = 0; k < nc_; ++k) {
                const std::size_t i = bc(p, action, k);
                double v = base_[i];
                for (int oi = 0; oi < no_; ++oi)
                    v += children[oi] < 0 ? tmax_[i * no_ + oi] : term_[(i * no_ + oi) * w_ + children[oi]];
                best = std::max(best, v);
            }
            f += state_.weight(p) * best;
        }
        return f;
    }

private:
    std::size_t bc(int p, int ai, int c) const {
        return (static_cast<std::size_t>(p) * na_ + ai) * nc_ + c;
    }

    const SelectionState& state_;
    int agent_;
    int na_ = 0, no_ = 0, w_ = 0, np_ = 0, nc_ = 0;
    std::vector<JointCandidate> coplayers_;
    std::vector<double> base_;
    std::vector<double> term_;
    std::vector<double> tmax_;
};

struct LocalChoice {
    bool found = false;
    Candidate candidate;
    double gain = -std::numeric_limits<double>::infinity();
};

inline double gain_tolerance(double g) { return 1e-9 * (1.0 + std::abs(g)); }

/// Lexicographically first non-selected candidate whose gain reaches `target`.
inline bool first_reaching(const LocalGainTable& table, const SelectionState& state, int agent, double target,
                           double slack, Candidate& c, int slot, LocalChoice& out) {
    if (slot == table.num_observations()) {
        if (state.contains(agent, c)) return false;
        const double g = table.gain(c);
        if (g >= target) {
            out = {true, c, g};
            return true;
        }
        return false;
    }
    for (int x = 0; x < table.width(); ++x) {
        c.children[slot] = x;
        if (table.bound(c.action, c.children) < target - slack) continue;
        if (first_reaching(table, state, agent, target, slack, c, slot + 1, out)) return true;
    }
    c.children[slot] = -1;
    return false;
}

inline LocalChoice canonical_choice(const LocalGainTable& table, const SelectionState& state, int agent,
                                    double best) {
    const double tol = gain_tolerance(best);
    LocalChoice out;
    for (int a = 0; a < table.num_actions() && !out.found; ++a) {
        Candidate c{a, std::vector<int>(table.num_observations(), -1)};
        if (table.bound(a, c.children) < best - 2 * tol) continue;
        first_reaching(table, state, agent, best - tol, tol, c, 0, out);
    }
    return out;
}

inline LocalChoice best_local_exhaustive(const LocalGainTable& table, const SelectionState& state, int agent) {
    const auto all = state.backup().all_candidates(agent);
    std::vector<double> gains(all.size(), -std::numeric_limits<double>::infinity());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < all.size(); ++k) {
        if (state.contains(agent, all[k])) continue;
        gains[k] = table.gain(all[k]);
        best = std::max(best, gains[k]);
    }
    LocalChoice out;
    if (best == -std::numeric_limits<double>::infinity()) return out;
    const double target = best - gain_tolerance(best);
    for (std::size_t k = 0; k < all.size(); ++k)
        if (gains[k] >= target) return {true, all[k], gains[k]};
    return out;
}

inline LocalChoice best_local_befs(const LocalGainTable& table, const SelectionState& state, int agent,
                                   std::uint64_t node_limit) {
    struct Entry {
        double bound;
        int depth;
        std::uint64_t seq;
        Candidate c;
        bool operator<(const Entry& o) const {
            if (bound != o.bound) return bound < o.bound;
            if (depth != o.depth) return depth < o.depth;
            return seq > o.seq;
        }
    };
    const int no = table.num_observations();
    std::priority_queue<Entry> frontier;
    std::uint64_t seq = 0;
    std::uint64_t nodes = 0;
    auto push = [&](Entry e) {
        if (++nodes > node_limit)
            throw NodeLimitExceeded("local tree search exceeded " + std::to_string(node_limit) + " nodes");
        frontier.push(std::move(e));
    };
    for (int a = 0; a < table.num_actions(); ++a) {
        Candidate c{a, std::vector<int>(no, -1)};
        push({table.bound(a, c.children), 0, seq++, std::move(c)});
    }
    double best = -std::numeric_limits<double>::infinity();
    while (!frontier.empty()) {
        Entry e = frontier.top();
        frontier.pop();
        if (e.depth == no) {
            if (state.contains(agent, e.c)) continue;
            best = table.gain(e.c);
            break;
        }
        for (int x = 0; x < table.width(); ++x) {
            Entry child{0.0, e.depth + 1, seq++, e.c};
            child.c.children[e.depth] = x;
            child.bound = table.bound(child.c.action, child.c.children);
            push(std::move(child));
        }
    }
    if (best == -std::numeric_limits<double>::infinity()) return {};
    return canonical_choice(table, state, agent, best);
}

} // namespace detail

/// Best local tree of `agent` to add under Eq. (4), skipping selected ones.
inline detail::LocalChoice best_local_tree(const SelectionState& state, int agent, SelectionMode mode,
                                           std::uint64_t node_limit = 100'000'000) {
    detail::LocalGainTable table(state, agent);
    return mode == SelectionMode::Exhaustive ? detail::best_local_exhaustive(table, state, agent)
                                             : detail::best_local_befs(table, state, agent, node_limit);
}

struct PsmbdpOptions {
    SelectionMode mode = SelectionMode::Exhaustive;
    AgentOrder order = AgentOrder::RoundRobin;
    SearchOptions search;
};

struct PsmbdpResult {
    CandidateSets sets;
    JointCandidate anchor;
    /// Criterion score (no 1/N factor) after the anchor and after each addition.
    std::vector<double> score_history;
    double normalized_score = 0.0;
};

inline Belief mean_belief(const std::vector<Belief>& points) {
    Belief mean(points.front().size(), 0.0);
    for (const auto& b : points)
        for (std::size_t s = 0; s < b.size(); ++s) mean[s] += b[s];
    for (double& x : mean) x /= static_cast<double>(points.size());
    return mean;
}

/**
 * Greedy point-based selection of at most W local trees per agent. The
 * first joint tree is the best one at the mean of the points; trees are then
 * added one at a time while they raise the criterion by more than 1e-9.
 */
inline PsmbdpResult psmbdp_operator(const StageBackup& backup, const std::vector<Belief>& points, int width,
                                    const PsmbdpOptions& options = {}) {
    if (points.empty()) throw SemanticError("PSMBDP needs at least one point");
    if (width < 1) throw SemanticError("width must be at least 1");
    const int n = backup.num_agents();
    PsmbdpResult result;
    SearchOptions anchor_search = options.search;
    anchor_search.strategy = SearchStrategy::DepthFirst;
    result.anchor = best_joint(backup, mean_belief(points), SearchFilter{}, anchor_search).best;

    SelectionState state(backup, points);
    state.seed(result.anchor);
    result.score_history.push_back(state.score());

    auto has_room = [&](int i) { return static_cast<int>(state.selected()[i].size()) < width; };
    auto try_agent = [&](int i) -> detail::LocalChoice {
        if (!has_room(i)) return {};
        auto choice = best_local_tree(state, i, options.mode, options.search.node_limit);
        if (!choice.found || !(choice.gain > state.score() + kImprovementTolerance)) return {};
        return choice;
    };

    if (options.order == AgentOrder::RoundRobin) {
        int idle = 0;
        for (int i = 0; idle < n; i = (i + 1) % n) {
            auto choice = try_agent(i);
            if (!choice.found) {
                ++idle;
                continue;
            }
            state.add(i, choice.candidate);
            result.score_history.push_back(state.score());
            idle = 0;
        }
    } else {
        while (true) {
            int best_agent = -1;
            detail::LocalChoice best;
            for (int i = 0; i < n; ++i) {
                auto choice = try_agent(i);
                if (choice.found && (best_agent < 0 || choice.gain > best.gain)) {
                    best = choice;
                    best_agent = i;
                }
            }
            if (best_agent < 0) break;
            state.add(best_agent, best.candidate);
            result.score_history.push_back(state.score());
        }
    }
    result.sets = state.selected();
    result.normalized_score = state.normalized_score();
    return result;
}

} // namespace decpomdp
