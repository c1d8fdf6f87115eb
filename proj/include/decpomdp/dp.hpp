#pragma once

#include "decpomdp/bnb.hpp"
#include "decpomdp/error.hpp"
#include "decpomdp/lp.hpp"
#include "decpomdp/stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace decpomdp {

/// Per-agent candidate sets of the stage under construction.
using CandidateSets = std::vector<std::vector<Candidate>>;

inline constexpr double kDominanceTolerance = 1e-6;

/// Q̄_i = A_i x (Q_i^{t+1})^{Omega_i} for every agent, in lexicographic order.
inline CandidateSets exhaustive_backup(const StageBackup& backup, std::size_t limit = 10'000'000) {
    CandidateSets out;
    for (int i = 0; i < backup.num_agents(); ++i) out.push_back(backup.all_candidates(i, limit));
    return out;
}

namespace detail {

/// Alpha-vectors of every joint tuple of the product of candidate sets.
class ProductAlphas {
public:
    ProductAlphas(const StageBackup& backup, const CandidateSets& sets, std::size_t limit)
        : ns_(backup.model().num_states()) {
        std::vector<int> sizes;
        for (const auto& s : sets) sizes.push_back(static_cast<int>(s.size()));
        double count = ns_;
        for (int s : sizes) count *= s;
        if (count > static_cast<double>(limit))
            throw CapacityExceeded("dominance pruning would store " + std::to_string(count) + " values");
        radix_ = MixedRadix(sizes);
        values_.resize(static_cast<std::size_t>(radix_.size()) * ns_);
        JointCandidate q(sets.size());
        for (int t = 0; t < radix_.size(); ++t) {
            for (std::size_t i = 0; i < sets.size(); ++i) q[i] = sets[i][radix_.component(t, static_cast<int>(i))];
            const AlphaVector a = backup.alpha(q);
            std::copy(a.begin(), a.end(), values_.begin() + static_cast<std::ptrdiff_t>(t) * ns_);
        }
    }

    const MixedRadix& radix() const { return radix_; }
    double value(int tuple, int s) const { return values_[static_cast<std::size_t>(tuple) * ns_ + s]; }

private:
    int ns_;
    MixedRadix radix_;
    std::vector<double> values_;
};

/// Co-player tuples of agent i over the alive members of the other sets,
/// as flat tuples with agent i's component set to 0.
inline std::vector<int> coplayer_tuples(const MixedRadix& radix, const std::vector<std::vector<int>>& alive, int agent) {
    std::vector<int> out{0};
    for (int j = 0; j < radix.digits(); ++j) {
        if (j == agent) continue;
        std::vector<int> next;
        for (int base : out)
            for (int k : alive[j]) next.push_back(base + k * radix.stride(j));
        out = std::move(next);
    }
    return out;
}

// A corner where `own` beats every alternative by more than the tolerance
// certifies a positive margin without solving the LP.
inline bool has_witness(const std::vector<double>& own, const std::vector<std::vector<double>>& alternatives) {
    for (std::size_t k = 0; k < own.size(); ++k) {
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& alt : alternatives) gap = std::min(gap, own[k] - alt[k]);
        if (gap > kDominanceTolerance) return true;
    }
    return false;
}

// An alternative at least as good everywhere forces a non-positive margin.
inline bool pointwise_dominated(const std::vector<double>& own, const std::vector<std::vector<double>>& alternatives) {
    for (const auto& alt : alternatives) {
        bool all = true;
        for (std::size_t k = 0; k < own.size() && all; ++k) all = alt[k] >= own[k];
        if (all) return true;
    }
    return false;
}

} // namespace detail

/**
 * Largest epsilon such that some distribution over (state, co-player tuple)
 * makes `own` better than every alternative by epsilon, floored at 0. `own`
 * and every alternative are value rows of equal length.
 */
inline double dominance_margin(const std::vector<double>& own, const std::vector<std::vector<double>>& alternatives) {
    if (alternatives.empty()) return std::numeric_limits<double>::infinity();
    const int nx = static_cast<int>(own.size());
    // Work on differences scaled to unit magnitude; the margin is scaled back.
    double scale = 0.0;
    for (const auto& alt : alternatives)
        for (int k = 0; k < nx; ++k) scale = std::max(scale, std::abs(own[k] - alt[k]));
    if (scale == 0.0) return 0.0;
    const int rows = static_cast<int>(alternatives.size()) + 1;
    // variables: x_0..x_{nx-1}, eps
    SimplexLp lp(nx + 1, rows);
    lp.set_objective(nx, 1.0);
    for (int j = 0; j + 1 < rows; ++j) {
        lp.set_coefficient(j, nx, 1.0);
        for (int k = 0; k < nx; ++k) lp.set_coefficient(j, k, -(own[k] - alternatives[j][k]) / scale);
        lp.set_rhs(j, 0.0);
    }
    for (int k = 0; k < nx; ++k) lp.set_coefficient(rows - 1, k, 1.0);
    lp.set_rhs(rows - 1, 1.0);
    return lp.solve() * scale;
}

/**
 * Iterated elimination of weakly dominated local trees. Within an agent,
 * trees are tested from the last to the first so that of two identical trees
 * the earlier one survives. Passes over all agents repeat until nothing is
 * removed. A set is never emptied.
 */
inline CandidateSets exact_prune(const StageBackup& backup, const CandidateSets& candidates,
                                 std::size_t limit = 50'000'000) {
    const int n = backup.num_agents();
    const int ns = backup.model().num_states();
    detail::ProductAlphas alphas(backup, candidates, limit);
    const MixedRadix& radix = alphas.radix();
    std::vector<std::vector<int>> alive(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < static_cast<int>(candidates[i].size()); ++k) alive[i].push_back(k);

    auto row = [&](int agent, int k, const std::vector<int>& co) {
        std::vector<double> r;
        r.reserve(co.size() * ns);
        for (int base : co) {
            const int t = base + k * radix.stride(agent);
            for (int s = 0; s < ns; ++s) r.push_back(alphas.value(t, s));
        }
        return r;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            const auto co = detail::coplayer_tuples(radix, alive, i);
            for (int pos = static_cast<int>(alive[i].size()) - 1; pos >= 0 && alive[i].size() > 1; --pos) {
                const int k = alive[i][pos];
                const auto own = row(i, k, co);
                std::vector<std::vector<double>> others;
                for (int k2 : alive[i])
                    if (k2 != k) others.push_back(row(i, k2, co));
                if (!detail::has_witness(own, others) &&
                    (detail::pointwise_dominated(own, others) ||
                     dominance_margin(own, others) <= kDominanceTolerance)) {
                    alive[i].erase(alive[i].begin() + pos);
                    changed = true;
                }
            }
        }
    }
    CandidateSets out(n);
    for (int i = 0; i < n; ++i)
        for (int k : alive[i]) out[i].push_back(candidates[i][k]);
    return out;
}

/**
 * MBDP selection: for each point in order, the best joint tree over the
 * product of the remaining candidates is chosen and its local trees move from
 * the candidates to the result. Stops early once a candidate set runs empty.
 *
 * Small products are enumerated with ties going to the lexicographically
 * smallest position tuple. Larger ones are searched by branch and bound, which
 * requires `candidates` to be the full exhaustive backup.
 */
inline CandidateSets mbdp_prune(const StageBackup& backup, const CandidateSets& candidates,
                                const std::vector<Belief>& points, const SearchOptions& options = {},
                                double enumeration_limit = 1e6) {
    const int n = backup.num_agents();
    CandidateSets remaining = candidates;
    CandidateSets out(n);
    std::vector<std::set<Candidate>> removed(n);
    for (const auto& b : points) {
        if (std::any_of(remaining.begin(), remaining.end(), [](const auto& s) { return s.empty(); })) break;
        const PointTable table = backup.project(b);
        double product = 1.0;
        for (const auto& s : remaining) product *= static_cast<double>(s.size());
        JointCandidate best(n);
        if (product <= enumeration_limit) {
            std::vector<int> sizes;
            for (const auto& s : remaining) sizes.push_back(static_cast<int>(s.size()));
            MixedRadix radix(sizes);
            JointCandidate q(n);
            double best_value = -std::numeric_limits<double>::infinity();
            for (int t = 0; t < radix.size(); ++t) {
                for (int i = 0; i < n; ++i) q[i] = remaining[i][radix.component(t, i)];
                const double v = backup.joint_value(table, q);
                if (v > best_value) {
                    best_value = v;
                    best = q;
                }
            }
        } else {
            SearchFilter filter{nullptr, &removed};
            best = best_joint(backup, table, filter, options).best;
        }
        for (int i = 0; i < n; ++i) {
            auto it = std::find(remaining[i].begin(), remaining[i].end(), best[i]);
            if (it != remaining[i].end()) remaining[i].erase(it);
            removed[i].insert(best[i]);
            out[i].push_back(best[i]);
        }
    }
    return out;
}

} // namespace decpomdp
