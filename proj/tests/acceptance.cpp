// Acceptance suite: one PASS/FAIL line per criterion on standard output,
// details on standard error. The exit status reflects only whether the suite
// ran to completion, so a criterion that cannot be met is reported, not hidden.

#include "decpomdp/bench.hpp"
#include "decpomdp/dp.hpp"
#include "decpomdp/experiment.hpp"
#include "decpomdp/planner.hpp"
#include "decpomdp/psmbdp.hpp"
#include "support.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace decpomdp;
using namespace testing_support;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail += (detail.empty() ? "" : "; ") + std::string(ok ? "" : "FAILED ") + what;
    }
};

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void log(const std::string& s) { std::cerr << s << std::endl; }

double tolerance(double v) { return 1e-9 * (1 + std::abs(v)); }

/// Every value ever reported by a planner, with the bound it must respect.
struct BoundLedger {
    struct Entry {
        std::string label;
        double value;
        double bound;
    };
    std::vector<Entry> entries;
    std::set<std::string> problems;

    void add(const std::string& problem, const std::string& label, const std::vector<double>& values, double bound) {
        problems.insert(problem);
        for (double v : values) entries.push_back({problem + " " + label, v, bound});
    }
};

ExperimentResult experiment(const DecPomdp& m, Algorithm alg, int width, int samples, int horizon, int runs,
                            std::optional<HeuristicSpace> space, std::uint64_t seed) {
    PlannerConfig c;
    c.algorithm = alg;
    c.width = width;
    c.samples = samples;
    c.horizon = horizon;
    c.space = space;
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult r = run_experiment(m, c, runs, seed);
    log("  " + algorithm_name(alg) + " W=" + std::to_string(width) + " H=" + std::to_string(r.horizon) +
        " R=" + std::to_string(runs) + ": AEV " + fmt(r.aev) + " sigma " + fmt(r.sigma) + " T/run " +
        fmt(r.mean_time, 3) + "s (" +
        fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1) + "s)");
    return r;
}

// 1. Oracle equivalence on Dec-Tiger, H in {1, 2}.
Outcome criterion1() {
    Outcome out;
    const DecPomdp m = dec_tiger();
    for (int h : {1, 2}) {
        const double optimum = brute_force_optimum(m, h, m.initial_belief());
        for (auto alg : {Algorithm::Exact, Algorithm::Mbdp, Algorithm::PbipDfs, Algorithm::PbipBefs, Algorithm::Psmbdp}) {
            PlannerConfig c;
            c.algorithm = alg;
            c.horizon = h;
            c.width = 27;
            c.samples = 50;
            const double v = plan(m, c).value;
            out.check(std::abs(v - optimum) <= 1e-9,
                      algorithm_name(alg) + " H=" + std::to_string(h) + " " + fmt(v, 6) + " vs " + fmt(optimum, 6));
        }
    }
    return out;
}

// 2. best_joint optimality and admissibility on 500 random models.
Outcome criterion2() {
    Outcome out;
    std::mt19937_64 rng(2024);
    int optimal = 0, nodes = 0, admissible_violations = 0;
    const int models = 500;
    for (int k = 0; k < models; ++k) {
        auto inst = random_stage(rng, 4, 3, 2, 3);
        StageBackup backup(inst->model, inst->pool, inst->prev_depth, inst->sets);
        const auto b = random_distribution(rng, inst->model.num_states(), 0.2);
        const JointTable jt = joint_table(*inst, b);
        const double brute = *std::max_element(jt.value.begin(), jt.value.end());
        bool ok = true;
        for (auto strategy : {SearchStrategy::DepthFirst, SearchStrategy::BestFirst}) {
            SearchOptions options;
            options.strategy = strategy;
            options.observer = [&](const SearchNode& node) {
                ++nodes;
                const double best = best_completion(node, *inst, jt);
                if (node.bound < best - tolerance(best)) ++admissible_violations;
            };
            const SearchResult r = best_joint(backup, b, {}, options);
            ok = ok && std::abs(r.value - brute) <= tolerance(brute);
        }
        optimal += ok;
    }
    out.check(optimal == models, std::to_string(optimal) + "/" + std::to_string(models) + " optimal (DFS and BeFS)");
    out.check(admissible_violations == 0, std::to_string(nodes) + " nodes checked, " +
                                              std::to_string(admissible_violations) + " bound violations");
    return out;
}

/// Random joint policy of the given depth with a few shared subtrees per level.
JointPolicy random_policy(const DecPomdp& m, TreePool& pool, int depth, std::mt19937_64& rng) {
    JointPolicy q{depth, std::vector<int>(m.num_agents())};
    for (int i = 0; i < m.num_agents(); ++i) {
        std::vector<int> level{0};
        for (int d = 1; d <= depth; ++d) {
            std::vector<int> next;
            for (int k = 0; k < 3; ++k) {
                std::vector<int> children;
                for (int o = 0; o < m.num_observations(i); ++o)
                    children.push_back(level[std::uniform_int_distribution<std::size_t>(0, level.size() - 1)(rng)]);
                next.push_back(pool.add(i, d, std::uniform_int_distribution<int>(0, m.num_actions(i) - 1)(rng), children));
            }
            level = std::move(next);
        }
        q.roots[i] = level[0];
    }
    return q;
}

// 3. Exact value against 10^5-episode rollouts.
Outcome criterion3() {
    Outcome out;
    const std::vector<std::pair<std::string, int>> problems{
        {"dec-tiger", 100}, {"firefighting", 50}, {"firefighting-modified", 100}, {"box-pushing", 20}};
    for (const auto& [name, horizon] : problems) {
        const DecPomdp m = build_benchmark({name, {}});
        std::mt19937_64 rng(300);
        int within = 0;
        double worst = 0.0;
        std::string recheck;
        for (int k = 0; k < 20; ++k) {
            TreePool pool(m.num_agents());
            const JointPolicy q = random_policy(m, pool, horizon, rng);
            const double exact = value_at(evaluate(m, pool, q), m.initial_belief());
            std::mt19937_64 sim(1000 + k);
            const RolloutResult r = rollout(m, pool, q, m.initial_belief(), 100000, sim);
            const double z = r.standard_error > 0 ? std::abs(r.mean - exact) / r.standard_error
                                                  : (std::abs(r.mean - exact) <= tolerance(exact) ? 0.0 : 1e9);
            worst = std::max(worst, z);
            within += z <= 3.0;
            if (z > 3.0) {
                // Not gating: a 40x longer rollout tells a biased estimator from a tail draw.
                std::mt19937_64 big(777 + k);
                const RolloutResult r2 = rollout(m, pool, q, m.initial_belief(), 4000000, big);
                recheck += " policy " + std::to_string(k) + " at 4e6 episodes: " +
                           fmt(std::abs(r2.mean - exact) / r2.standard_error) + " SE";
            }
        }
        out.check(within == 20, name + " " + std::to_string(within) + "/20 within 3 SE (max " + fmt(worst) + " SE)" +
                                    (recheck.empty() ? "" : " [recheck:" + recheck + "]"));
    }
    return out;
}

// 4. exact_prune never lowers the grid optimum.
Outcome criterion4() {
    Outcome out;
    std::mt19937_64 rng(404);
    int instances = 0, points = 0, violations = 0;
    auto grid = [](int ns) {
        std::vector<Belief> g;
        std::vector<int> c(ns, 0);
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == ns - 1) {
                c[i] = left;
                Belief b(ns);
                for (int k = 0; k < ns; ++k) b[k] = c[k] / 10.0;
                g.push_back(b);
                return;
            }
            for (int v = 0; v <= left; ++v) {
                c[i] = v;
                rec(i + 1, left - v);
            }
        };
        rec(0, 10);
        return g;
    };
    auto check = [&](const StageBackup& backup) {
        const CandidateSets full = exhaustive_backup(backup);
        const CandidateSets pruned = exact_prune(backup, full);
        ++instances;
        for (const auto& b : grid(backup.model().num_states())) {
            const PointTable t = backup.project(b);
            double before = -1e300, after = -1e300;
            for (const auto& x : full[0])
                for (const auto& y : full[1]) before = std::max(before, backup.joint_value(t, {x, y}));
            for (const auto& x : pruned[0])
                for (const auto& y : pruned[1]) after = std::max(after, backup.joint_value(t, {x, y}));
            ++points;
            violations += after < before - 1e-6;
        }
    };
    for (int k = 0; k < 100; ++k) {
        auto inst = random_stage(rng, 4, 3, 2, 3);
        check(StageBackup(inst->model, inst->pool, inst->prev_depth, inst->sets));
    }
    // Dec-Tiger stages of the exact planner.
    const DecPomdp tiger = dec_tiger();
    TreePool pool(2);
    StageBackup first(tiger, pool, 0, {{0}, {0}});
    check(first);
    const auto sets = commit_stage(first, exact_prune(first, exhaustive_backup(first)));
    check(StageBackup(tiger, pool, 1, sets));
    out.check(violations == 0, std::to_string(instances) + " instances, " + std::to_string(points) + " grid points, " +
                                   std::to_string(violations) + " violations");
    return out;
}

// 6. PSMBDP greedy invariants, stage by stage on Dec-Tiger.
Outcome criterion6() {
    Outcome out;
    const DecPomdp m = dec_tiger();
    const int horizon = 10;
    int additions = 0, decreases = 0, oversize = 0, disagreements = 0, stages = 0;
    double worst_gap = 0.0;
    for (int width = 1; width <= 3; ++width)
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto points = sample_point_sets(m, default_heuristics(m, horizon), horizon, 20, seed);
            TreePool pool(2);
            std::vector<std::vector<int>> sets{{0}, {0}};
            for (int t = horizon - 1; t >= 0; --t) {
                StageBackup backup(m, pool, horizon - t - 1, sets);
                PsmbdpOptions ex, bf;
                bf.mode = SelectionMode::BestFirst;
                bf.search.strategy = SearchStrategy::BestFirst;
                const PsmbdpResult a = psmbdp_operator(backup, points.points_at[t], width, ex);
                const PsmbdpResult b = psmbdp_operator(backup, points.points_at[t], width, bf);
                for (std::size_t h = 1; h < a.score_history.size(); ++h) {
                    ++additions;
                    decreases += a.score_history[h] < a.score_history[h - 1];
                }
                for (const auto& s : a.sets) oversize += static_cast<int>(s.size()) > width;
                const double gap = std::abs(a.normalized_score - b.normalized_score);
                worst_gap = std::max(worst_gap, gap);
                disagreements += gap > 1e-9;
                ++stages;
                sets = commit_stage(backup, a.sets);
            }
        }
    out.check(decreases == 0, std::to_string(additions) + " additions, " + std::to_string(decreases) + " decreases");
    out.check(oversize == 0, std::to_string(stages) + " stages, " + std::to_string(oversize) + " sets above W");
    out.check(disagreements == 0, "exhaustive vs befs max score gap " + fmt(worst_gap, 12));
    return out;
}

// 7. Dec-Tiger, H = 100, W = 7, R = 25.
Outcome criterion7(BoundLedger& ledger) {
    Outcome out;
    const DecPomdp m = dec_tiger();
    const double bound = mdp_bound(m, 100);
    const auto ps = experiment(m, Algorithm::Psmbdp, 7, 100, 100, 25, HeuristicSpace::StatePrior, 0);
    const auto pb = experiment(m, Algorithm::PbipDfs, 7, 100, 100, 25, std::nullopt, 0);
    const auto mb = experiment(m, Algorithm::Mbdp, 7, 100, 100, 25, std::nullopt, 0);
    ledger.add("dec-tiger", "psmbdp", ps.values, bound);
    ledger.add("dec-tiger", "pbip", pb.values, bound);
    ledger.add("dec-tiger", "mbdp", mb.values, bound);
    out.check(ps.aev >= 140 && ps.aev <= 190, "PSMBDP " + fmt(ps.aev) + " in [140,190]");
    out.check(pb.aev >= 65 && pb.aev <= 110, "PBIP " + fmt(pb.aev) + " in [65,110]");
    out.check(mb.aev >= 65 && mb.aev <= 115, "MBDP " + fmt(mb.aev) + " in [65,115]");
    return out;
}

// 8. Firefighting, H = 50, W = 7.
Outcome criterion8(BoundLedger& ledger) {
    Outcome out;
    const DecPomdp m = build_benchmark({"firefighting", {}});
    const double bound = mdp_bound(m, 50);
    out.check(std::abs(bound - (-35.81)) <= 0.5, "MDP bound " + fmt(bound) + " vs -35.81 +- 0.5");
    const auto ps = experiment(m, Algorithm::PsmbdpBefs, 7, 100, 50, 25, std::nullopt, 0);
    const auto pb = experiment(m, Algorithm::PbipBefs, 7, 100, 50, 25, std::nullopt, 0);
    ledger.add("firefighting", "psmbdp-befs", ps.values, bound);
    ledger.add("firefighting", "pbip-befs", pb.values, bound);
    out.check(ps.aev >= -120, "PSMBDP/BeFS " + fmt(ps.aev) + " >= -120");
    out.check(ps.sigma <= 2, "sigma " + fmt(ps.sigma) + " <= 2");
    out.check(ps.aev > pb.aev, "PSMBDP/BeFS " + fmt(ps.aev) + " beats PBIP " + fmt(pb.aev));
    return out;
}

// 9. Modified Firefighting, H = 100, W = 3, N = 100.
Outcome criterion9(BoundLedger& ledger) {
    Outcome out;
    const DecPomdp m = build_benchmark({"firefighting-modified", {}});
    const double bound = mdp_bound(m, 100);
    const auto ps = experiment(m, Algorithm::PsmbdpBefs, 3, 100, 100, 25, std::nullopt, 0);
    const auto pb = experiment(m, Algorithm::PbipBefs, 3, 100, 100, 25, std::nullopt, 0);
    ledger.add("firefighting-modified", "psmbdp-befs", ps.values, bound);
    ledger.add("firefighting-modified", "pbip-befs", pb.values, bound);
    out.check(ps.aev >= -110, "PSMBDP/BeFS " + fmt(ps.aev) + " >= -110");
    out.check(ps.aev > pb.aev, "PSMBDP/BeFS " + fmt(ps.aev) + " beats PBIP " + fmt(pb.aev) + " on the same seeds");
    return out;
}

// 10. Box Pushing, H = 20, W = 9, R = 10.
Outcome criterion10(BoundLedger& ledger, bool with_h50) {
    Outcome out;
    const DecPomdp m = box_pushing();
    const double bound = mdp_bound(m, 20);
    const auto ps = experiment(m, Algorithm::PsmbdpBefs, 9, 100, 20, 10, std::nullopt, 0);
    const auto pb = experiment(m, Algorithm::PbipBefs, 9, 100, 20, 10, std::nullopt, 0);
    ledger.add("box-pushing", "psmbdp-befs H=20", ps.values, bound);
    ledger.add("box-pushing", "pbip-befs H=20", pb.values, bound);
    out.check(ps.aev >= 400 && ps.aev <= 480, "PSMBDP/BeFS " + fmt(ps.aev) + " in [400,480]");
    out.check(ps.aev >= pb.aev - 2 * ps.sigma,
              "PSMBDP/BeFS " + fmt(ps.aev) + " >= PBIP/BeFS " + fmt(pb.aev) + " - 2 sigma (" + fmt(ps.sigma) + ")");
    if (with_h50) {
        const auto slow = experiment(m, Algorithm::PsmbdpBefs, 9, 100, 50, 1, std::nullopt, 0);
        ledger.add("box-pushing", "psmbdp-befs H=50", slow.values, mdp_bound(m, 50));
        out.detail += "; H=50 (not gating) " + fmt(slow.aev);
    }
    return out;
}

// 5. Upper bound: every reported value stays below the MDP value.
Outcome criterion5(BoundLedger& ledger) {
    Outcome out;
    // Every algorithm once on every benchmark, next to the values of 7-10.
    const std::vector<std::pair<std::string, int>> problems{
        {"dec-tiger", 20}, {"firefighting", 50}, {"firefighting-modified", 100}, {"box-pushing", 20}};
    for (const auto& [name, horizon] : problems) {
        const DecPomdp m = build_benchmark({name, {}});
        const double bound = mdp_bound(m, horizon);
        for (auto alg : {Algorithm::Mbdp, Algorithm::PbipDfs, Algorithm::PbipBefs, Algorithm::Psmbdp,
                         Algorithm::PsmbdpBefs}) {
            const auto r = experiment(m, alg, 2, 30, horizon, 1, std::nullopt, 5);
            ledger.add(name, algorithm_name(alg), r.values, bound);
        }
    }
    {
        const DecPomdp m = dec_tiger();
        PlannerConfig c;
        c.algorithm = Algorithm::Exact;
        c.horizon = 2;
        ledger.add("dec-tiger", "exact", {plan(m, c).value}, mdp_bound(m, 2));
    }
    int violations = 0;
    double closest = -1e300;
    for (const auto& e : ledger.entries) {
        closest = std::max(closest, e.value - e.bound);
        if (e.value > e.bound + 1e-6) {
            ++violations;
            log("  bound violation: " + e.label + " " + fmt(e.value, 6) + " > " + fmt(e.bound, 6));
        }
    }
    out.check(ledger.problems.size() == 4, std::to_string(ledger.problems.size()) + " benchmarks covered");
    out.check(violations == 0, std::to_string(ledger.entries.size()) + " values, " + std::to_string(violations) +
                                   " above the bound (closest gap " + fmt(closest, 4) + ")");
    return out;
}

// 11. Kept set sizes on Dec-Tiger with W = 20.
Outcome criterion11() {
    Outcome out;
    const DecPomdp m = dec_tiger();
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PlannerConfig c;
        c.algorithm = Algorithm::Psmbdp;
        c.width = 20;
        c.samples = 100;
        c.horizon = 100;
        c.space = HeuristicSpace::StatePrior;
        c.seed = seed;
        const PlanResult r = plan(m, c);
        for (const auto& s : r.stages)
            for (int size : s.set_sizes) {
                total += size;
                ++count;
            }
    }
    const double mean = total / count;
    out.check(mean <= 7.0, "mean kept set size " + fmt(mean) + " <= 7 over 5 runs");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    bool with_h50 = false;
    app.add_option("--only", only, "Run only these criteria");
    app.add_flag("--with-h50", with_h50, "Also run the slow, non-gating Box Pushing H=50 check");
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
    const std::map<int, std::string> titles{
        {1, "oracle equivalence on Dec-Tiger H<=2"},
        {2, "PBIP search optimality and admissibility"},
        {3, "alpha-vector value vs rollout"},
        {4, "dominance pruning soundness"},
        {5, "MDP upper bound"},
        {6, "PSMBDP greedy invariants"},
        {7, "Dec-Tiger H=100 reproduction"},
        {8, "Firefighting H=50 reproduction"},
        {9, "Modified Firefighting H=100 reproduction"},
        {10, "Box Pushing H=20 reproduction"},
        {11, "Dec-Tiger W=20 kept set sizes"},
    };

    BoundLedger ledger;
    std::map<int, Outcome> results;
    // 5 reuses the values of 7-10, so it runs after them.
    const std::vector<std::pair<int, std::function<Outcome()>>> order{
        {1, criterion1},
        {2, criterion2},
        {3, criterion3},
        {4, criterion4},
        {6, criterion6},
        {7, [&] { return criterion7(ledger); }},
        {8, [&] { return criterion8(ledger); }},
        {9, [&] { return criterion9(ledger); }},
        {10, [&] { return criterion10(ledger, with_h50); }},
        {5, [&] { return criterion5(ledger); }},
        {11, criterion11},
    };
    int failures = 0;
    for (const auto& [k, run] : order) {
        if (!wanted(k)) continue;
        log("[" + std::to_string(k) + "] " + titles.at(k));
        const auto start = std::chrono::steady_clock::now();
        try {
            results[k] = run();
        } catch (const std::exception& e) {
            results[k] = Outcome{false, std::string("error: ") + e.what()};
        }
        log("    " + std::string(results[k].pass ? "pass" : "FAIL") + " in " +
            fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1) + "s: " +
            results[k].detail);
    }
    for (const auto& [k, r] : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << titles.at(k) << "): " << r.detail
                  << "\n";
        failures += !r.pass;
    }
    std::cout << results.size() - failures << "/" << results.size() << " criteria passed\n";
    return 0;
}
