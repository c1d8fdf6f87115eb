#include "decpomdp/bench.hpp"
#include "decpomdp/experiment.hpp"
#include "decpomdp/model_io.hpp"
#include "decpomdp/planner.hpp"
#include "decpomdp/policy.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace decpomdp;

constexpr int kExitUsage = 2;
constexpr int kExitModel = 3;
constexpr int kExitResource = 4;

struct ProblemOptions {
    std::string problem = "dec-tiger";
    std::vector<std::string> params;
    int horizon = 0;
};

struct PlannerOptions {
    std::string algorithm = "psmbdp";
    int width = 3;
    int samples = 100;
    std::uint64_t seed = 0;
    std::string heuristic;
    std::string heuristic_space;
    int prior_batch = 4;
    std::uint64_t node_limit = 100'000'000;
    std::string agent_order = "round-robin";
};

struct OutputOptions {
    std::string format = "table";
    std::string out;
};

void add_problem_flags(CLI::App* app, ProblemOptions& p) {
    app->add_option("--problem", p.problem, "dec-tiger, firefighting, firefighting-modified, box-pushing or file:<path>")
        ->capture_default_str();
    app->add_option("--problem-param", p.params, "Generator parameter key=value (repeatable)");
    app->add_option("--horizon", p.horizon, "Planning horizon (0: the problem's default)")->check(CLI::NonNegativeNumber);
}

void add_planner_flags(CLI::App* app, PlannerOptions& o) {
    app->add_option("--algorithm", o.algorithm, "exact, mbdp, pbip-dfs, pbip-befs, psmbdp or psmbdp-befs")
        ->capture_default_str();
    app->add_option("--width", o.width, "Maximum trees per agent and stage (W)")->capture_default_str();
    app->add_option("--samples", o.samples, "Sampled points per stage for psmbdp (N)")->capture_default_str();
    app->add_option("--seed", o.seed, "Base random seed")->capture_default_str();
    app->add_option("--heuristic", o.heuristic, "Heuristic mix, e.g. mdp=0.5,random=0.5 (default)");
    app->add_option("--heuristic-space", o.heuristic_space,
                    "belief or state-prior (default: belief for psmbdp, state-prior otherwise)");
    app->add_option("--prior-batch", o.prior_batch, "Trajectories per state-prior point")->capture_default_str();
    app->add_option("--node-limit", o.node_limit, "Branch-and-bound node limit")->capture_default_str();
    app->add_option("--agent-order", o.agent_order, "round-robin or greedy-best")->capture_default_str();
}

void add_output_flags(CLI::App* app, OutputOptions& o) {
    app->add_option("--output", o.format, "csv, json or table")
        ->check(CLI::IsMember({"csv", "json", "table"}))
        ->capture_default_str();
    app->add_option("--out", o.out, "Write the result to this file instead of standard output");
}

DecPomdp load_problem(const ProblemOptions& p) {
    BenchmarkSpec spec{p.problem, {}};
    for (const auto& kv : p.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--problem-param", "expected key=value, got '" + kv + "'");
        spec.parameters[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return build_benchmark(spec);
}

int horizon_of(const DecPomdp& model, const ProblemOptions& p) {
    return p.horizon > 0 ? p.horizon : model.default_horizon();
}

PlannerConfig make_config(const DecPomdp& model, const ProblemOptions& p, const PlannerOptions& o) {
    PlannerConfig c;
    try {
        c.algorithm = parse_algorithm(o.algorithm);
    } catch (const SemanticError& e) {
        throw CLI::ValidationError("--algorithm", e.what());
    }
    c.width = o.width;
    c.samples = o.samples;
    c.horizon = horizon_of(model, p);
    c.seed = o.seed;
    if (!o.heuristic.empty()) c.heuristics = parse_heuristics(o.heuristic, model, c.horizon);
    if (o.heuristic_space == "belief") c.space = HeuristicSpace::Belief;
    else if (o.heuristic_space == "state-prior") c.space = HeuristicSpace::StatePrior;
    else if (!o.heuristic_space.empty())
        throw CLI::ValidationError("--heuristic-space", "expected belief or state-prior");
    c.prior_batch = o.prior_batch;
    c.node_limit = o.node_limit;
    if (o.agent_order == "round-robin") c.agent_order = AgentOrder::RoundRobin;
    else if (o.agent_order == "greedy-best") c.agent_order = AgentOrder::GreedyBest;
    else throw CLI::ValidationError("--agent-order", "expected round-robin or greedy-best");
    return c;
}

void write_output(const OutputOptions& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write " + o.out);
    f << text;
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon Dec-POMDP planners: exact DP, MBDP, PBIP and PSMBDP"};
    app.require_subcommand(1);

    ProblemOptions problem;
    PlannerOptions planner;
    OutputOptions output;

    auto* solve = app.add_subcommand("solve", "Plan once and print the joint policy");
    add_problem_flags(solve, problem);
    add_planner_flags(solve, planner);
    solve->add_option("--out", output.out, "Write the policy to this file");

    int runs = 1;
    auto* experiment = app.add_subcommand("experiment", "Seeded repeated runs with AEV, sigma and time");
    add_problem_flags(experiment, problem);
    add_planner_flags(experiment, planner);
    add_output_flags(experiment, output);
    experiment->add_option("--runs", runs, "Number of runs (R)")->check(CLI::PositiveNumber)->capture_default_str();

    std::string policy_path;
    int episodes = 100'000;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Exact value and Monte-Carlo estimate of a policy file");
    add_problem_flags(evaluate_cmd, problem);
    evaluate_cmd->add_option("--policy", policy_path, "Policy file")->required();
    evaluate_cmd->add_option("--episodes", episodes, "Rollout episodes")->check(CLI::PositiveNumber)->capture_default_str();
    evaluate_cmd->add_option("--seed", planner.seed, "Rollout seed")->capture_default_str();

    auto* bound = app.add_subcommand("mdp-bound", "Value of the underlying MDP at b0");
    add_problem_flags(bound, problem);

    auto* validate = app.add_subcommand("validate", "Parse and validate a model, optionally writing it back");
    add_problem_flags(validate, problem);
    validate->add_option("--out", output.out, "Write the normalized model to this file");

    auto* list = app.add_subcommand("list-benchmarks", "List the built-in benchmarks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (list->parsed()) {
            for (const auto& b : list_benchmarks()) {
                std::cout << b.name << "  " << b.description;
                for (const auto& [k, v] : b.defaults) std::cout << "  " << k << "=" << v;
                std::cout << '\n';
            }
            return 0;
        }
        const DecPomdp model = load_problem(problem);
        if (validate->parsed()) {
            std::cerr << "valid: " << model.num_agents() << " agents, " << model.num_states() << " states, "
                      << model.num_joint_actions() << " joint actions, " << model.num_joint_observations()
                      << " joint observations\n";
            if (!output.out.empty()) write_output(output, serialize_model(model));
            return 0;
        }
        if (bound->parsed()) {
            const int h = horizon_of(model, problem);
            std::printf("%.6f\n", mdp_bound(model, h));
            return 0;
        }
        if (evaluate_cmd->parsed()) {
            const PolicyEvaluation e = evaluate_policy(model, read_file(policy_path), episodes, planner.seed);
            std::printf("exact %.6f\nsimulated %.6f\nstandard_error %.6f\n", e.exact, e.simulated, e.standard_error);
            if (e.warning)
                std::cerr << "warning: exact and simulated values differ by more than 4 standard errors\n";
            return 0;
        }
        const PlannerConfig config = make_config(model, problem, planner);
        if (solve->parsed()) {
            const PlanResult r = plan(model, config, [](const StageStats& s) {
                std::cerr << "stage " << s.stage << " sizes " << join(s.set_sizes) << " elapsed "
                          << s.elapsed_s << "s\n";
            });
            std::cerr << "value " << r.value << '\n';
            write_output(output, serialize_policy(model, *r.pool, r.policy));
            return 0;
        }
        if (experiment->parsed()) {
            const ExperimentResult r =
                run_experiment(model, config, runs, config.seed, [&](int k, double v, double t) {
                    std::cerr << "run " << k + 1 << "/" << runs << " value " << v << " time " << t << "s\n";
                });
            write_output(output, emit_results({r}, parse_output_format(output.format)));
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CapacityExceeded& e) {
        std::cerr << "resource limit: " << e.what() << '\n';
        return kExitResource;
    } catch (const NodeLimitExceeded& e) {
        std::cerr << "resource limit: " << e.what() << '\n';
        return kExitResource;
    } catch (const std::bad_alloc&) {
        std::cerr << "resource limit: out of memory\n";
        return kExitResource;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitModel;
    }
    return 0;
}
