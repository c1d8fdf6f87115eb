#pragma once

#include "decpomdp/error.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/data/box_pushing_model.hpp"
#include "decpomdp/model_io.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <vector>

namespace decpomdp {

struct BenchmarkSpec {
    std::string name;
    std::map<std::string, std::string> parameters;
};

struct BenchmarkInfo {
    std::string name;
    std::string description;
    std::map<std::string, std::string> defaults;
};

/**
 * Dec-Tiger (Nair et al. 2003). Two doors, a tiger behind one. Listening
 * leaves the state alone and each agent hears the tiger's side correctly with
 * probability 0.85, independently. Any door opening resets the tiger
 * uniformly and yields uninformative observations.
 */
inline DecPomdp dec_tiger() {
    const std::vector<std::string> actions{"open-left", "open-right", "listen"};
    const std::vector<std::string> observations{"hear-left", "hear-right"};
    ModelBuilder b({"agent1", "agent2"}, {"tiger-left", "tiger-right"}, {actions, actions},
                   {observations, observations});
    constexpr int kOpenLeft = 0, kOpenRight = 1, kListen = 2;
    constexpr double kHearCorrect = 0.85;
    const auto& ja = b.joint_actions();
    for (int a1 = 0; a1 < 3; ++a1)
        for (int a2 = 0; a2 < 3; ++a2) {
            const int a = ja.encode(std::vector<int>{a1, a2});
            const bool listen = a1 == kListen && a2 == kListen;
            for (int s = 0; s < 2; ++s) {
                for (int s2 = 0; s2 < 2; ++s2) b.set_transition(a, s, s2, listen ? (s == s2 ? 1.0 : 0.0) : 0.5);
                for (int s2 = 0; s2 < 2; ++s2)
                    for (int o1 = 0; o1 < 2; ++o1)
                        for (int o2 = 0; o2 < 2; ++o2) {
                            const int o = b.joint_observations().encode(std::vector<int>{o1, o2});
                            double p = 0.25;
                            if (listen)
                                p = (o1 == s2 ? kHearCorrect : 1 - kHearCorrect) * (o2 == s2 ? kHearCorrect : 1 - kHearCorrect);
                            b.set_observation(a, s, s2, o, p);
                        }
                // Door d is the tiger door when d == s (0: left, 1: right).
                auto tiger = [&](int act) { return act == s; };
                auto opens = [&](int act) { return act == kOpenLeft || act == kOpenRight; };
                double r = 0.0;
                if (listen) r = -2;
                else if (opens(a1) && opens(a2)) {
                    if (a1 != a2) r = -100;
                    else r = tiger(a1) ? -50 : 20;
                } else {
                    const int act = opens(a1) ? a1 : a2;
                    r = tiger(act) ? -101 : 9;
                }
                b.set_reward(s, a, r);
            }
        }
    b.set_initial_belief({0.5, 0.5});
    b.set_default_horizon(100);
    return b.build();
}

struct FirefightingParams {
    int houses = 4;
    int fire_levels = 3;
    /// Observation of the fire level of the visited house after the
    /// transition instead of the noisy flames signal.
    bool observe_level = false;
};

/**
 * Firefighting (Oliehoek et al. 2008). Houses on a line, each with a fire
 * level in [0, fire_levels). Each agent picks a house to fight at.
 *   no agent:  +1 level w.p. 0.8 if a neighbour burns, else w.p. 0.4 if the
 *              house itself burns (an unburnt house never ignites alone)
 *   one agent: -1 level w.p. 1 if no neighbour burns, else w.p. 0.6
 *   two agents: extinguished
 * An agent sees flames at its house w.p. 0.2 / 0.5 / 0.8 for level
 * 0 / 1 / >= 2 after the transition. The reward is minus the sum of the fire
 * levels after the transition, in expectation. The initial fire levels are
 * uniform over all states.
 */
inline DecPomdp firefighting(const FirefightingParams& p = {}) {
    if (p.houses < 2) throw SemanticError("firefighting needs at least 2 houses");
    if (p.fire_levels < 2) throw SemanticError("firefighting needs at least 2 fire levels");
    const int nh = p.houses, nf = p.fire_levels;
    std::vector<int> radix(nh, nf);
    MixedRadix states(radix);
    std::vector<std::string> state_names;
    for (int s = 0; s < states.size(); ++s) {
        std::string name = "f";
        for (int h = 0; h < nh; ++h) name += std::to_string(states.component(s, h));
        state_names.push_back(name);
    }
    std::vector<std::string> actions;
    for (int h = 0; h < nh; ++h) actions.push_back("house" + std::to_string(h + 1));
    std::vector<std::string> observations;
    if (p.observe_level)
        for (int f = 0; f < nf; ++f) observations.push_back("level" + std::to_string(f));
    else
        observations = {"no-flames", "flames"};
    ModelBuilder b({"agent1", "agent2"}, state_names, {actions, actions}, {observations, observations});
    const int ns = states.size();
    const int no_i = static_cast<int>(observations.size());

    auto flames = [&](int level) { return level == 0 ? 0.2 : level == 1 ? 0.5 : 0.8; };
    for (int a1 = 0; a1 < nh; ++a1)
        for (int a2 = 0; a2 < nh; ++a2) {
            const int a = b.joint_actions().encode(std::vector<int>{a1, a2});
            for (int s = 0; s < ns; ++s) {
                // per-house distributions over the next level
                std::vector<std::vector<double>> dist(nh, std::vector<double>(nf, 0.0));
                for (int h = 0; h < nh; ++h) {
                    const int f = states.component(s, h);
                    const bool neighbour = (h > 0 && states.component(s, h - 1) > 0) ||
                                           (h + 1 < nh && states.component(s, h + 1) > 0);
                    const int agents = (a1 == h) + (a2 == h);
                    const int up = std::min(f + 1, nf - 1), down = std::max(f - 1, 0);
                    if (agents == 0) {
                        const double pu = neighbour ? 0.8 : (f > 0 ? 0.4 : 0.0);
                        dist[h][up] += pu;
                        dist[h][f] += 1 - pu;
                    } else if (agents == 1) {
                        const double pd = neighbour ? 0.6 : 1.0;
                        dist[h][down] += pd;
                        dist[h][f] += 1 - pd;
                    } else {
                        dist[h][0] = 1.0;
                    }
                }
                double expected_cost = 0.0;
                for (int s2 = 0; s2 < ns; ++s2) {
                    double t = 1.0;
                    int burn = 0;
                    for (int h = 0; h < nh && t > 0.0; ++h) {
                        t *= dist[h][states.component(s2, h)];
                        burn += states.component(s2, h);
                    }
                    b.set_transition(a, s, s2, t);
                    expected_cost += t * burn;
                    for (int o1 = 0; o1 < no_i; ++o1)
                        for (int o2 = 0; o2 < no_i; ++o2) {
                            const int o = b.joint_observations().encode(std::vector<int>{o1, o2});
                            auto sense = [&](int house, int obs) {
                                const int level = states.component(s2, house);
                                if (p.observe_level) return obs == level ? 1.0 : 0.0;
                                return obs == 1 ? flames(level) : 1 - flames(level);
                            };
                            b.set_observation(a, s, s2, o, sense(a1, o1) * sense(a2, o2));
                        }
                }
                b.set_reward(s, a, -expected_cost);
            }
        }
    b.set_initial_belief(Belief(ns, 1.0 / ns));
    b.set_default_horizon(p.observe_level ? 100 : 50);
    return b.build();
}

/// Cooperative Box Pushing (Seuken and Zilberstein 2007), bundled as a model file.
inline DecPomdp box_pushing() {
    DecPomdp m = parse_model(data::kBoxPushingModel);
    return m;
}

namespace detail {

inline int int_parameter(const BenchmarkSpec& spec, const std::string& key, int fallback) {
    auto it = spec.parameters.find(key);
    if (it == spec.parameters.end()) return fallback;
    try {
        std::size_t used = 0;
        const int v = std::stoi(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::logic_error&) {
        throw SemanticError("parameter " + key + " expects an integer, got '" + it->second + "'");
    }
}

inline void check_parameters(const BenchmarkSpec& spec, const std::vector<std::string>& allowed) {
    for (const auto& [key, value] : spec.parameters)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SemanticError("benchmark " + spec.name + " has no parameter '" + key + "'");
}

} // namespace detail

/// Stable, alphabetically ordered list of built-in benchmarks.
inline std::vector<BenchmarkInfo> list_benchmarks() {
    return {
        {"box-pushing", "Cooperative Box Pushing: 2 agents, 96 states, 4 actions and 5 observations per agent", {}},
        {"dec-tiger", "Dec-Tiger: 2 agents, 2 states, 3 actions and 2 observations per agent", {}},
        {"firefighting", "Firefighting: houses on a line, agents observe flames at the house they visit",
         {{"agents", "2"}, {"fire_levels", "3"}, {"houses", "4"}}},
        {"firefighting-modified",
         "Firefighting where each agent observes the resulting fire level of the house it visits",
         {{"agents", "2"}, {"fire_levels", "4"}, {"houses", "4"}}},
    };
}

/// Build a named benchmark; "file:<path>" loads a model file.
inline DecPomdp build_benchmark(const BenchmarkSpec& spec) {
    if (spec.name.rfind("file:", 0) == 0) return load_model(spec.name.substr(5));
    if (spec.name == "dec-tiger") {
        detail::check_parameters(spec, {});
        return dec_tiger();
    }
    if (spec.name == "box-pushing") {
        detail::check_parameters(spec, {});
        return box_pushing();
    }
    if (spec.name == "firefighting" || spec.name == "firefighting-modified") {
        detail::check_parameters(spec, {"houses", "fire_levels", "agents"});
        const bool modified = spec.name == "firefighting-modified";
        if (detail::int_parameter(spec, "agents", 2) != 2)
            throw SemanticError("firefighting supports exactly 2 agents");
        FirefightingParams p;
        p.houses = detail::int_parameter(spec, "houses", 4);
        p.fire_levels = detail::int_parameter(spec, "fire_levels", modified ? 4 : 3);
        p.observe_level = modified;
        return firefighting(p);
    }
    throw UnknownBenchmark("unknown benchmark '" + spec.name + "'");
}

} // namespace decpomdp
