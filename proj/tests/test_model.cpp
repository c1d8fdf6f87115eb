#include "decpomdp/bench.hpp"
#include "decpomdp/model.hpp"
#include "decpomdp/model_io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace decpomdp;

TEST(MixedRadix, EncodeDecodeRoundTrip) {
    MixedRadix r({3, 2, 4});
    EXPECT_EQ(r.size(), 24);
    for (int f = 0; f < r.size(); ++f) EXPECT_EQ(r.encode(r.decode(f)), f);
    // agent 0 is the most significant digit
    EXPECT_EQ(r.encode(std::vector<int>{1, 0, 0}), 8);
    EXPECT_EQ(r.encode(std::vector<int>{0, 0, 3}), 3);
    EXPECT_EQ(r.component(r.encode(std::vector<int>{2, 1, 3}), 1), 1);
    EXPECT_EQ(r.with_component(0, 2, 3), 3);
}

TEST(ModelBuilder, RejectsRowThatDoesNotSumToOne) {
    ModelBuilder b({"a"}, {"s0", "s1"}, {{"x"}}, {{"o"}});
    b.set_transition(0, 0, 0, 0.5);
    b.set_transition(0, 1, 1, 1.0);
    for (int s = 0; s < 2; ++s)
        for (int s2 = 0; s2 < 2; ++s2) b.set_observation(0, s, s2, 0, 1.0);
    EXPECT_THROW(b.build(), SemanticError);
    b.set_transition(0, 0, 1, 0.5);
    EXPECT_NO_THROW(b.build());
}

TEST(ModelBuilder, RejectsNegativeProbability) {
    ModelBuilder b({"a"}, {"s0"}, {{"x"}}, {{"o"}});
    b.set_transition(0, 0, 0, 1.0);
    b.set_observation(0, 0, 0, 0, 1.0);
    b.set_initial_belief({1.0});
    EXPECT_NO_THROW(b.build());
    b.set_initial_belief({-0.5});
    EXPECT_THROW(b.build(), SemanticError);
}

TEST(ModelIo, SerializeParseRoundTripIsExact) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 10; ++k) {
        const DecPomdp m = testing_support::random_model(rng, 3, 2, 3, 2, 2);
        const DecPomdp back = parse_model(serialize_model(m));
        EXPECT_EQ(back.transition_tensor(), m.transition_tensor());
        EXPECT_EQ(back.observation_tensor(), m.observation_tensor());
        EXPECT_EQ(back.reward_table(), m.reward_table());
        EXPECT_EQ(back.initial_belief(), m.initial_belief());
        EXPECT_EQ(serialize_model(back), serialize_model(m));
    }
}

TEST(ModelIo, ParsesWildcardsAndNamedEntries) {
    const char* text = R"(
agents: 2
discount: 1
values: reward
states: left right
start: uniform
actions:
go stay
go stay
observations:
ping
ping
T: * : left : right : 1
T: * : right : left : 1
O: * : * : * * : 1
R: go go : left : * : * : 3
R: * stay : right : * : * : -1
)";
    const DecPomdp m = parse_model(text);
    EXPECT_EQ(m.num_states(), 2);
    EXPECT_EQ(m.num_joint_actions(), 4);
    EXPECT_DOUBLE_EQ(m.transition(0, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(m.reward(0, 0), 3.0);
    const int go_stay = m.joint_actions().encode(std::vector<int>{0, 1});
    EXPECT_DOUBLE_EQ(m.reward(1, go_stay), -1.0);
    EXPECT_DOUBLE_EQ(m.initial_belief()[0], 0.5);
}

TEST(ModelIo, SyntaxErrorCarriesPosition) {
    try {
        parse_model("agents: 2\nstates: 2\nstart: uniform\nactions:\n2\n2\nobservations:\n1\n1\nT: 0 0 : 0 : 0 : abc\n");
        FAIL() << "expected an exception";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line(), 10);
    } catch (const SemanticError&) {
        SUCCEED();
    }
}

TEST(Benchmarks, ListingIsAlphabeticalAndBuildable) {
    const auto list = list_benchmarks();
    std::vector<std::string> names;
    for (const auto& b : list) names.push_back(b.name);
    EXPECT_EQ(names, (std::vector<std::string>{"box-pushing", "dec-tiger", "firefighting", "firefighting-modified"}));
    for (const auto& b : list) EXPECT_NO_THROW(build_benchmark({b.name, {}})) << b.name;
    EXPECT_THROW(build_benchmark({"tiger", {}}), UnknownBenchmark);
    EXPECT_THROW(build_benchmark({"firefighting", {{"agents", "3"}}}), SemanticError);
    EXPECT_THROW(build_benchmark({"dec-tiger", {{"houses", "3"}}}), SemanticError);
}

TEST(Benchmarks, Dimensions) {
    const DecPomdp tiger = dec_tiger();
    EXPECT_EQ(tiger.num_states(), 2);
    EXPECT_EQ(tiger.num_actions(0), 3);
    EXPECT_EQ(tiger.num_observations(1), 2);
    EXPECT_EQ(tiger.action_names(0), (std::vector<std::string>{"open-left", "open-right", "listen"}));

    const DecPomdp ff = build_benchmark({"firefighting", {}});
    EXPECT_EQ(ff.num_states(), 81);
    EXPECT_EQ(ff.num_actions(0), 4);
    EXPECT_EQ(ff.num_observations(0), 2);

    const DecPomdp mod = build_benchmark({"firefighting-modified", {}});
    EXPECT_EQ(mod.num_states(), 256);
    EXPECT_EQ(mod.num_observations(0), 4);

    const DecPomdp bp = box_pushing();
    EXPECT_EQ(bp.num_agents(), 2);
    EXPECT_EQ(bp.num_observations(0), 5);
    EXPECT_EQ(bp.num_observations(1), 5);
    EXPECT_EQ(bp.num_actions(0), 4);
}

TEST(Benchmarks, DecTigerIsSymmetricUnderLeftRightSwap) {
    const DecPomdp m = dec_tiger();
    auto swap_action = [](int a) { return a == 0 ? 1 : a == 1 ? 0 : 2; };
    const auto& ja = m.joint_actions();
    const auto& jo = m.joint_observations();
    for (int a = 0; a < m.num_joint_actions(); ++a) {
        const auto c = ja.decode(a);
        const int sa = ja.encode(std::vector<int>{swap_action(c[0]), swap_action(c[1])});
        for (int s = 0; s < 2; ++s) {
            EXPECT_DOUBLE_EQ(m.reward(s, a), m.reward(1 - s, sa));
            for (int s2 = 0; s2 < 2; ++s2) {
                EXPECT_DOUBLE_EQ(m.transition(a, s, s2), m.transition(sa, 1 - s, 1 - s2));
                for (int o = 0; o < m.num_joint_observations(); ++o) {
                    const auto oc = jo.decode(o);
                    const int so = jo.encode(std::vector<int>{1 - oc[0], 1 - oc[1]});
                    EXPECT_DOUBLE_EQ(m.observation(a, s, s2, o), m.observation(sa, 1 - s, 1 - s2, so));
                }
            }
        }
    }
}

TEST(Benchmarks, DecTigerKnownEntries) {
    const DecPomdp m = dec_tiger();
    const auto& ja = m.joint_actions();
    const int listen = ja.encode(std::vector<int>{2, 2});
    EXPECT_DOUBLE_EQ(m.reward(0, listen), -2.0);
    // tiger left, both open right
    EXPECT_DOUBLE_EQ(m.reward(0, ja.encode(std::vector<int>{1, 1})), 20.0);
    EXPECT_DOUBLE_EQ(m.reward(0, ja.encode(std::vector<int>{0, 0})), -50.0);
    EXPECT_DOUBLE_EQ(m.reward(0, ja.encode(std::vector<int>{0, 1})), -100.0);
    EXPECT_DOUBLE_EQ(m.reward(0, ja.encode(std::vector<int>{0, 2})), -101.0);
    EXPECT_DOUBLE_EQ(m.reward(0, ja.encode(std::vector<int>{2, 1})), 9.0);
    const int hear_left_both = m.joint_observations().encode(std::vector<int>{0, 0});
    EXPECT_NEAR(m.observation(listen, 0, 0, hear_left_both), 0.85 * 0.85, 1e-15);
}

TEST(Benchmarks, FirefightingRewardIsNonPositive) {
    for (const char* name : {"firefighting", "firefighting-modified"}) {
        const DecPomdp m = build_benchmark({name, {}});
        for (double r : m.reward_table()) EXPECT_LE(r, 0.0) << name;
    }
}

TEST(Benchmarks, FirefightingTwoAgentsExtinguish) {
    const DecPomdp m = firefighting({3, 3, false});
    MixedRadix states({3, 3, 3});
    const int s = states.encode(std::vector<int>{2, 2, 2});
    const int a = m.joint_actions().encode(std::vector<int>{1, 1});
    double house1_zero = 0.0;
    for (int s2 = 0; s2 < m.num_states(); ++s2)
        if (states.component(s2, 1) == 0) house1_zero += m.transition(a, s, s2);
    EXPECT_NEAR(house1_zero, 1.0, 1e-12);
}

TEST(Benchmarks, BoxPushingFileMatchesEmbeddedModel) {
    const DecPomdp file = load_model(std::string(DECPOMDP_SOURCE_DIR) + "/data/box_pushing.dpomdp");
    const DecPomdp embedded = box_pushing();
    EXPECT_EQ(file.transition_tensor(), embedded.transition_tensor());
    EXPECT_EQ(file.reward_table(), embedded.reward_table());
    EXPECT_EQ(build_benchmark({"file:" + std::string(DECPOMDP_SOURCE_DIR) + "/data/box_pushing.dpomdp", {}})
                  .num_states(),
              96);
}
