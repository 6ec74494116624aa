#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "agemem/agent_protocol.hpp"
#include "agemem/policy.hpp"

using namespace agemem;

namespace {

PolicyState toy_state(int stage, const std::string& tag) {
    PolicyState s;
    s.stage = stage;
    s.observation_tag = tag;
    s.current_message = "the launch code for the secret vault is omega7";
    s.query = stage == 3 ? "what is the launch code for the secret vault" : "";
    return s;
}

}  // namespace

TEST_CASE("scripted policy replays turns verbatim with logp 0") {
    ScriptedPolicy policy({"<think>a</think><answer>one</answer>",
                           "<think>b</think><tool_call>[]</tool_call>"});
    PolicyState state;
    auto first = policy.next_turn(state);
    CHECK(first.raw_text == "<think>a</think><answer>one</answer>");
    CHECK(first.logp == 0.0);
    auto second = policy.next_turn(state);
    CHECK(second.raw_text == "<think>b</think><tool_call>[]</tool_call>");
    auto exhausted = policy.next_turn(state);
    CHECK(parse_turn(exhausted.raw_text).ok());  // still a valid no-tool turn
}

TEST_CASE("uniform tabular policy assigns ln(1/4) over four actions") {
    SoftmaxTabularPolicy policy({"A", "B", "C", "D"}, 1.0, 0);
    for (const char* a : {"A", "B", "C", "D"}) {
        CHECK(policy.logprob("1|x", a) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    }
}

TEST_CASE("tabular sampling is reproducible for a fixed seed") {
    const PolicyState state = toy_state(1, "saw_key_fact");
    std::vector<std::string> first;
    std::vector<std::string> second;
    for (int run = 0; run < 2; ++run) {
        SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 1234);
        auto& sink = run == 0 ? first : second;
        for (int i = 0; i < 50; ++i) {
            sink.push_back(policy.next_turn(state).action_label);
        }
    }
    CHECK(first == second);
}

TEST_CASE("logprob normalization and shift invariance") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    const std::string key = "2|distractor";
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 2.0);
    for (std::size_t a = 0; a < policy.actions().size(); ++a) {
        policy.add_weight(key, a, noise(rng));
    }
    double z = 0.0;
    for (std::size_t a = 0; a < policy.actions().size(); ++a) {
        z += std::exp(policy.logprob_at(key, a));
    }
    CHECK(z == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> before;
    for (std::size_t a = 0; a < policy.actions().size(); ++a) {
        before.push_back(policy.logprob_at(key, a));
    }
    for (std::size_t a = 0; a < policy.actions().size(); ++a) {
        policy.add_weight(key, a, 17.5);  // constant shift
    }
    for (std::size_t a = 0; a < policy.actions().size(); ++a) {
        CHECK(policy.logprob_at(key, a) == doctest::Approx(before[a]).epsilon(1e-9));
    }
}

TEST_CASE("hand-computed case: logits [1,0], action 0 -> ln(e/(e+1))") {
    SoftmaxTabularPolicy policy({"yes", "no"}, 1.0, 0);
    policy.add_weight("1|s", 0, 1.0);
    const double expected = std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(policy.logprob("1|s", "yes") == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("logprob rejects unknown actions") {
    SoftmaxTabularPolicy policy({"A", "B"}, 1.0, 0);
    CHECK_THROWS_AS(policy.logprob("1|s", "C"), std::invalid_argument);
}

TEST_CASE("kl: zero on itself, nonnegative on random logits") {
    SoftmaxTabularPolicy p(tabular_actions(), 1.0, 0);
    SoftmaxTabularPolicy q(tabular_actions(), 1.0, 0);
    CHECK(kl(p, p, "1|x") == 0.0);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 1.5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string key = "1|k" + std::to_string(trial);
        for (std::size_t a = 0; a < p.actions().size(); ++a) {
            p.add_weight(key, a, noise(rng));
            q.add_weight(key, a, noise(rng));
        }
        CHECK(kl(p, q, key) >= 0.0);
    }
}

TEST_CASE("kl: direct summation for logits p=[0,0], q=[1,0]") {
    SoftmaxTabularPolicy p({"a", "b"}, 1.0, 0);
    SoftmaxTabularPolicy q({"a", "b"}, 1.0, 0);
    q.add_weight("1|s", 0, 1.0);
    // p = [0.5, 0.5]; q = [e/(e+1), 1/(e+1)]
    const double qa = std::exp(1.0) / (std::exp(1.0) + 1.0);
    const double qb = 1.0 / (std::exp(1.0) + 1.0);
    const double expected = 0.5 * std::log(0.5 / qa) + 0.5 * std::log(0.5 / qb);
    CHECK(kl(p, q, "1|s") == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient of logprob matches central finite differences") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_action(0, tabular_actions().size() - 1);
    const double step = 1e-4;

    for (int trial = 0; trial < 25; ++trial) {
        SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
        const std::string key = "1|state" + std::to_string(trial);
        for (std::size_t a = 0; a < policy.actions().size(); ++a) {
            policy.add_weight(key, a, noise(rng));
        }
        const std::size_t action = pick_action(rng);
        const auto probs = policy.distribution(key);

        for (std::size_t b = 0; b < policy.actions().size(); ++b) {
            const double analytic = ((b == action) ? 1.0 : 0.0) - probs[b];

            policy.add_weight(key, b, step);
            const double plus = policy.logprob_at(key, action);
            policy.add_weight(key, b, -2.0 * step);
            const double minus = policy.logprob_at(key, action);
            policy.add_weight(key, b, step);

            const double numeric = (plus - minus) / (2.0 * step);
            CHECK(std::abs(analytic - numeric) <=
                  1e-5 * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
        }
    }
}

TEST_CASE("every canned action turn parses cleanly") {
    for (int stage = 1; stage <= 3; ++stage) {
        const PolicyState state = toy_state(stage, "tag");
        for (const std::string& action : tabular_actions()) {
            const std::string raw = render_action_turn(action, state);
            auto parsed = parse_turn(raw);
            REQUIRE_MESSAGE(parsed.ok(), (action + " failed: " + raw));
        }
    }
}

TEST_CASE("tabular policy parameters survive a json round trip") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    policy.add_weight("1|saw_key_fact", 0, 2.5);
    policy.add_weight("3|need_answer", 5, -1.25);
    auto loaded = SoftmaxTabularPolicy::from_json(policy.to_json());
    REQUIRE(loaded.ok());
    CHECK(loaded.value().parameters() == policy.parameters());
    CHECK(loaded.value().actions() == policy.actions());
}
