#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "agemem/grpo.hpp"

using namespace agemem;

namespace {

Trajectory trajectory_of(int length, double reward, int stage = 1,
                         const std::string& tag = "t", const std::string& action = "SKIP",
                         double logp = -1.0) {
    Trajectory t;
    for (int i = 0; i < length; ++i) {
        Experience e;
        e.stage = stage;
        e.step_index = i;
        e.observation_tag = tag;
        e.action_label = action;
        e.logp_old = logp;
        t.experiences.push_back(e);
    }
    t.terminal_reward = reward;
    if (!t.experiences.empty()) {
        t.experiences.back().reward = reward;
    }
    return t;
}

}  // namespace

TEST_CASE("group advantages: zero variance gives all zeros") {
    const auto a = group_advantages({1.0, 1.0, 1.0, 1.0});
    for (double v : a) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("group advantages: [1,0] matches the hand computation") {
    const auto a = group_advantages({1.0, 0.0});
    // mu = 0.5, sigma = sqrt(0.5) with the K-1 denominator
    const double expected = 0.5 / (std::sqrt(0.5) + 1e-8);
    CHECK(std::abs(a[0] - expected) < 1e-9);
    CHECK(std::abs(a[1] + expected) < 1e-9);
}

TEST_CASE("group advantages: mean zero and translation invariance") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 2.0);
    // dyadic rewards keep every intermediate exactly representable, so the
    // +5 shift must cancel bit for bit
    std::uniform_int_distribution<int> eighths(-16, 16);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> rewards;
        std::vector<double> dyadic;
        for (int i = 0; i < 8; ++i) {
            rewards.push_back(noise(rng));
            dyadic.push_back(static_cast<double>(eighths(rng)) / 8.0);
        }
        const auto a = group_advantages(rewards);
        double mean = 0.0;
        for (double v : a) {
            mean += v;
        }
        mean /= static_cast<double>(a.size());
        CHECK(std::abs(mean) < 1e-9);

        const auto base = group_advantages(dyadic);
        std::vector<double> shifted = dyadic;
        for (double& r : shifted) {
            r += 5.0;
        }
        const auto moved = group_advantages(shifted);
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(base[i] == moved[i]);  // exact
        }
    }
}

TEST_CASE("group advantages: epsilon effect under positive scaling is tiny") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> rewards;
        for (int i = 0; i < 8; ++i) {
            rewards.push_back(unit(rng));
        }
        // ensure a healthy spread so sigma >= 1e-3
        rewards[0] = 0.0;
        rewards[1] = 1.0;
        const auto base = group_advantages(rewards);
        std::vector<double> scaled = rewards;
        for (double& r : scaled) {
            r *= 10.0;
        }
        const auto big = group_advantages(scaled);
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (std::abs(base[i]) > 1e-12) {
                CHECK(std::abs(big[i] - base[i]) / std::abs(base[i]) < 1e-6);
            }
        }
    }
}

TEST_CASE("group advantages demand at least two rewards") {
    CHECK_THROWS_AS(group_advantages({1.0}), std::invalid_argument);
}

TEST_CASE("broadcast fills every step with the terminal advantage") {
    const Trajectory t = trajectory_of(12, 2.0);
    const auto advantaged = broadcast_advantage(t, 0.7);
    REQUIRE(advantaged.size() == 12);
    for (const auto& e : advantaged) {
        CHECK(e.advantage == 0.7);
    }
}

TEST_CASE("build_buffer: size, deterministic order, field carry") {
    GroupBatch g1{"task_a", {trajectory_of(3, 1.0), trajectory_of(3, 0.0)}};
    GroupBatch g2{"task_b", {trajectory_of(4, 2.0), trajectory_of(4, 1.0)}};
    const auto buffer = build_buffer({g1, g2});
    REQUIRE(buffer.size() == 3 + 3 + 4 + 4);

    CHECK(buffer[0].task_id == "task_a");
    CHECK(buffer[0].rollout == 0);
    CHECK(buffer[0].step == 0);
    CHECK(buffer[5].rollout == 1);
    CHECK(buffer.back().task_id == "task_b");
    CHECK(buffer.back().step == 3);
    for (const BufferEntry& e : buffer) {
        REQUIRE(e.logp_old.has_value());
        CHECK(*e.logp_old == -1.0);
    }

    // advantages constant within each trajectory, mirrored across the pair
    CHECK(buffer[0].advantage == buffer[2].advantage);
    CHECK(buffer[0].advantage == doctest::Approx(-buffer[3].advantage).epsilon(1e-12));

    const auto again = build_buffer({g1, g2});
    REQUIRE(again.size() == buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        CHECK(again[i].advantage == buffer[i].advantage);
        CHECK(again[i].task_id == buffer[i].task_id);
    }
}

TEST_CASE("build_buffer: aborted trajectories are dropped, bad groups discarded") {
    Trajectory aborted = trajectory_of(5, 0.0);
    aborted.aborted = true;

    GroupBatch mixed{"task", {trajectory_of(3, 1.0), trajectory_of(3, 0.0), aborted}};
    const auto buffer = build_buffer({mixed});
    CHECK(buffer.size() == 6);  // aborted rollout excluded from stats and buffer

    GroupBatch hopeless{"task", {trajectory_of(3, 1.0), aborted, aborted}};
    CHECK(build_buffer({hopeless}).empty());
}

TEST_CASE("objective: null check with identical policies over equal-length groups") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    const double logp = policy.logprob("1|t", "SKIP");  // uniform log prob

    GroupBatch group{"task",
                     {trajectory_of(4, 1.0, 1, "t", "SKIP", logp),
                      trajectory_of(4, 0.5, 1, "t", "SKIP", logp),
                      trajectory_of(4, 0.0, 1, "t", "SKIP", logp)}};
    const auto buffer = build_buffer({group});
    REQUIRE(buffer.size() == 12);

    const auto stats = objective(buffer, policy, policy, kDefaultKlBeta);
    CHECK(stats.used == 12);
    CHECK(std::abs(stats.j) < 1e-9);
    CHECK(stats.mean_kl == 0.0);
}

TEST_CASE("objective: beta 0, single entry, unit ratio recovers the advantage") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    BufferEntry e;
    e.stage = 1;
    e.observation_tag = "t";
    e.action_label = "SKIP";
    e.logp_old = policy.logprob("1|t", "SKIP");
    e.advantage = 0.5;
    const auto stats = objective({e}, policy, policy, 0.0);
    CHECK(stats.j == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("objective: larger beta strictly lowers J when KL is nonzero") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    SoftmaxTabularPolicy reference = policy;
    policy.add_weight("1|t", 0, 1.0);  // diverge from the reference

    BufferEntry e;
    e.stage = 1;
    e.observation_tag = "t";
    e.action_label = "SKIP";
    e.logp_old = policy.logprob("1|t", "SKIP");
    e.advantage = 0.3;

    const double j1 = objective({e}, policy, reference, 0.1).j;
    const double j2 = objective({e}, policy, reference, 0.5).j;
    CHECK(j2 < j1);
}

TEST_CASE("objective: entries without logp_old are skipped and counted") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    BufferEntry good;
    good.stage = 1;
    good.observation_tag = "t";
    good.action_label = "SKIP";
    good.logp_old = policy.logprob("1|t", "SKIP");
    good.advantage = 1.0;
    BufferEntry missing = good;
    missing.logp_old = std::nullopt;

    const auto stats = objective({good, missing}, policy, policy, 0.1);
    CHECK(stats.used == 1);
    CHECK(stats.skipped == 1);
    CHECK(stats.j == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("train_step: zero advantages at the reference point leave parameters unchanged") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    const SoftmaxTabularPolicy reference = policy;

    std::vector<BufferEntry> buffer;
    for (int i = 0; i < 5; ++i) {
        BufferEntry e;
        e.stage = 1;
        e.observation_tag = "t";
        e.action_label = tabular_actions()[static_cast<std::size_t>(i)];
        e.logp_old = policy.logprob("1|t", e.action_label);
        e.advantage = 0.0;
        buffer.push_back(e);
    }
    train_step(policy, buffer, reference, 0.1, 0.5);
    for (const auto& [key, weights] : policy.parameters()) {
        for (double w : weights) {
            CHECK(w == 0.0);
        }
    }
}

TEST_CASE("train_step: a positive-advantage action gains weight") {
    SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
    const SoftmaxTabularPolicy reference = policy;
    BufferEntry e;
    e.stage = 1;
    e.observation_tag = "t";
    e.action_label = "ADD_KEY";
    e.logp_old = policy.logprob("1|t", "ADD_KEY");
    e.advantage = 1.0;
    train_step(policy, {e}, reference, 0.0, 0.3);
    const std::size_t idx = policy.action_index("ADD_KEY");
    CHECK(policy.weight("1|t", idx) > 0.0);
    for (std::size_t b = 0; b < policy.actions().size(); ++b) {
        if (b != idx) {
            CHECK(policy.weight("1|t", b) < 0.0);
        }
    }
}

TEST_CASE("analytic gradient matches central finite differences on random buffers") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.5, 1.5);
    const double step = 1e-4;

    for (int trial = 0; trial < 15; ++trial) {
        SoftmaxTabularPolicy policy(tabular_actions(), 1.0, 0);
        SoftmaxTabularPolicy reference(tabular_actions(), 1.0, 0);
        std::vector<std::string> keys;
        for (int s = 0; s < 5; ++s) {
            const std::string tag = "state" + std::to_string(s);
            keys.push_back(SoftmaxTabularPolicy::feature_key(1, tag));
            for (std::size_t a = 0; a < policy.actions().size(); ++a) {
                policy.add_weight(keys.back(), a, noise(rng));
                reference.add_weight(keys.back(), a, 0.5 * noise(rng));
            }
        }

        std::vector<BufferEntry> buffer;
        std::uniform_int_distribution<std::size_t> pick_key(0, keys.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_action(0, policy.actions().size() - 1);
        for (int i = 0; i < 20; ++i) {
            BufferEntry e;
            e.stage = 1;
            const std::string key = keys[pick_key(rng)];
            e.observation_tag = key.substr(2);
            e.action_label = policy.actions()[pick_action(rng)];
            e.logp_old = policy.logprob(key, e.action_label) + 0.1 * noise(rng);
            e.advantage = unit(rng);
            buffer.push_back(e);
        }

        const double beta = 0.1;
        const auto grad = objective_gradient(buffer, policy, reference, beta);
        for (const auto& [key, values] : grad) {
            for (std::size_t b = 0; b < values.size(); ++b) {
                SoftmaxTabularPolicy plus = policy;
                plus.add_weight(key, b, step);
                SoftmaxTabularPolicy minus = policy;
                minus.add_weight(key, b, -step);
                const double numeric = (objective(buffer, plus, reference, beta).j -
                                        objective(buffer, minus, reference, beta).j) /
                                       (2.0 * step);
                const double analytic = values[b];
                const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
                CHECK(std::abs(numeric - analytic) <= 1e-5 * scale);
            }
        }
    }
}

TEST_CASE("buffer dump is one JSON object per entry") {
    GroupBatch group{"task", {trajectory_of(2, 1.0), trajectory_of(2, 0.0)}};
    const auto buffer = build_buffer({group});
    const std::string dump = buffer_to_jsonl(buffer);
    int lines = 0;
    for (char c : dump) {
        if (c == '\n') {
            ++lines;
        }
    }
    CHECK(lines == 4);
    CHECK(dump.find("\"advantage\"") != std::string::npos);
}
