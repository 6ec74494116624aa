#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "agemem/reward.hpp"

using namespace agemem;

namespace {

std::shared_ptr<HashedEncoder> encoder() {
    static auto enc = std::make_shared<HashedEncoder>();
    return enc;
}

TaskSpec sample_task() {
    TaskSpec task;
    task.query = "what is the launch code for the secret vault";
    task.context_info = {"the launch code for the secret vault is omega7", "soup on tuesdays"};
    task.expected_answer = "omega7";
    task.key_tokens = {"omega7", "vault"};
    task.distractors = {"blockchain gadget sale"};
    return task;
}

ToolEvent event(const std::string& tool, bool ok, int usage) {
    return ToolEvent{tool, ok, usage, ok ? "" : "error"};
}

MemoryEntry entry_of(const std::string& content) {
    return MemoryEntry{"mem_t", content, encoder()->encode(content), {}, std::nullopt, 0, 0};
}

}  // namespace

TEST_CASE("task reward: no-answer penalty, exact match, disjoint") {
    MockJudge judge(encoder());
    CHECK(task_reward(std::nullopt, "q", "Paris", judge) == -1.0);
    CHECK(task_reward(std::optional<std::string>("Paris"), "q", "Paris", judge) == 1.0);
    CHECK(task_reward(std::optional<std::string>("zebra"), "q", "Paris", judge) == 0.0);
}

TEST_CASE("mock judge containment scores 0.5") {
    MockJudge judge(encoder());
    CHECK(judge.score_answer("q", "Paris", "the answer is Paris, France") == 0.5);
    CHECK(judge.score_answer("q", "Paris", "paris") == 1.0);  // normalization
}

TEST_CASE("compression reward formula and clamps") {
    CHECK(compression_reward(2000, 8000) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(compression_reward(8000, 8000) == 0.0);
    CHECK(compression_reward(9000, 8000) == 0.0);
    CHECK(compression_reward(0, 8000) == 1.0);
    CHECK_THROWS_AS(compression_reward(1, 0), std::invalid_argument);
}

TEST_CASE("preventive reward: indicator of an in-budget reduction call") {
    CHECK(preventive_reward({event("Summary_context", true, 3000)}, 8192) == 1);
    CHECK(preventive_reward({}, 8192) == 0);
    CHECK(preventive_reward({event("Filter_context", true, 9000)}, 8192) == 0);  // after overflow
    CHECK(preventive_reward({event("Add_memory", true, 10)}, 8192) == 0);        // wrong tool
    CHECK(preventive_reward({event("Filter_context", false, 10)}, 8192) == 0);   // failed call
}

TEST_CASE("preservation reward: direct, via summary, missing, vacuous") {
    CHECK(preservation_reward({"the code is omega7", "mentions the vault"}, {"omega7", "vault"}) == 1);
    CHECK(preservation_reward({"summary: OMEGA7 vault details"}, {"omega7", "vault"}) == 1);
    CHECK(preservation_reward({"the vault is locked"}, {"omega7", "vault"}) == 0);

    std::vector<std::string> flags;
    CHECK(preservation_reward({"anything"}, {}, &flags) == 1);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0] == "vacuous:preservation");
}

TEST_CASE("storage reward: denominator guard and high-quality fraction") {
    MockJudge judge(encoder());
    const TaskSpec task = sample_task();
    CHECK(storage_reward({}, task, judge) == 0.0);

    // 2 of 4 entries carry a key token
    const std::vector<std::string> added = {
        "the vault is in the basement",
        "soup on tuesdays",
        "code omega7 unlocks it",
        "the printer jams",
    };
    CHECK(storage_reward(added, task, judge) == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<std::string> all_good = {"omega7", "vault access"};
    CHECK(storage_reward(all_good, task, judge) == 1.0);
}

TEST_CASE("maintenance reward needs one successful update or delete") {
    CHECK(maintenance_reward({event("Update_memory", true, 0)}) == 1);
    CHECK(maintenance_reward({event("Delete_memory", false, 0)}) == 0);
    CHECK(maintenance_reward({event("Add_memory", true, 0)}) == 0);
    CHECK(maintenance_reward({}) == 0);
}

TEST_CASE("relevance reward: empty set, self-similar entry, hand-computed mean") {
    MockJudge judge(encoder());
    const std::string q = "what is the launch code for the secret vault";
    CHECK(relevance_reward({}, q, judge) == 0.0);

    CHECK(relevance_reward({entry_of(q)}, q, judge) == doctest::Approx(1.0).epsilon(1e-9));

    const std::vector<MemoryEntry> three = {
        entry_of("the launch code for the secret vault is omega7"),
        entry_of("soup on tuesdays"),
        entry_of("the vault is downstairs"),
    };
    const auto qv = encoder()->encode(q);
    double mean = 0.0;
    for (const auto& e : three) {
        mean += cosine(qv, e.embedding);
    }
    mean = std::clamp(mean / 3.0, 0.0, 1.0);
    CHECK(relevance_reward(three, q, judge) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("penalties: rounds, overflow, both, clean") {
    PenaltyInputs in;
    in.n_max = 20;
    in.token_budget = 8192;

    in.stage_rounds = {21, 3, 3};
    in.peak_usage = 100;
    CHECK(penalties(in) == -1.0);

    in.stage_rounds = {21, 3, 3};
    in.peak_usage = 9000;
    CHECK(penalties(in) == -1.5);

    in.stage_rounds = {5, 5, 5};
    in.peak_usage = 100;
    CHECK(penalties(in) == 0.0);

    in.stage_rounds = {20, 20, 20};  // at the limit is not over it
    CHECK(penalties(in) == 0.0);
}

TEST_CASE("total reward: perfect components sum to 3.0 with unit weights") {
    MockJudge judge(encoder());
    TaskSpec task = sample_task();

    Trajectory t;
    t.answer = "omega7";
    t.final_context_usage = 0;
    t.final_context_contents = {"retrieved omega7 from the vault"};
    t.tool_events = {event("Filter_context", true, 100), event("Update_memory", true, 200)};
    t.added_contents = {"omega7 opens the vault"};
    t.agent_retrieved = {entry_of(task.query)};
    t.stage_rounds = {1, 1, 1};
    t.peak_context_usage = 100;

    const RewardBreakdown b = total_reward(t, task, judge);
    CHECK(b.r_task == 1.0);
    CHECK(b.r_context == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.r_memory == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.p_rounds == 0.0);
    CHECK(b.p_overflow == 0.0);
    CHECK(b.total == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("total reward: null answer with empty components is -1.0") {
    MockJudge judge(encoder());
    TaskSpec task = sample_task();
    task.key_tokens = {"omega7"};

    Trajectory t;
    t.answer = std::nullopt;
    t.final_context_usage = kDefaultContextBudget;  // compression 0
    t.final_context_contents = {};                  // preservation 0
    t.stage_rounds = {1, 1, 1};

    const RewardBreakdown b = total_reward(t, task, judge);
    CHECK(b.r_task == -1.0);
    CHECK(b.r_context == 0.0);
    CHECK(b.r_memory == 0.0);
    CHECK(b.total == doctest::Approx(-1.0).epsilon(1e-12));
}

namespace {

// Judge whose backend is down; components must flag, never silently zero.
class ThrowingJudge final : public Judge {
public:
    double score_answer(const std::string&, const std::string&, const std::string&) override {
        throw JudgeError("offline");
    }
    std::vector<bool> judge_storage(const TaskSpec&, const std::vector<std::string>&) override {
        throw JudgeError("offline");
    }
    double score_relevance(const std::string&, const std::vector<MemoryEntry>&) override {
        throw JudgeError("offline");
    }
    double memory_quality(const std::string&, const std::string&, const std::vector<std::string>&,
                          const std::vector<std::string>&) override {
        throw JudgeError("offline");
    }
};

}  // namespace

TEST_CASE("judge failures flag the affected components instead of silently zeroing") {
    ThrowingJudge judge;
    const TaskSpec task = sample_task();
    Trajectory t;
    t.answer = "omega7";
    t.final_context_usage = 100;
    t.added_contents = {"something stored"};
    t.agent_retrieved = {entry_of("retrieved text")};
    t.stage_rounds = {1, 1, 1};

    const RewardBreakdown b = total_reward(t, task, judge);
    CHECK(b.r_task == 0.0);
    CHECK(b.r_storage == 0.0);
    CHECK(b.r_relevance == 0.0);
    auto has_flag = [&](const std::string& f) {
        return std::find(b.flags.begin(), b.flags.end(), f) != b.flags.end();
    };
    CHECK(has_flag("unscored:task"));
    CHECK(has_flag("unscored:storage"));
    CHECK(has_flag("unscored:relevance"));
}

TEST_CASE("breakdown invariants hold under randomized trace fuzzing") {
    MockJudge judge(encoder());
    const TaskSpec task = sample_task();
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> usage(0, 2 * kDefaultContextBudget);
    std::uniform_int_distribution<int> rounds(0, 40);
    std::uniform_int_distribution<int> n_items(0, 5);

    static const std::vector<std::string> texts = {
        "omega7",       "the vault",   "soup",  "printer jams",
        "random words", "gadget sale", "paris", "launch code",
    };
    std::uniform_int_distribution<std::size_t> pick(0, texts.size() - 1);

    for (int trial = 0; trial < 300; ++trial) {
        Trajectory t;
        if (coin(rng)) {
            t.answer = texts[pick(rng)];
        }
        t.final_context_usage = usage(rng);
        t.peak_context_usage = usage(rng);
        t.stage_rounds = {rounds(rng), rounds(rng), rounds(rng)};
        for (int i = n_items(rng); i > 0; --i) {
            t.final_context_contents.push_back(texts[pick(rng)]);
        }
        for (int i = n_items(rng); i > 0; --i) {
            t.added_contents.push_back(texts[pick(rng)]);
        }
        for (int i = n_items(rng); i > 0; --i) {
            t.agent_retrieved.push_back(entry_of(texts[pick(rng)]));
        }
        const std::vector<std::string> tools = {"Summary_context", "Filter_context", "Add_memory",
                                                "Update_memory", "Delete_memory", "Retrieve_memory"};
        for (int i = n_items(rng); i > 0; --i) {
            t.tool_events.push_back(
                event(tools[static_cast<std::size_t>(rng() % tools.size())], coin(rng) == 1, usage(rng)));
        }

        const RewardBreakdown b = total_reward(t, task, judge);

        CHECK(b.r_task >= -1.0);
        CHECK(b.r_task <= 1.0);
        for (double component : {b.r_compression, b.r_storage, b.r_relevance}) {
            CHECK(component >= 0.0);
            CHECK(component <= 1.0);
        }
        for (double indicator : {b.r_preventive, b.r_preservation, b.r_maintenance}) {
            CHECK((indicator == 0.0 || indicator == 1.0));
        }
        CHECK(b.p_rounds <= 0.0);
        CHECK(b.p_overflow <= 0.0);
        CHECK(b.r_context ==
              doctest::Approx((b.r_compression + b.r_preventive + b.r_preservation) / 3.0).epsilon(1e-15));
        CHECK(b.r_memory ==
              doctest::Approx((b.r_storage + b.r_maintenance + b.r_relevance) / 3.0).epsilon(1e-15));
        CHECK(b.total ==
              doctest::Approx(b.r_task + b.r_context + b.r_memory + b.p_rounds + b.p_overflow)
                  .epsilon(1e-15));

        // determinism with the mock judge
        const RewardBreakdown again = total_reward(t, task, judge);
        CHECK(again.total == b.total);
        CHECK(again.r_storage == b.r_storage);
    }
}
