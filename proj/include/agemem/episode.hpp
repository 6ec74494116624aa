#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "agemem/agent_protocol.hpp"
#include "agemem/policy.hpp"
#include "agemem/reward.hpp"
#include "agemem/trajectory.hpp"

namespace agemem {

// Environment-specific decoration of the per-step policy state (observation
// tag, answer hint). The default tagger produces "s<stage>".
struct EpisodeHooks {
    std::function<void(PolicyState&, const ContextState&, const MemoryStore&, const TaskSpec&)>
        decorate_state;
};

struct EngineConfig {
    int auto_retrieve_top_k = kDefaultRetrieveTopK;
    int token_budget = kDefaultContextBudget;
    double filter_threshold = kDefaultFilterThreshold;
    Summarizer summarizer = extractive_summary;
    EpisodeHooks hooks;
};

// Executes the three-stage episode protocol:
//   Stage 1 feeds the task facts one per step with an automatic top-k
//   retrieval before each, Stage 2 resets the context (the store persists)
//   and injects distractors, Stage 3 appends the query and loops until an
//   answer or the round limit. The reward engine runs once per episode and
//   its total lands on the last experience.
class EpisodeEngine {
public:
    explicit EpisodeEngine(std::shared_ptr<const TextEncoder> encoder, EngineConfig config = {});

    Trajectory run_episode(const TaskSpec& task, Policy& policy, Judge& judge) const;

    // Stage runners against caller-owned state; experiences append to `out`.
    void run_stage1(const TaskSpec& task, Policy& policy, MemoryStore& store, ContextState& ctx,
                    ToolDispatcher& dispatcher, Trajectory& out) const;
    void run_stage2(const TaskSpec& task, Policy& policy, MemoryStore& store, ContextState& ctx,
                    ToolDispatcher& dispatcher, Trajectory& out) const;
    // Returns the captured answer (null when the round limit ran out).
    std::optional<std::string> run_stage3(const TaskSpec& task, Policy& policy, MemoryStore& store,
                                          ContextState& ctx, ToolDispatcher& dispatcher,
                                          Trajectory& out) const;

    using PolicyFactory = std::function<std::unique_ptr<Policy>(int rollout_index)>;

    // K independent episodes with isolated stores/contexts. Results are merged
    // in rollout-index order, so serial and parallel execution agree.
    std::vector<Trajectory> rollout_group(const TaskSpec& task, const PolicyFactory& make_policy,
                                          int k, Judge& judge, int jobs = 1) const;

    MemoryStore make_store() const { return MemoryStore(encoder_); }
    ContextState make_context() const;

    const EngineConfig& config() const { return config_; }

private:
    struct StepOutcome {
        bool answered = false;
        std::string answer;
    };

    StepOutcome execute_turn(int stage, int step, const std::string& current_message,
                             const TaskSpec& task, Policy& policy, MemoryStore& store,
                             ContextState& ctx, ToolDispatcher& dispatcher, Trajectory& out) const;

    PolicyState build_state(int stage, int step, const std::string& current_message,
                            const TaskSpec& task, const MemoryStore& store,
                            const ContextState& ctx) const;

    std::shared_ptr<const TextEncoder> encoder_;
    EngineConfig config_;
};

// A group is usable for advantage statistics when at most half its rollouts
// aborted and at least two completed.
bool group_usable(const std::vector<Trajectory>& trajectories);

}  // namespace agemem
