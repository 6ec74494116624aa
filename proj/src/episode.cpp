#include "agemem/episode.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "agemem/prompts.hpp"

namespace agemem {

EpisodeEngine::EpisodeEngine(std::shared_ptr<const TextEncoder> encoder, EngineConfig config)
    : encoder_(std::move(encoder)), config_(std::move(config)) {
    if (!encoder_) {
        throw std::invalid_argument("EpisodeEngine requires an encoder");
    }
    if (!config_.summarizer) {
        config_.summarizer = extractive_summary;
    }
}

ContextState EpisodeEngine::make_context() const {
    ContextState ctx(config_.token_budget);
    ctx.append(make_message(Role::kSystem, prompts::render_system_prompt()));
    return ctx;
}

PolicyState EpisodeEngine::build_state(int stage, int step, const std::string& current_message,
                                       const TaskSpec& task, const MemoryStore& store,
                                       const ContextState& ctx) const {
    PolicyState state;
    state.stage = stage;
    state.step = step;
    state.current_message = current_message;
    state.query = (stage == 3) ? task.query : std::string();
    state.context_usage = ctx.usage();
    state.store_size = store.size();
    state.context = &ctx;
    state.observation_tag = "s" + std::to_string(stage);
    if (config_.hooks.decorate_state) {
        config_.hooks.decorate_state(state, ctx, store, task);
    }
    return state;
}

EpisodeEngine::StepOutcome EpisodeEngine::execute_turn(int stage, int step,
                                                       const std::string& current_message,
                                                       const TaskSpec& task, Policy& policy,
                                                       MemoryStore& store, ContextState& ctx,
                                                       ToolDispatcher& dispatcher,
                                                       Trajectory& out) const {
    PolicyState state = build_state(stage, step, current_message, task, store, ctx);
    out.stage_rounds[stage - 1] += 1;
    TurnSample sample = policy.next_turn(state);
    ParseResult parsed = parse_turn(sample.raw_text);

    if (!parsed.ok()) {
        // One retry: the error text goes back to the agent as a tool message.
        ctx.append(make_message(Role::kTool, "Protocol error: " + parsed.error->message));
        out.protocol_retries += 1;
        out.stage_rounds[stage - 1] += 1;
        state = build_state(stage, step, current_message, task, store, ctx);
        sample = policy.next_turn(state);
        parsed = parse_turn(sample.raw_text);
    }

    Experience exp;
    exp.stage = stage;
    exp.step_index = step;
    exp.context_usage = state.context_usage;
    exp.store_size = state.store_size;
    exp.observation_tag = state.observation_tag;
    exp.action_raw = sample.raw_text;
    exp.action_label = sample.action_label;
    exp.logp_old = sample.logp;
    out.experiences.push_back(std::move(exp));

    StepOutcome outcome;
    if (!parsed.ok()) {
        // Retry failed too: record the turn, execute nothing, keep going.
        ctx.append(make_message(Role::kTool, "Protocol error: " + parsed.error->message));
        ctx.append(make_message(Role::kAssistant, sample.raw_text));
        out.peak_context_usage = std::max(out.peak_context_usage, ctx.peak_usage());
        return outcome;
    }

    const AgentTurn& turn = *parsed.turn;
    if (turn.kind == TurnKind::kAnswer && stage == 3) {
        // Compression and preservation are judged on the context the final
        // answer was generated from, before the answer lands in it.
        out.final_context_usage = ctx.usage();
        out.final_context_contents = ctx.live_contents();
    }

    ctx.append(make_message(Role::kAssistant, sample.raw_text));

    if (turn.wrapped_lone_object) {
        out.wrapped_tool_objects += 1;
    }
    if (turn.kind == TurnKind::kToolCalls) {
        dispatcher.dispatch(turn.tool_calls);
    } else {
        outcome.answered = true;
        outcome.answer = turn.answer;
    }
    out.peak_context_usage = std::max(out.peak_context_usage, ctx.peak_usage());
    return outcome;
}

void EpisodeEngine::run_stage1(const TaskSpec& task, Policy& policy, MemoryStore& store,
                               ContextState& ctx, ToolDispatcher& dispatcher, Trajectory& out) const {
    const int steps = std::min<int>(task.n_max, static_cast<int>(task.context_info.size()));
    for (int t = 0; t < steps; ++t) {
        const std::string& fact = task.context_info[static_cast<std::size_t>(t)];
        // Introspective retrieval before every step keeps the agent aware of
        // current LTM contents; retrieved entries land before the fact itself.
        auto results = store.retrieve(fact, config_.auto_retrieve_top_k);
        std::vector<MemoryEntry> entries;
        entries.reserve(results.size());
        for (auto& r : results) {
            entries.push_back(std::move(r.entry));
        }
        ctx.insert_retrieved(entries);
        out.auto_retrievals += 1;

        ctx.append(make_message(Role::kUser, fact));

        const StepOutcome outcome = execute_turn(1, t, fact, task, policy, store, ctx, dispatcher, out);
        if (outcome.answered) {
            break;  // conversation break: ends this stage only
        }
    }
}

void EpisodeEngine::run_stage2(const TaskSpec& task, Policy& policy, MemoryStore& store,
                               ContextState& ctx, ToolDispatcher& dispatcher, Trajectory& out) const {
    ctx.reset();  // the store persists across the reset
    const int steps = std::min<int>(task.n_max, static_cast<int>(task.distractors.size()));
    for (int t = 0; t < steps; ++t) {
        const std::string& distractor = task.distractors[static_cast<std::size_t>(t)];
        ctx.append(make_message(Role::kUser, distractor, {"distractor"}));

        const StepOutcome outcome =
            execute_turn(2, t, distractor, task, policy, store, ctx, dispatcher, out);
        if (outcome.answered) {
            break;
        }
    }
}

std::optional<std::string> EpisodeEngine::run_stage3(const TaskSpec& task, Policy& policy,
                                                     MemoryStore& store, ContextState& ctx,
                                                     ToolDispatcher& dispatcher,
                                                     Trajectory& out) const {
    ctx.append(make_message(Role::kUser, task.query));
    std::optional<std::string> answer;
    for (int t = 0; t < task.n_max; ++t) {
        const StepOutcome outcome =
            execute_turn(3, t, task.query, task, policy, store, ctx, dispatcher, out);
        if (outcome.answered) {
            answer = outcome.answer;
            break;
        }
    }
    if (!answer.has_value()) {
        out.final_context_usage = ctx.usage();
        out.final_context_contents = ctx.live_contents();
    }
    return answer;
}

Trajectory EpisodeEngine::run_episode(const TaskSpec& task, Policy& policy, Judge& judge) const {
    Trajectory trajectory;
    for (const std::string& name : prompts::tool_names()) {
        trajectory.tool_usage[name] = 0;
    }

    MemoryStore store = make_store();
    ContextState ctx = make_context();
    ToolDispatcher dispatcher(store, ctx, config_.summarizer, config_.filter_threshold);

    try {
        run_stage1(task, policy, store, ctx, dispatcher, trajectory);
        run_stage2(task, policy, store, ctx, dispatcher, trajectory);
        trajectory.answer = run_stage3(task, policy, store, ctx, dispatcher, trajectory);
    } catch (const TransportError& e) {
        trajectory.aborted = true;
        trajectory.abort_reason = e.what();
    }

    const DispatchRecord& record = dispatcher.record();
    for (const auto& [tool, count] : record.calls) {
        trajectory.tool_usage[tool] += count;
    }
    trajectory.tool_events = record.events;
    trajectory.added_contents = record.added_contents;
    trajectory.agent_retrieved = record.agent_retrieved;
    trajectory.peak_context_usage = std::max(trajectory.peak_context_usage, ctx.peak_usage());

    trajectory.violations.overflow = trajectory.peak_context_usage > config_.token_budget;
    trajectory.violations.rounds_exceeded =
        std::any_of(trajectory.stage_rounds.begin(), trajectory.stage_rounds.end(),
                    [&](int rounds) { return rounds > task.n_max; });

    if (!trajectory.aborted) {
        trajectory.breakdown = total_reward(trajectory, task, judge, config_.token_budget);
        trajectory.terminal_reward = trajectory.breakdown.total;
        if (!trajectory.experiences.empty()) {
            trajectory.experiences.back().reward = trajectory.terminal_reward;
        }
    }
    return trajectory;
}

std::vector<Trajectory> EpisodeEngine::rollout_group(const TaskSpec& task,
                                                     const PolicyFactory& make_policy, int k,
                                                     Judge& judge, int jobs) const {
    if (k < 2) {
        throw std::invalid_argument("rollout_group: K must be >= 2");
    }
    std::vector<Trajectory> results(static_cast<std::size_t>(k));
    auto run_one = [&](int index) {
        auto policy = make_policy(index);
        results[static_cast<std::size_t>(index)] = run_episode(task, *policy, judge);
    };
    if (jobs <= 1) {
        for (int i = 0; i < k; ++i) {
            run_one(i);
        }
        return results;
    }
    // Rollouts share no mutable state; a simple striped pool keeps the merge
    // order identical to the serial path.
    std::vector<std::thread> workers;
    const int stripes = std::min(jobs, k);
    workers.reserve(static_cast<std::size_t>(stripes));
    for (int w = 0; w < stripes; ++w) {
        workers.emplace_back([&, w] {
            for (int i = w; i < k; i += stripes) {
                run_one(i);
            }
        });
    }
    for (std::thread& worker : workers) {
        worker.join();
    }
    return results;
}

bool group_usable(const std::vector<Trajectory>& trajectories) {
    const std::size_t aborted =
        static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                               [](const Trajectory& t) { return t.aborted; }));
    const std::size_t usable = trajectories.size() - aborted;
    return usable >= 2 && aborted * 2 <= trajectories.size();
}

}  // namespace agemem
