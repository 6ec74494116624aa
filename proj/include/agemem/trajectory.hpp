#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "agemem/agent_protocol.hpp"
#include "agemem/constants.hpp"
#include "agemem/result.hpp"

namespace agemem {

struct TaskSpec {
    std::string query;
    std::vector<std::string> context_info;  // Stage-1 facts, in presentation order
    std::string expected_answer;
    std::vector<std::string> key_tokens;
    std::vector<std::string> distractors;  // Stage-2 stream, in injection order
    int n_max = kDefaultMaxRounds;

    nlohmann::ordered_json to_json() const;
    static Expected<TaskSpec> from_json(const nlohmann::ordered_json& j);
    static Expected<TaskSpec> load_file(const std::string& path);
};

// One step. Intermediate rewards are zero; the terminal step carries R(tau).
struct Experience {
    int stage = 1;
    int step_index = 0;  // 0-based within the stage
    int context_usage = 0;
    std::size_t store_size = 0;
    std::string observation_tag;
    std::string action_raw;
    std::string action_label;  // tabular alphabet action, empty otherwise
    double reward = 0.0;
    std::optional<double> logp_old;
};

struct RewardBreakdown {
    double r_task = 0.0;
    double r_compression = 0.0;
    double r_preventive = 0.0;
    double r_preservation = 0.0;
    double r_context = 0.0;  // mean of the three context components
    double r_storage = 0.0;
    double r_maintenance = 0.0;
    double r_relevance = 0.0;
    double r_memory = 0.0;  // mean of the three memory components
    double p_rounds = 0.0;
    double p_overflow = 0.0;
    double total = 0.0;
    std::vector<std::string> flags;  // e.g. "unscored:storage", "vacuous:preservation"

    nlohmann::ordered_json to_json() const;
    static RewardBreakdown from_json(const nlohmann::ordered_json& j);
};

struct Violations {
    bool rounds_exceeded = false;
    bool overflow = false;
};

struct Trajectory {
    std::vector<Experience> experiences;  // stages 1..3, in order
    double terminal_reward = 0.0;
    std::optional<std::string> answer;
    std::map<std::string, int> tool_usage;  // agent-initiated calls per tool
    int auto_retrievals = 0;                // Stage-1 per-step retrievals, counted separately
    int peak_context_usage = 0;
    int final_context_usage = 0;  // usage when the final answer was generated
    std::array<int, 3> stage_rounds{0, 0, 0};
    int protocol_retries = 0;
    int wrapped_tool_objects = 0;  // bare-object tool calls tolerated and wrapped
    Violations violations;
    bool aborted = false;
    std::string abort_reason;

    // Inputs the reward engine consumes.
    std::vector<ToolEvent> tool_events;
    std::vector<std::string> added_contents;
    std::vector<MemoryEntry> agent_retrieved;
    std::vector<std::string> final_context_contents;  // live messages at answer time

    RewardBreakdown breakdown;

    std::size_t length() const { return experiences.size(); }
};

// Episode trace: one experience per line, then a trailer line carrying the
// reward breakdown, tool usage, and enough task data for offline metrics.
std::string trace_to_jsonl(const Trajectory& trajectory, const TaskSpec& task);

struct TraceFile {
    std::vector<Experience> experiences;
    nlohmann::ordered_json trailer;
};
Expected<TraceFile> trace_from_jsonl(const std::string& text);

}  // namespace agemem
