#include "agemem/reward.hpp"

#include <algorithm>
#include <cctype>

namespace agemem {

namespace {

std::string normalize(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (std::ispunct(c)) {
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string lower(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

MockJudge::MockJudge(std::shared_ptr<const TextEncoder> encoder) : encoder_(std::move(encoder)) {}

double MockJudge::score_answer(const std::string&, const std::string& expected,
                               const std::string& answer) {
    const std::string a = normalize(answer);
    const std::string e = normalize(expected);
    if (a == e) {
        return a.empty() ? 0.0 : 1.0;
    }
    if (!a.empty() && !e.empty() &&
        (a.find(e) != std::string::npos || e.find(a) != std::string::npos)) {
        return 0.5;
    }
    return 0.0;
}

std::vector<bool> MockJudge::judge_storage(const TaskSpec& task,
                                           const std::vector<std::string>& entries) {
    std::vector<bool> out;
    out.reserve(entries.size());
    for (const std::string& entry : entries) {
        bool high_quality = false;
        for (const std::string& token : task.key_tokens) {
            if (contains_ci(entry, token)) {
                high_quality = true;
                break;
            }
        }
        out.push_back(high_quality);
    }
    return out;
}

double MockJudge::score_relevance(const std::string& query,
                                  const std::vector<MemoryEntry>& retrieved) {
    if (retrieved.empty()) {
        return 0.0;
    }
    const EmbeddingVector q = encoder_->encode(query);
    double sum = 0.0;
    for (const MemoryEntry& entry : retrieved) {
        sum += cosine(q, entry.embedding);
    }
    return std::clamp(sum / static_cast<double>(retrieved.size()), 0.0, 1.0);
}

double MockJudge::memory_quality(const std::string&, const std::string&,
                                 const std::vector<std::string>& expected_facts,
                                 const std::vector<std::string>& predicted_facts) {
    if (expected_facts.empty()) {
        return predicted_facts.empty() ? 1.0 : 0.0;
    }
    int covered = 0;
    for (const std::string& fact : expected_facts) {
        for (const std::string& predicted : predicted_facts) {
            if (contains_ci(predicted, fact) || contains_ci(fact, predicted)) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(expected_facts.size());
}

double task_reward(const std::optional<std::string>& answer, const std::string& question,
                   const std::string& expected, Judge& judge, double no_answer_penalty) {
    if (!answer.has_value()) {
        return no_answer_penalty;
    }
    return std::clamp(judge.score_answer(question, expected, *answer), 0.0, 1.0);
}

double compression_reward(int tokens_used, int token_budget) {
    if (token_budget <= 0) {
        throw std::invalid_argument("compression_reward: token budget must be > 0");
    }
    return std::max(0.0, 1.0 - static_cast<double>(tokens_used) / static_cast<double>(token_budget));
}

int preventive_reward(const std::vector<ToolEvent>& events, int token_budget) {
    for (const ToolEvent& event : events) {
        if (!event.ok) {
            continue;
        }
        if ((event.tool == "Summary_context" || event.tool == "Filter_context") &&
            event.usage_at_call <= token_budget) {
            return 1;
        }
    }
    return 0;
}

int preservation_reward(const std::vector<std::string>& live_contents,
                        const std::vector<std::string>& key_tokens,
                        std::vector<std::string>* flags) {
    if (key_tokens.empty()) {
        if (flags) {
            flags->push_back("vacuous:preservation");
        }
        return 1;
    }
    for (const std::string& token : key_tokens) {
        bool found = false;
        for (const std::string& content : live_contents) {
            if (contains_ci(content, token)) {
                found = true;
                break;
            }
        }
        if (!found) {
            return 0;
        }
    }
    return 1;
}

double storage_reward(const std::vector<std::string>& added_contents, const TaskSpec& task,
                      Judge& judge, std::vector<std::string>* flags) {
    if (added_contents.empty()) {
        return 0.0;
    }
    std::vector<bool> verdicts;
    try {
        verdicts = judge.judge_storage(task, added_contents);
    } catch (const JudgeError&) {
        if (flags) {
            flags->push_back("unscored:storage");
        }
        return 0.0;
    }
    int high = 0;
    for (std::size_t i = 0; i < verdicts.size() && i < added_contents.size(); ++i) {
        if (verdicts[i]) {
            ++high;
        }
    }
    return static_cast<double>(high) /
           static_cast<double>(std::max<std::size_t>(1, added_contents.size()));
}

int maintenance_reward(const std::vector<ToolEvent>& events) {
    for (const ToolEvent& event : events) {
        if (event.ok && (event.tool == "Update_memory" || event.tool == "Delete_memory")) {
            return 1;
        }
    }
    return 0;
}

double relevance_reward(const std::vector<MemoryEntry>& retrieved, const std::string& query,
                        Judge& judge, std::vector<std::string>* flags) {
    if (retrieved.empty()) {
        return 0.0;
    }
    try {
        return std::clamp(judge.score_relevance(query, retrieved), 0.0, 1.0);
    } catch (const JudgeError&) {
        if (flags) {
            flags->push_back("unscored:relevance");
        }
        return 0.0;
    }
}

double penalties(const PenaltyInputs& in, const PenaltyConstants& constants) {
    double total = 0.0;
    const bool rounds_exceeded =
        std::any_of(in.stage_rounds.begin(), in.stage_rounds.end(),
                    [&](int rounds) { return rounds > in.n_max; });
    if (rounds_exceeded) {
        total += constants.rounds;
    }
    if (in.peak_usage > in.token_budget) {
        total += constants.overflow;
    }
    return total;
}

RewardBreakdown total_reward(const Trajectory& trajectory, const TaskSpec& task, Judge& judge,
                             int token_budget, const RewardWeights& weights,
                             const PenaltyConstants& constants) {
    RewardBreakdown b;

    try {
        b.r_task = task_reward(trajectory.answer, task.query, task.expected_answer, judge,
                               constants.no_answer);
    } catch (const JudgeError&) {
        b.flags.push_back("unscored:task");
        b.r_task = 0.0;
    }

    b.r_compression = compression_reward(trajectory.final_context_usage, token_budget);
    b.r_preventive = preventive_reward(trajectory.tool_events, token_budget);
    b.r_preservation =
        preservation_reward(trajectory.final_context_contents, task.key_tokens, &b.flags);
    b.r_context = (b.r_compression + b.r_preventive + b.r_preservation) / 3.0;

    b.r_storage = storage_reward(trajectory.added_contents, task, judge, &b.flags);
    b.r_maintenance = maintenance_reward(trajectory.tool_events);
    b.r_relevance = relevance_reward(trajectory.agent_retrieved, task.query, judge, &b.flags);
    b.r_memory = (b.r_storage + b.r_maintenance + b.r_relevance) / 3.0;

    PenaltyInputs pin;
    pin.stage_rounds = trajectory.stage_rounds;
    pin.n_max = task.n_max;
    pin.peak_usage = trajectory.peak_context_usage;
    pin.token_budget = token_budget;

    const bool rounds_exceeded =
        std::any_of(pin.stage_rounds.begin(), pin.stage_rounds.end(),
                    [&](int rounds) { return rounds > pin.n_max; });
    b.p_rounds = rounds_exceeded ? constants.rounds : 0.0;
    b.p_overflow = (pin.peak_usage > pin.token_budget) ? constants.overflow : 0.0;

    b.total = weights.task * b.r_task + weights.context * b.r_context +
              weights.memory * b.r_memory + b.p_rounds + b.p_overflow;
    return b;
}

}  // namespace agemem
