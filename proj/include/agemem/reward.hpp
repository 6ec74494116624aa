#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agemem/constants.hpp"
#include "agemem/embedding.hpp"
#include "agemem/trajectory.hpp"

namespace agemem {

class JudgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Maps answers and stored memories to scores in [0,1]. Implementations may
// throw JudgeError; callers flag the affected component instead of guessing.
class Judge {
public:
    virtual ~Judge() = default;

    virtual double score_answer(const std::string& question, const std::string& expected,
                                const std::string& answer) = 0;

    // One batched call per episode: which stored entries are high-quality
    // given the task's query and expected answer.
    virtual std::vector<bool> judge_storage(const TaskSpec& task,
                                            const std::vector<std::string>& entries) = 0;

    virtual double score_relevance(const std::string& query,
                                   const std::vector<MemoryEntry>& retrieved) = 0;

    // Memory Quality metric: stored entries against ground-truth facts.
    virtual double memory_quality(const std::string& question, const std::string& answer,
                                  const std::vector<std::string>& expected_facts,
                                  const std::vector<std::string>& predicted_facts) = 0;
};

// Deterministic judge used by tests and the toy trainer.
//   answer: normalized exact match -> 1.0, containment -> 0.5, else 0.0
//   storage: an entry is high-quality iff it contains any key token
//   relevance: mean cosine(encode(query), entry.embedding), clamped to [0,1]
//   memory quality: fraction of expected facts covered by some stored entry
class MockJudge final : public Judge {
public:
    explicit MockJudge(std::shared_ptr<const TextEncoder> encoder);

    double score_answer(const std::string& question, const std::string& expected,
                        const std::string& answer) override;
    std::vector<bool> judge_storage(const TaskSpec& task,
                                    const std::vector<std::string>& entries) override;
    double score_relevance(const std::string& query,
                           const std::vector<MemoryEntry>& retrieved) override;
    double memory_quality(const std::string& question, const std::string& answer,
                          const std::vector<std::string>& expected_facts,
                          const std::vector<std::string>& predicted_facts) override;

private:
    std::shared_ptr<const TextEncoder> encoder_;
};

struct RewardWeights {
    double task = 1.0;
    double context = 1.0;
    double memory = 1.0;
};

struct PenaltyConstants {
    double no_answer = kNoAnswerPenalty;  // -1.0
    double rounds = kRoundsPenalty;       // -1.0
    double overflow = kOverflowPenalty;   // -0.5
};

// Individual components. Ranges: [0,1] unless stated otherwise.

// Judge score when an answer exists, the no-answer penalty (-1.0) otherwise.
double task_reward(const std::optional<std::string>& answer, const std::string& question,
                   const std::string& expected, Judge& judge,
                   double no_answer_penalty = kNoAnswerPenalty);

// max(0, 1 - tokens_used / token_budget), evaluated at answer time.
double compression_reward(int tokens_used, int token_budget);

// 1 iff a Summary_context or Filter_context call succeeded while usage was
// still within budget.
int preventive_reward(const std::vector<ToolEvent>& events, int token_budget);

// 1 iff every key token appears (case-insensitive substring) in some live
// message at answer time. Empty key lists are vacuously preserved (flagged).
int preservation_reward(const std::vector<std::string>& live_contents,
                        const std::vector<std::string>& key_tokens,
                        std::vector<std::string>* flags = nullptr);

// High-quality fraction of stored entries: N_high / max(1, N_total).
double storage_reward(const std::vector<std::string>& added_contents, const TaskSpec& task,
                      Judge& judge, std::vector<std::string>* flags = nullptr);

// 1 iff any Update_memory or Delete_memory succeeded.
int maintenance_reward(const std::vector<ToolEvent>& events);

// Judge-scored relevance of the agent-retrieved set; 0 when nothing was retrieved.
double relevance_reward(const std::vector<MemoryEntry>& retrieved, const std::string& query,
                        Judge& judge, std::vector<std::string>* flags = nullptr);

struct PenaltyInputs {
    std::array<int, 3> stage_rounds{0, 0, 0};
    int n_max = kDefaultMaxRounds;
    int peak_usage = 0;
    int token_budget = kDefaultContextBudget;
};

// Sum of the rounds and overflow penalties (<= 0).
double penalties(const PenaltyInputs& in, const PenaltyConstants& constants = {});

// Full composite reward with the documented invariants:
//   r_context = (r_compression + r_preventive + r_preservation) / 3
//   r_memory  = (r_storage + r_maintenance + r_relevance) / 3
//   total     = w_task*r_task + w_context*r_context + w_memory*r_memory
//               + p_rounds + p_overflow
RewardBreakdown total_reward(const Trajectory& trajectory, const TaskSpec& task, Judge& judge,
                             int token_budget = kDefaultContextBudget,
                             const RewardWeights& weights = {},
                             const PenaltyConstants& constants = {});

}  // namespace agemem
