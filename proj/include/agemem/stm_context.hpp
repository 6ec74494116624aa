#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "agemem/constants.hpp"
#include "agemem/embedding.hpp"
#include "agemem/ltm_store.hpp"

namespace agemem {

enum class Role { kSystem, kUser, kAssistant, kTool };

std::string role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

// Default tokenizer: number of whitespace-separated words plus number of
// ASCII punctuation characters. Exact and portable by construction.
int count_tokens(std::string_view text);

struct Message {
    Role role = Role::kUser;
    std::string content;
    int token_count = 0;  // tokenizer(content) at construction
    std::set<std::string> tags;
    std::string memory_id;  // set for "retrieved" messages, used for dedup
};

Message make_message(Role role, std::string content, std::set<std::string> tags = {});

// Maps the concatenated removed text (messages joined by '\n') to a summary.
using Summarizer = std::function<std::string(const std::string&)>;

// Test/mock summarizer: first sentence of each input line, joined by spaces.
std::string extractive_summary(const std::string& joined_text);

// Short-term context: ordered message list with token accounting. Overflow is
// detected and flagged, never silently truncated. One instance per rollout.
class ContextState {
public:
    explicit ContextState(int token_budget = kDefaultContextBudget);

    void append(Message message);

    int usage() const { return usage_; }
    int peak_usage() const { return peak_usage_; }
    int budget() const { return budget_; }
    bool overflowed() const { return overflowed_; }

    const std::vector<Message>& messages() const { return messages_; }
    std::vector<std::string> live_contents() const;

    // Collapses the selected rounds (nullopt = all) into a single tool-role
    // message tagged "summary", placed where the first removed message was.
    // A round is one user message plus its following assistant/tool messages;
    // system messages are never touched. Returns the number of rounds replaced.
    int summarize(std::optional<int> last_n_rounds, const Summarizer& summarizer);

    // Removes every non-system message with cosine(encode(criteria),
    // encode(content)) >= threshold. Survivors keep their order. Returns the
    // number of removed messages.
    int filter(const TextEncoder& encoder, const std::string& criteria,
               double threshold = kDefaultFilterThreshold);

    // One tool-role message per entry, tagged "retrieved"; entries whose id is
    // already live in the context are skipped. Returns the inserted count.
    int insert_retrieved(const std::vector<MemoryEntry>& entries);

    // Clears everything but system messages. Peak usage and the overflow flag
    // are retained for reward accounting.
    void reset();

private:
    void recompute_usage();

    std::vector<Message> messages_;
    int budget_;
    int usage_ = 0;
    int peak_usage_ = 0;
    bool overflowed_ = false;
};

}  // namespace agemem
