#include "agemem/stm_context.hpp"

#include <cctype>

namespace agemem {

std::string role_name(Role role) {
    switch (role) {
        case Role::kSystem: return "system";
        case Role::kUser: return "user";
        case Role::kAssistant: return "assistant";
        case Role::kTool: return "tool";
    }
    return "user";
}

std::optional<Role> role_from_name(std::string_view name) {
    if (name == "system") return Role::kSystem;
    if (name == "user") return Role::kUser;
    if (name == "assistant") return Role::kAssistant;
    if (name == "tool") return Role::kTool;
    return std::nullopt;
}

int count_tokens(std::string_view text) {
    int words = 0;
    int punct = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else {
            if (!in_word) {
                ++words;
                in_word = true;
            }
            if (std::ispunct(c)) {
                ++punct;
            }
        }
    }
    return words + punct;
}

Message make_message(Role role, std::string content, std::set<std::string> tags) {
    Message m;
    m.role = role;
    m.token_count = count_tokens(content);
    m.content = std::move(content);
    m.tags = std::move(tags);
    return m;
}

std::string extractive_summary(const std::string& joined_text) {
    std::string out;
    std::size_t start = 0;
    while (start <= joined_text.size()) {
        std::size_t end = joined_text.find('\n', start);
        if (end == std::string::npos) {
            end = joined_text.size();
        }
        std::string_view line(joined_text.data() + start, end - start);
        // first sentence = through the first terminator, else the whole line
        std::size_t stop = line.find_first_of(".!?");
        std::string_view sentence = (stop == std::string_view::npos) ? line : line.substr(0, stop + 1);
        while (!sentence.empty() && std::isspace(static_cast<unsigned char>(sentence.front()))) {
            sentence.remove_prefix(1);
        }
        if (!sentence.empty()) {
            if (!out.empty()) {
                out += ' ';
            }
            out.append(sentence);
        }
        if (end == joined_text.size()) {
            break;
        }
        start = end + 1;
    }
    return out;
}

ContextState::ContextState(int token_budget) : budget_(token_budget) {}

void ContextState::append(Message message) {
    usage_ += message.token_count;
    messages_.push_back(std::move(message));
    if (usage_ > peak_usage_) {
        peak_usage_ = usage_;
    }
    if (usage_ > budget_) {
        overflowed_ = true;
    }
}

std::vector<std::string> ContextState::live_contents() const {
    std::vector<std::string> out;
    out.reserve(messages_.size());
    for (const Message& m : messages_) {
        out.push_back(m.content);
    }
    return out;
}

void ContextState::recompute_usage() {
    usage_ = 0;
    for (const Message& m : messages_) {
        usage_ += m.token_count;
    }
    if (usage_ > peak_usage_) {
        peak_usage_ = usage_;
    }
    if (usage_ > budget_) {
        overflowed_ = true;
    }
}

int ContextState::summarize(std::optional<int> last_n_rounds, const Summarizer& summarizer) {
    // Group non-system message indices into rounds: a new round starts at each
    // user message; anything before the first user message forms its own group.
    std::vector<std::vector<std::size_t>> rounds;
    for (std::size_t i = 0; i < messages_.size(); ++i) {
        const Message& m = messages_[i];
        if (m.role == Role::kSystem) {
            continue;
        }
        if (m.role == Role::kUser || rounds.empty()) {
            rounds.emplace_back();
        }
        rounds.back().push_back(i);
    }
    if (rounds.empty()) {
        return 0;
    }

    std::size_t take = rounds.size();
    if (last_n_rounds.has_value()) {
        take = std::min<std::size_t>(static_cast<std::size_t>(*last_n_rounds), rounds.size());
    }
    if (take == 0) {
        return 0;
    }
    const std::size_t first_round = rounds.size() - take;

    std::vector<std::size_t> removed;
    for (std::size_t r = first_round; r < rounds.size(); ++r) {
        removed.insert(removed.end(), rounds[r].begin(), rounds[r].end());
    }
    if (removed.empty()) {
        return 0;
    }

    std::string joined;
    for (std::size_t idx : removed) {
        if (!joined.empty()) {
            joined += '\n';
        }
        joined += messages_[idx].content;
    }
    Message summary = make_message(Role::kTool, summarizer(joined), {"summary"});

    const std::size_t insert_at = removed.front();
    std::vector<Message> rebuilt;
    rebuilt.reserve(messages_.size() - removed.size() + 1);
    std::size_t next_removed = 0;
    for (std::size_t i = 0; i < messages_.size(); ++i) {
        if (next_removed < removed.size() && removed[next_removed] == i) {
            if (i == insert_at) {
                rebuilt.push_back(summary);
            }
            ++next_removed;
            continue;
        }
        rebuilt.push_back(std::move(messages_[i]));
    }
    messages_ = std::move(rebuilt);
    recompute_usage();
    return static_cast<int>(take);
}

int ContextState::filter(const TextEncoder& encoder, const std::string& criteria, double threshold) {
    const EmbeddingVector probe = encoder.encode(criteria);
    std::vector<Message> kept;
    kept.reserve(messages_.size());
    int removed = 0;
    for (Message& m : messages_) {
        if (m.role != Role::kSystem && cosine(probe, encoder.encode(m.content)) >= threshold) {
            ++removed;
            continue;
        }
        kept.push_back(std::move(m));
    }
    messages_ = std::move(kept);
    recompute_usage();
    return removed;
}

int ContextState::insert_retrieved(const std::vector<MemoryEntry>& entries) {
    int inserted = 0;
    for (const MemoryEntry& entry : entries) {
        bool present = false;
        for (const Message& m : messages_) {
            if (!m.memory_id.empty() && m.memory_id == entry.id) {
                present = true;
                break;
            }
        }
        if (present) {
            continue;
        }
        Message m = make_message(Role::kTool, "[" + entry.id + "] " + entry.content, {"retrieved"});
        m.memory_id = entry.id;
        append(std::move(m));
        ++inserted;
    }
    return inserted;
}

void ContextState::reset() {
    std::vector<Message> kept;
    for (Message& m : messages_) {
        if (m.role == Role::kSystem) {
            kept.push_back(std::move(m));
        }
    }
    messages_ = std::move(kept);
    usage_ = 0;
    for (const Message& m : messages_) {
        usage_ += m.token_count;
    }
    // peak_usage_ and overflowed_ survive for reward accounting
}

}  // namespace agemem
