#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agemem/constants.hpp"
#include "agemem/embedding.hpp"
#include "agemem/policy.hpp"
#include "agemem/reward.hpp"
#include "agemem/stm_context.hpp"

namespace agemem {

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 200;  // doubled per attempt
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatOptions {
    std::string model = "default";
    double temperature = 0.7;
    int max_tokens = kDefaultResponseBudget;
};

struct ChatResult {
    std::string content;
    // Sum of token log-probabilities when the backend reports them. Absent
    // otherwise; never zero-filled.
    std::optional<double> total_logprob;
};

// Minimal chat-completion client. Request body:
//   {"model", "messages": [{"role","content"}], "temperature", "max_tokens"}
// Response: choices[0].message.content, optional choices[0].logprobs.
// Transient failures are retried; exhaustion raises TransportError.
class HttpChatClient {
public:
    HttpChatClient(std::string base_url, std::string path = "/v1/chat/completions",
                   std::string api_key = "", RetryPolicy retry = {});

    ChatResult complete(const std::vector<ChatMessage>& messages, const ChatOptions& options) const;

private:
    std::string base_url_;
    std::string path_;
    std::string api_key_;
    RetryPolicy retry_;
};

// Policy backed by a chat-completion endpoint. The rendered context (system
// prompt plus conversation) is sent as-is; the raw completion text is the turn.
class HttpPolicy final : public Policy {
public:
    HttpPolicy(HttpChatClient client, ChatOptions options);
    TurnSample next_turn(const PolicyState& state) override;

private:
    HttpChatClient client_;
    ChatOptions options_;
};

// Encoder backed by an embedding endpoint: {"input": [texts]} ->
// {"embeddings": [[...]]}. The dimension is negotiated with a probe request
// at construction. Vectors are L2-normalized locally.
class HttpEncoder final : public TextEncoder {
public:
    HttpEncoder(std::string base_url, std::string path = "/embed", RetryPolicy retry = {});

    EmbeddingVector encode(std::string_view text) const override;
    int dimension() const override { return dim_; }

private:
    std::vector<std::vector<double>> request(const std::vector<std::string>& inputs) const;

    std::string base_url_;
    std::string path_;
    RetryPolicy retry_;
    int dim_ = 0;
};

// Judge backed by the chat client. Prompts are the published judge templates;
// the reply is parsed as a bare score in [0,1].
class HttpJudge final : public Judge {
public:
    HttpJudge(HttpChatClient client, ChatOptions options);

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
    double prompt_for_score(const std::string& prompt);

    HttpChatClient client_;
    ChatOptions options_;
};

// Summarizer that sends the published summarization prompt to the chat backend.
Summarizer http_summarizer(HttpChatClient client, ChatOptions options);

// Parses the first number in a judge reply, clamped to [0,1]. Throws
// JudgeError when no number is present.
double parse_judge_score(const std::string& reply);

}  // namespace agemem
