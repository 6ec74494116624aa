#include "agemem/http_client.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "agemem/prompts.hpp"

namespace agemem {

namespace {

using ordered_json = nlohmann::ordered_json;

// POSTs JSON with bounded retries on transport errors and 5xx statuses.
ordered_json post_json(const std::string& base_url, const std::string& path,
                       const std::string& api_key, const ordered_json& body,
                       const RetryPolicy& retry) {
    std::string last_error;
    for (int attempt = 0; attempt < retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(retry.backoff_ms << (attempt - 1)));
        }
        httplib::Client client(base_url);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }
        auto response = client.Post(path, headers, body.dump(), "application/json");
        if (!response) {
            last_error = "transport error: " + httplib::to_string(response.error());
            continue;
        }
        if (response->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(response->status);
            continue;
        }
        if (response->status != 200) {
            throw TransportError("HTTP " + std::to_string(response->status) + " from " + base_url +
                                 path + ": " + response->body);
        }
        ordered_json parsed = ordered_json::parse(response->body, nullptr, false);
        if (parsed.is_discarded()) {
            last_error = "invalid JSON in response body";
            continue;
        }
        return parsed;
    }
    throw TransportError("request to " + base_url + path + " failed after " +
                         std::to_string(retry.max_attempts) + " attempts: " + last_error);
}

}  // namespace

HttpChatClient::HttpChatClient(std::string base_url, std::string path, std::string api_key,
                               RetryPolicy retry)
    : base_url_(std::move(base_url)), path_(std::move(path)), api_key_(std::move(api_key)),
      retry_(retry) {}

ChatResult HttpChatClient::complete(const std::vector<ChatMessage>& messages,
                                    const ChatOptions& options) const {
    ordered_json body;
    body["model"] = options.model;
    body["messages"] = ordered_json::array();
    for (const ChatMessage& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    body["temperature"] = options.temperature;
    body["max_tokens"] = options.max_tokens;

    const ordered_json response = post_json(base_url_, path_, api_key_, body, retry_);

    ChatResult result;
    try {
        const auto& choice = response.at("choices").at(0);
        result.content = choice.at("message").at("content").get<std::string>();
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
            double total = 0.0;
            bool any = false;
            for (const auto& token : choice["logprobs"]["content"]) {
                if (token.is_object() && token.contains("logprob") && token["logprob"].is_number()) {
                    total += token["logprob"].get<double>();
                    any = true;
                }
            }
            if (any) {
                result.total_logprob = total;
            }
        }
    } catch (const ordered_json::exception& e) {
        throw TransportError(std::string("malformed chat completion response: ") + e.what());
    }
    return result;
}

HttpPolicy::HttpPolicy(HttpChatClient client, ChatOptions options)
    : client_(std::move(client)), options_(std::move(options)) {}

TurnSample HttpPolicy::next_turn(const PolicyState& state) {
    std::vector<ChatMessage> messages;
    if (state.context) {
        for (const Message& m : state.context->messages()) {
            messages.push_back(ChatMessage{role_name(m.role), m.content});
        }
    }
    const ChatResult result = client_.complete(messages, options_);
    TurnSample sample;
    sample.raw_text = result.content;
    sample.logp = result.total_logprob;  // absent stays absent
    return sample;
}

HttpEncoder::HttpEncoder(std::string base_url, std::string path, RetryPolicy retry)
    : base_url_(std::move(base_url)), path_(std::move(path)), retry_(retry) {
    const auto probe = request({"dimension probe"});
    if (probe.empty() || probe[0].empty()) {
        throw TransportError("embedding endpoint returned no vector for the dimension probe");
    }
    dim_ = static_cast<int>(probe[0].size());
}

std::vector<std::vector<double>> HttpEncoder::request(const std::vector<std::string>& inputs) const {
    ordered_json body;
    body["input"] = inputs;
    const ordered_json response = post_json(base_url_, path_, "", body, retry_);
    try {
        return response.at("embeddings").get<std::vector<std::vector<double>>>();
    } catch (const ordered_json::exception& e) {
        throw TransportError(std::string("malformed embedding response: ") + e.what());
    }
}

EmbeddingVector HttpEncoder::encode(std::string_view text) const {
    EmbeddingVector out;
    out.values.assign(static_cast<std::size_t>(dim_), 0.0);
    if (hash_tokens(text).empty()) {
        out.is_empty = true;
        return out;
    }
    const auto vectors = request({std::string(text)});
    if (vectors.empty() || static_cast<int>(vectors[0].size()) != dim_) {
        throw TransportError("embedding endpoint changed dimension mid-run");
    }
    out.values = vectors[0];
    double norm_sq = 0.0;
    for (double v : out.values) {
        norm_sq += v * v;
    }
    if (norm_sq == 0.0) {
        out.is_empty = true;
        return out;
    }
    const double norm = std::sqrt(norm_sq);
    for (double& v : out.values) {
        v /= norm;
    }
    return out;
}

double parse_judge_score(const std::string& reply) {
    const char* p = reply.c_str();
    const char* end = p + reply.size();
    while (p < end) {
        if (std::isdigit(static_cast<unsigned char>(*p)) ||
            (*p == '.' && p + 1 < end && std::isdigit(static_cast<unsigned char>(p[1])))) {
            char* after = nullptr;
            const double value = std::strtod(p, &after);
            if (after != p) {
                return std::min(1.0, std::max(0.0, value));
            }
        }
        ++p;
    }
    throw JudgeError("judge reply carries no score: " + reply);
}

HttpJudge::HttpJudge(HttpChatClient client, ChatOptions options)
    : client_(std::move(client)), options_(std::move(options)) {}

double HttpJudge::prompt_for_score(const std::string& prompt) {
    ChatResult result;
    try {
        result = client_.complete({ChatMessage{"user", prompt}}, options_);
    } catch (const TransportError& e) {
        throw JudgeError(e.what());
    }
    return parse_judge_score(result.content);
}

double HttpJudge::score_answer(const std::string& question, const std::string& expected,
                               const std::string& answer) {
    return prompt_for_score(prompts::render_answer_judge_prompt(question, expected, answer));
}

std::vector<bool> HttpJudge::judge_storage(const TaskSpec& task,
                                           const std::vector<std::string>& entries) {
    if (entries.empty()) {
        return {};
    }
    // One batched call per episode listing every stored entry. The returned
    // score is read as the high-quality proportion and converted to a count.
    const std::string prompt = prompts::render_memory_quality_prompt(
        task.query, task.expected_answer, task.context_info, entries);
    const double proportion = prompt_for_score(prompt);
    const auto high =
        static_cast<std::size_t>(std::lround(proportion * static_cast<double>(entries.size())));
    std::vector<bool> verdicts(entries.size(), false);
    for (std::size_t i = 0; i < std::min(high, entries.size()); ++i) {
        verdicts[i] = true;
    }
    return verdicts;
}

double HttpJudge::score_relevance(const std::string& query,
                                  const std::vector<MemoryEntry>& retrieved) {
    std::vector<std::string> predicted;
    predicted.reserve(retrieved.size());
    for (const MemoryEntry& entry : retrieved) {
        predicted.push_back(entry.content);
    }
    // No dedicated relevance template exists; the memory-quality prompt is
    // reused with the query standing in for the expected-fact side.
    const std::string prompt =
        prompts::render_memory_quality_prompt(query, "", {query}, predicted);
    return prompt_for_score(prompt);
}

double HttpJudge::memory_quality(const std::string& question, const std::string& answer,
                                 const std::vector<std::string>& expected_facts,
                                 const std::vector<std::string>& predicted_facts) {
    return prompt_for_score(
        prompts::render_memory_quality_prompt(question, answer, expected_facts, predicted_facts));
}

Summarizer http_summarizer(HttpChatClient client, ChatOptions options) {
    return [client = std::move(client), options = std::move(options)](const std::string& text) {
        const ChatResult result =
            client.complete({ChatMessage{"user", prompts::render_summarizer_prompt(text)}}, options);
        return result.content;
    };
}

}  // namespace agemem
