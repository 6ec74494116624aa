#include "agemem/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agemem {

using ordered_json = nlohmann::ordered_json;

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> turns) : turns_(std::move(turns)) {}

Expected<ScriptedPolicy> ScriptedPolicy::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        return Expected<ScriptedPolicy>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("turns") || !j["turns"].is_array()) {
        return Expected<ScriptedPolicy>::failure("script file must be {\"turns\": [\"...\"]}");
    }
    std::vector<std::string> turns;
    for (const auto& t : j["turns"]) {
        if (!t.is_string()) {
            return Expected<ScriptedPolicy>::failure("script turns must be strings");
        }
        turns.push_back(t.get<std::string>());
    }
    return ScriptedPolicy(std::move(turns));
}

TurnSample ScriptedPolicy::next_turn(const PolicyState&) {
    TurnSample sample;
    sample.logp = 0.0;
    if (cursor_ < turns_.size()) {
        sample.raw_text = turns_[cursor_++];
    } else {
        sample.raw_text = "<think>no further scripted turns</think><tool_call>[]</tool_call>";
    }
    return sample;
}

const std::vector<std::string>& tabular_actions() {
    static const std::vector<std::string> actions = {
        "ADD_KEY", "ADD_NOISE", "SKIP", "FILTER", "SUMMARIZE", "RETRIEVE", "ANSWER",
    };
    return actions;
}

std::string render_action_turn(const std::string& action, const PolicyState& state) {
    auto tool_turn = [](const std::string& think, const ordered_json& calls) {
        return "<think>" + think + "</think><tool_call>" + calls.dump() + "</tool_call>";
    };

    if (action == "ADD_KEY") {
        ordered_json calls = ordered_json::array();
        calls.push_back({{"name", "Add_memory"},
                         {"arguments", {{"content", state.current_message}}}});
        return tool_turn("this looks worth keeping", calls);
    }
    if (action == "ADD_NOISE") {
        ordered_json calls = ordered_json::array();
        calls.push_back({{"name", "Add_memory"},
                         {"arguments", {{"content", "random thought about the weather today"}}}});
        return tool_turn("jotting down a stray thought", calls);
    }
    if (action == "SKIP") {
        return "<think>nothing to do here</think><tool_call>[]</tool_call>";
    }
    if (action == "FILTER") {
        ordered_json calls = ordered_json::array();
        const std::string criteria =
            state.current_message.empty() ? "irrelevant chatter" : state.current_message;
        calls.push_back({{"name", "Filter_context"}, {"arguments", {{"criteria", criteria}}}});
        return tool_turn("clearing out noise", calls);
    }
    if (action == "SUMMARIZE") {
        ordered_json calls = ordered_json::array();
        calls.push_back({{"name", "Summary_context"}, {"arguments", {{"span", "all"}}}});
        return tool_turn("compressing the conversation", calls);
    }
    if (action == "RETRIEVE") {
        ordered_json calls = ordered_json::array();
        const std::string query = state.query.empty() ? state.current_message : state.query;
        calls.push_back({{"name", "Retrieve_memory"},
                         {"arguments", {{"query", query}, {"top_k", 3}}}});
        return tool_turn("checking long-term memory", calls);
    }
    if (action == "ANSWER") {
        const std::string answer = state.answer_hint.empty() ? "I do not know" : state.answer_hint;
        return "<think>ready to answer</think><answer>" + answer + "</answer>";
    }
    throw std::invalid_argument("unknown tabular action: " + action);
}

SoftmaxTabularPolicy::SoftmaxTabularPolicy(std::vector<std::string> actions, double temperature,
                                           std::uint64_t seed)
    : actions_(std::move(actions)), temperature_(temperature), rng_(seed) {
    if (actions_.empty()) {
        throw std::invalid_argument("tabular policy needs at least one action");
    }
    if (temperature_ <= 0.0) {
        throw std::invalid_argument("temperature must be > 0");
    }
}

std::string SoftmaxTabularPolicy::feature_key(const PolicyState& state) {
    return feature_key(state.stage, state.observation_tag);
}

std::string SoftmaxTabularPolicy::feature_key(int stage, const std::string& observation_tag) {
    return std::to_string(stage) + "|" + observation_tag;
}

std::vector<double> SoftmaxTabularPolicy::distribution(const std::string& key) const {
    std::vector<double> logits(actions_.size(), 0.0);
    auto it = theta_.find(key);
    if (it != theta_.end()) {
        logits = it->second;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double& l : logits) {
        l /= temperature_;
        max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (double& l : logits) {
        l = std::exp(l - max_logit);
        z += l;
    }
    for (double& l : logits) {
        l /= z;
    }
    return logits;
}

double SoftmaxTabularPolicy::logprob_at(const std::string& key, std::size_t action_index) const {
    if (action_index >= actions_.size()) {
        throw std::out_of_range("action index out of range");
    }
    std::vector<double> logits(actions_.size(), 0.0);
    auto it = theta_.find(key);
    if (it != theta_.end()) {
        logits = it->second;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double& l : logits) {
        l /= temperature_;
        max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (double l : logits) {
        z += std::exp(l - max_logit);
    }
    return logits[action_index] - max_logit - std::log(z);
}

double SoftmaxTabularPolicy::logprob(const std::string& key, const std::string& action) const {
    return logprob_at(key, action_index(action));
}

std::size_t SoftmaxTabularPolicy::action_index(const std::string& action) const {
    auto it = std::find(actions_.begin(), actions_.end(), action);
    if (it == actions_.end()) {
        throw std::invalid_argument("unknown action: " + action);
    }
    return static_cast<std::size_t>(it - actions_.begin());
}

double SoftmaxTabularPolicy::kl_to(const SoftmaxTabularPolicy& reference, const std::string& key) const {
    const std::vector<double> p = distribution(key);
    const std::vector<double> q = reference.distribution(key);
    if (p.size() != q.size()) {
        throw std::invalid_argument("kl: action alphabets differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            sum += p[i] * (std::log(p[i]) - std::log(q[i]));
        }
    }
    return std::max(0.0, sum);
}

double SoftmaxTabularPolicy::weight(const std::string& key, std::size_t action_index) const {
    auto it = theta_.find(key);
    if (it == theta_.end()) {
        return 0.0;
    }
    return it->second.at(action_index);
}

void SoftmaxTabularPolicy::add_weight(const std::string& key, std::size_t action_index, double delta) {
    auto it = theta_.find(key);
    if (it == theta_.end()) {
        it = theta_.emplace(key, std::vector<double>(actions_.size(), 0.0)).first;
    }
    it->second.at(action_index) += delta;
}

void SoftmaxTabularPolicy::set_seed(std::uint64_t seed) {
    rng_.seed(seed);
}

TurnSample SoftmaxTabularPolicy::next_turn(const PolicyState& state) {
    const std::string key = feature_key(state);
    const std::vector<double> probs = distribution(key);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng_);
    double cumulative = 0.0;
    std::size_t chosen = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) {
            chosen = i;
            break;
        }
    }
    TurnSample sample;
    sample.action_label = actions_[chosen];
    sample.raw_text = render_action_turn(sample.action_label, state);
    sample.logp = logprob_at(key, chosen);
    return sample;
}

ordered_json SoftmaxTabularPolicy::to_json() const {
    ordered_json j;
    j["actions"] = actions_;
    j["temperature"] = temperature_;
    ordered_json weights = ordered_json::object();
    for (const auto& [key, values] : theta_) {
        weights[key] = values;
    }
    j["weights"] = weights;
    return j;
}

Expected<SoftmaxTabularPolicy> SoftmaxTabularPolicy::from_json(const ordered_json& j) {
    if (!j.is_object() || !j.contains("actions") || !j.contains("weights")) {
        return Expected<SoftmaxTabularPolicy>::failure("policy json needs actions and weights");
    }
    try {
        SoftmaxTabularPolicy policy(j["actions"].get<std::vector<std::string>>(),
                                    j.value("temperature", 1.0));
        for (auto it = j["weights"].begin(); it != j["weights"].end(); ++it) {
            auto values = it.value().get<std::vector<double>>();
            if (values.size() != policy.actions_.size()) {
                return Expected<SoftmaxTabularPolicy>::failure("weight row size mismatch at " + it.key());
            }
            policy.theta_[it.key()] = std::move(values);
        }
        return policy;
    } catch (const ordered_json::exception& e) {
        return Expected<SoftmaxTabularPolicy>::failure(std::string("policy json: ") + e.what());
    }
}

Expected<SoftmaxTabularPolicy> SoftmaxTabularPolicy::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        return Expected<SoftmaxTabularPolicy>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) {
        return Expected<SoftmaxTabularPolicy>::failure("invalid JSON in " + path);
    }
    return from_json(j);
}

Expected<bool> SoftmaxTabularPolicy::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        return Expected<bool>::failure("cannot open " + path + " for writing");
    }
    out << to_json().dump(2) << '\n';
    return true;
}

double kl(const SoftmaxTabularPolicy& policy, const SoftmaxTabularPolicy& reference,
          const std::string& key) {
    return policy.kl_to(reference, key);
}

}  // namespace agemem
