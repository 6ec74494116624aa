#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "agemem/result.hpp"
#include "agemem/stm_context.hpp"

namespace agemem {

// Raised by a backend when no turn can be produced (e.g. network failure
// after retries). The episode engine marks the trajectory aborted.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-step view handed to a policy. The context pointer is a non-owning view
// used by HTTP policies to render the conversation; tabular policies condition
// only on (stage, observation_tag).
struct PolicyState {
    int stage = 1;
    int step = 0;
    std::string observation_tag;
    std::string current_message;  // the fact/distractor injected this step
    std::string query;            // task query (empty before stage 3)
    std::string answer_hint;      // toy-env mechanic: what an ANSWER turn may say
    int context_usage = 0;
    std::size_t store_size = 0;
    const ContextState* context = nullptr;
};

struct TurnSample {
    std::string raw_text;
    // Exact log-probability for tabular policies, backend-reported total for
    // HTTP policies when offered, 0.0 for scripted replay. Never fabricated:
    // absence stays absent.
    std::optional<double> logp;
    std::string action_label;  // tabular alphabet action, empty otherwise
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual TurnSample next_turn(const PolicyState& state) = 0;
};

// Replays a fixed list of raw turns verbatim (logp 0.0 per turn). After
// exhaustion it keeps emitting an empty tool-call turn.
class ScriptedPolicy final : public Policy {
public:
    explicit ScriptedPolicy(std::vector<std::string> turns);
    static Expected<ScriptedPolicy> load_file(const std::string& path);

    TurnSample next_turn(const PolicyState& state) override;

private:
    std::vector<std::string> turns_;
    std::size_t cursor_ = 0;
};

// Action alphabet for the tabular policy. Each action renders a canned,
// protocol-well-formed raw turn so toy training exercises the full
// parse/dispatch path.
const std::vector<std::string>& tabular_actions();

std::string render_action_turn(const std::string& action, const PolicyState& state);

// Softmax policy over a finite action alphabet, keyed by (stage, observation
// tag). Parameters are shared read-only during rollouts and updated only
// between iterations.
class SoftmaxTabularPolicy final : public Policy {
public:
    explicit SoftmaxTabularPolicy(std::vector<std::string> actions = tabular_actions(),
                                  double temperature = 1.0, std::uint64_t seed = 0);

    TurnSample next_turn(const PolicyState& state) override;

    static std::string feature_key(const PolicyState& state);
    static std::string feature_key(int stage, const std::string& observation_tag);

    // Missing keys behave as all-zero logits (uniform distribution).
    std::vector<double> distribution(const std::string& key) const;
    double logprob(const std::string& key, const std::string& action) const;
    double logprob_at(const std::string& key, std::size_t action_index) const;

    // Exact discrete KL(this || reference) at one state.
    double kl_to(const SoftmaxTabularPolicy& reference, const std::string& key) const;

    const std::vector<std::string>& actions() const { return actions_; }
    std::size_t action_index(const std::string& action) const;  // throws on unknown action
    double temperature() const { return temperature_; }

    double weight(const std::string& key, std::size_t action_index) const;
    void add_weight(const std::string& key, std::size_t action_index, double delta);
    const std::map<std::string, std::vector<double>>& parameters() const { return theta_; }

    void set_seed(std::uint64_t seed);

    nlohmann::ordered_json to_json() const;
    static Expected<SoftmaxTabularPolicy> from_json(const nlohmann::ordered_json& j);
    static Expected<SoftmaxTabularPolicy> load_file(const std::string& path);
    Expected<bool> save_file(const std::string& path) const;

private:
    std::vector<std::string> actions_;
    double temperature_;
    std::map<std::string, std::vector<double>> theta_;
    std::mt19937_64 rng_;
};

double kl(const SoftmaxTabularPolicy& policy, const SoftmaxTabularPolicy& reference,
          const std::string& key);

}  // namespace agemem
