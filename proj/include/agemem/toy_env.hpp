#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agemem/episode.hpp"
#include "agemem/grpo.hpp"
#include "agemem/policy.hpp"
#include "agemem/trajectory.hpp"

namespace agemem {

// Desk-scale environment: the Stage-1 stream hides one key fact among noise,
// Stage 2 injects mutually similar distractors, and the Stage-3 answer can
// only be correct when the key fact was stored in Stage 1 and retrieved back
// into the reset context in Stage 3.
struct ToyTaskConfig {
    int noise_facts = 3;
    int distractor_count = 3;
    int n_max = kDefaultMaxRounds;
};

TaskSpec make_key_fact_task(std::uint64_t variant_seed, const ToyTaskConfig& config = {});

// The context_info entry carrying the expected answer.
const std::string& key_fact_of(const TaskSpec& task);

// State decoration for key-fact tasks:
//   stage 1: "saw_key_fact" / "saw_noise"
//   stage 2: "distractor"
//   stage 3: "have_key_fact" once the answer text is live in context
//            (only reachable via LTM retrieval), else "need_answer".
// The answer hint carries the expected answer exactly when it is live.
EpisodeHooks key_fact_hooks();

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

struct ToyTrainConfig {
    int iterations = 1200;
    std::uint64_t seed = 0;
    int group_size = kDefaultGroupSize;
    double beta = kDefaultKlBeta;
    double learning_rate = 0.6;
    double epsilon = kDefaultAdvantageEpsilon;
    int trailing_window = 100;  // episodes
    int jobs = 1;  // rollout parallelism; per-rollout seeds keep results identical
    ToyTaskConfig task;
};

struct IterationStats {
    int iteration = 0;
    double mean_group_reward = 0.0;
    double success_rate = 0.0;
    double j = 0.0;
    double mean_kl = 0.0;
};

struct ToyTrainResult {
    std::vector<IterationStats> curve;
    SoftmaxTabularPolicy policy;
    std::vector<bool> episode_successes;  // chronological, K per iteration
    double trailing_success = 0.0;        // over the last `trailing_window` episodes
    bool diverged = false;
    std::string divergence_reason;
    std::vector<BufferEntry> last_buffer;
};

// On-policy training loop: K rollouts per iteration, group-normalized
// advantages broadcast over whole trajectories, one analytic gradient step
// against a fixed uniform reference. Fully deterministic for a fixed seed.
ToyTrainResult train_toy(const ToyTrainConfig& config);

// "iteration,mean_group_reward,success_rate,J,mean_KL" rows, %.6f formatting.
std::string curve_to_csv(const std::vector<IterationStats>& curve);

// Monte-Carlo success rate of the untrained uniform policy.
double measure_uniform_baseline(int episodes, std::uint64_t seed, const ToyTaskConfig& config = {});

}  // namespace agemem
