#pragma once

#include <string>
#include <vector>

#include "agemem/constants.hpp"
#include "agemem/policy.hpp"
#include "agemem/trajectory.hpp"

namespace agemem {

// Group-normalized advantages A_k = (r_k - mean) / (stddev + epsilon), with
// the sample (K-1) standard deviation. Equal rewards yield all zeros.
// Throws std::invalid_argument for fewer than two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     double epsilon = kDefaultAdvantageEpsilon);

struct AdvantagedExperience {
    Experience experience;
    double advantage = 0.0;
};

// The terminal advantage is broadcast to every step of the trajectory,
// Stage-1 and Stage-2 steps included.
std::vector<AdvantagedExperience> broadcast_advantage(const Trajectory& trajectory,
                                                      double terminal_advantage);

struct GroupBatch {
    std::string task_id;
    std::vector<Trajectory> trajectories;
};

// Flattened on-policy buffer entry with the handles a tabular policy needs to
// replay the step distribution.
struct BufferEntry {
    std::string task_id;
    int rollout = 0;
    int step = 0;  // global step within the trajectory
    int stage = 1;
    std::string observation_tag;
    std::string action_label;
    std::optional<double> logp_old;
    double advantage = 0.0;
};

// Deterministic (task, rollout, step) order. Aborted trajectories are dropped
// before group statistics; groups with more than half aborted (or fewer than
// two usable rollouts) are discarded entirely.
std::vector<BufferEntry> build_buffer(const std::vector<GroupBatch>& groups,
                                      double epsilon = kDefaultAdvantageEpsilon);

std::string buffer_to_jsonl(const std::vector<BufferEntry>& buffer);

struct ObjectiveStats {
    double j = 0.0;
    double mean_kl = 0.0;
    int used = 0;
    int skipped = 0;  // entries lacking logp_old or a replayable action
};

// J = (1/|E|) sum[ exp(logp_new - logp_old) * A - beta * KL(state) ] over the
// replayable entries. No ratio clipping.
ObjectiveStats objective(const std::vector<BufferEntry>& buffer,
                         const SoftmaxTabularPolicy& policy,
                         const SoftmaxTabularPolicy& reference, double beta = kDefaultKlBeta);

// One analytic gradient-ascent step on the tabular parameters.
void train_step(SoftmaxTabularPolicy& policy, const std::vector<BufferEntry>& buffer,
                const SoftmaxTabularPolicy& reference, double beta, double learning_rate);

// Exposed for gradient checks: dJ/dtheta accumulated per (feature key, action).
std::map<std::string, std::vector<double>> objective_gradient(
    const std::vector<BufferEntry>& buffer, const SoftmaxTabularPolicy& policy,
    const SoftmaxTabularPolicy& reference, double beta);

}  // namespace agemem
