#include "agemem/grpo.hpp"

#include <cmath>
#include <stdexcept>

namespace agemem {

std::vector<double> group_advantages(const std::vector<double>& rewards, double epsilon) {
    const std::size_t k = rewards.size();
    if (k < 2) {
        throw std::invalid_argument("group_advantages: need at least two rewards");
    }
    double mean = 0.0;
    for (double r : rewards) {
        mean += r;
    }
    mean /= static_cast<double>(k);

    double ss = 0.0;
    for (double r : rewards) {
        ss += (r - mean) * (r - mean);
    }
    const double sigma = std::sqrt(ss / static_cast<double>(k - 1));

    std::vector<double> advantages(k);
    for (std::size_t i = 0; i < k; ++i) {
        advantages[i] = (rewards[i] - mean) / (sigma + epsilon);
    }
    return advantages;
}

std::vector<AdvantagedExperience> broadcast_advantage(const Trajectory& trajectory,
                                                      double terminal_advantage) {
    std::vector<AdvantagedExperience> out;
    out.reserve(trajectory.experiences.size());
    for (const Experience& e : trajectory.experiences) {
        out.push_back(AdvantagedExperience{e, terminal_advantage});
    }
    return out;
}

std::vector<BufferEntry> build_buffer(const std::vector<GroupBatch>& groups, double epsilon) {
    std::vector<BufferEntry> buffer;
    for (const GroupBatch& group : groups) {
        std::vector<const Trajectory*> usable;
        std::size_t aborted = 0;
        for (const Trajectory& t : group.trajectories) {
            if (t.aborted) {
                ++aborted;
            } else {
                usable.push_back(&t);
            }
        }
        if (usable.size() < 2 || aborted * 2 > group.trajectories.size()) {
            continue;
        }
        std::vector<double> rewards;
        rewards.reserve(usable.size());
        for (const Trajectory* t : usable) {
            rewards.push_back(t->terminal_reward);
        }
        const std::vector<double> advantages = group_advantages(rewards, epsilon);

        for (std::size_t k = 0; k < usable.size(); ++k) {
            const Trajectory& t = *usable[k];
            int step = 0;
            for (const Experience& e : t.experiences) {
                BufferEntry entry;
                entry.task_id = group.task_id;
                entry.rollout = static_cast<int>(k);
                entry.step = step++;
                entry.stage = e.stage;
                entry.observation_tag = e.observation_tag;
                entry.action_label = e.action_label;
                entry.logp_old = e.logp_old;
                entry.advantage = advantages[k];
                buffer.push_back(std::move(entry));
            }
        }
    }
    return buffer;
}

std::string buffer_to_jsonl(const std::vector<BufferEntry>& buffer) {
    std::string out;
    for (const BufferEntry& e : buffer) {
        nlohmann::ordered_json j;
        j["task_id"] = e.task_id;
        j["rollout"] = e.rollout;
        j["step"] = e.step;
        j["stage"] = e.stage;
        j["observation_tag"] = e.observation_tag;
        j["action_label"] = e.action_label;
        if (e.logp_old.has_value()) {
            j["logp_old"] = *e.logp_old;
        } else {
            j["logp_old"] = nullptr;
        }
        j["advantage"] = e.advantage;
        out += j.dump();
        out += '\n';
    }
    return out;
}

ObjectiveStats objective(const std::vector<BufferEntry>& buffer,
                         const SoftmaxTabularPolicy& policy,
                         const SoftmaxTabularPolicy& reference, double beta) {
    ObjectiveStats stats;
    double sum = 0.0;
    double kl_sum = 0.0;
    for (const BufferEntry& e : buffer) {
        if (!e.logp_old.has_value() || e.action_label.empty()) {
            ++stats.skipped;
            continue;
        }
        const std::string key = SoftmaxTabularPolicy::feature_key(e.stage, e.observation_tag);
        const double logp_new = policy.logprob(key, e.action_label);
        const double ratio = std::exp(logp_new - *e.logp_old);
        const double kl_term = policy.kl_to(reference, key);
        sum += ratio * e.advantage - beta * kl_term;
        kl_sum += kl_term;
        ++stats.used;
    }
    if (stats.used > 0) {
        stats.j = sum / static_cast<double>(stats.used);
        stats.mean_kl = kl_sum / static_cast<double>(stats.used);
    }
    return stats;
}

std::map<std::string, std::vector<double>> objective_gradient(
    const std::vector<BufferEntry>& buffer, const SoftmaxTabularPolicy& policy,
    const SoftmaxTabularPolicy& reference, double beta) {
    std::map<std::string, std::vector<double>> grad;
    const std::size_t n_actions = policy.actions().size();
    const double inv_temp = 1.0 / policy.temperature();

    int used = 0;
    for (const BufferEntry& e : buffer) {
        if (!e.logp_old.has_value() || e.action_label.empty()) {
            continue;
        }
        ++used;
    }
    if (used == 0) {
        return grad;
    }
    const double scale = 1.0 / static_cast<double>(used);

    for (const BufferEntry& e : buffer) {
        if (!e.logp_old.has_value() || e.action_label.empty()) {
            continue;
        }
        const std::string key = SoftmaxTabularPolicy::feature_key(e.stage, e.observation_tag);
        const std::size_t a = policy.action_index(e.action_label);
        const std::vector<double> pi = policy.distribution(key);
        const std::vector<double> ref = reference.distribution(key);
        const double ratio = std::exp(policy.logprob_at(key, a) - *e.logp_old);

        double kl_value = 0.0;
        for (std::size_t b = 0; b < n_actions; ++b) {
            if (pi[b] > 0.0) {
                kl_value += pi[b] * (std::log(pi[b]) - std::log(ref[b]));
            }
        }

        auto it = grad.find(key);
        if (it == grad.end()) {
            it = grad.emplace(key, std::vector<double>(n_actions, 0.0)).first;
        }
        for (std::size_t b = 0; b < n_actions; ++b) {
            // d(rho)/dtheta_b = rho * (delta_ab - pi_b) / temp
            const double dratio = ratio * ((b == a ? 1.0 : 0.0) - pi[b]) * inv_temp;
            // dKL/dtheta_b = pi_b * (log(pi_b/ref_b) - KL) / temp
            const double dkl = pi[b] > 0.0
                                   ? pi[b] * ((std::log(pi[b]) - std::log(ref[b])) - kl_value) * inv_temp
                                   : 0.0;
            it->second[b] += scale * (e.advantage * dratio - beta * dkl);
        }
    }
    return grad;
}

void train_step(SoftmaxTabularPolicy& policy, const std::vector<BufferEntry>& buffer,
                const SoftmaxTabularPolicy& reference, double beta, double learning_rate) {
    const auto grad = objective_gradient(buffer, policy, reference, beta);
    for (const auto& [key, values] : grad) {
        for (std::size_t b = 0; b < values.size(); ++b) {
            policy.add_weight(key, b, learning_rate * values[b]);
        }
    }
}

}  // namespace agemem
