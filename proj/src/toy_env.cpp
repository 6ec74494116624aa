#include "agemem/toy_env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "agemem/reward.hpp"

namespace agemem {

namespace {

const std::vector<std::string>& code_words() {
    static const std::vector<std::string> codes = {"omega7", "delta4", "sigma9", "kappa2"};
    return codes;
}

const std::vector<std::string>& noise_pool() {
    static const std::vector<std::string> pool = {
        "the cafeteria serves tomato soup on tuesdays",
        "the office plant needs watering every friday",
        "the parking garage closes at midnight on weekends",
        "the printer on the third floor jams constantly",
        "the lobby music playlist repeats every two hours",
        "the elevator inspection certificate expires next spring",
    };
    return pool;
}

const std::vector<std::string>& distractor_pool() {
    static const std::vector<std::string> pool = {
        "have you heard about the amazing blockchain gadget sale downtown",
        "the amazing blockchain gadget sale has huge discounts this week",
        "do not miss the amazing blockchain gadget sale before it ends",
        "everyone keeps talking about the amazing blockchain gadget sale",
        "the amazing blockchain gadget sale opens early tomorrow morning",
    };
    return pool;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    // splitmix64 over the packed inputs
    std::uint64_t x = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull + c + 0x94d049bb133111ebull;
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

TaskSpec make_key_fact_task(std::uint64_t variant_seed, const ToyTaskConfig& config) {
    std::mt19937_64 rng(mix_seed(variant_seed, 0x6b79666163ull, 0));

    const std::string code = code_words()[rng() % code_words().size()];
    const std::string key_fact = "the launch code for the secret vault is " + code;

    TaskSpec task;
    task.query = "what is the launch code for the secret vault";
    task.expected_answer = code;
    task.key_tokens = {code, "vault"};
    task.n_max = config.n_max;

    std::vector<std::string> noise = noise_pool();
    std::shuffle(noise.begin(), noise.end(), rng);
    const int noise_count = std::min<int>(config.noise_facts, static_cast<int>(noise.size()));
    task.context_info.assign(noise.begin(), noise.begin() + noise_count);
    const std::size_t key_at = rng() % (task.context_info.size() + 1);
    task.context_info.insert(task.context_info.begin() + static_cast<std::ptrdiff_t>(key_at), key_fact);

    for (int i = 0; i < config.distractor_count; ++i) {
        task.distractors.push_back(distractor_pool()[static_cast<std::size_t>(i) % distractor_pool().size()]);
    }
    return task;
}

const std::string& key_fact_of(const TaskSpec& task) {
    for (const std::string& fact : task.context_info) {
        if (contains_ci(fact, task.expected_answer)) {
            return fact;
        }
    }
    throw std::invalid_argument("task has no fact carrying the expected answer");
}

EpisodeHooks key_fact_hooks() {
    EpisodeHooks hooks;
    hooks.decorate_state = [](PolicyState& state, const ContextState& ctx, const MemoryStore&,
                              const TaskSpec& task) {
        switch (state.stage) {
            case 1:
                state.observation_tag =
                    (state.current_message == key_fact_of(task)) ? "saw_key_fact" : "saw_noise";
                break;
            case 2:
                state.observation_tag = "distractor";
                break;
            default: {
                bool have = false;
                for (const Message& m : ctx.messages()) {
                    if (m.role == Role::kUser && m.content == task.query) {
                        continue;  // the question itself does not reveal the code
                    }
                    if (contains_ci(m.content, task.expected_answer)) {
                        have = true;
                        break;
                    }
                }
                state.observation_tag = have ? "have_key_fact" : "need_answer";
                state.answer_hint = have ? task.expected_answer : "";
                break;
            }
        }
    };
    return hooks;
}

ToyTrainResult train_toy(const ToyTrainConfig& config) {
    auto encoder = std::make_shared<HashedEncoder>();
    MockJudge judge(encoder);

    EngineConfig engine_config;
    engine_config.hooks = key_fact_hooks();
    EpisodeEngine engine(encoder, engine_config);

    ToyTrainResult result{.curve = {},
                          .policy = SoftmaxTabularPolicy(tabular_actions(), 1.0, config.seed),
                          .episode_successes = {},
                          .trailing_success = 0.0,
                          .diverged = false,
                          .divergence_reason = {},
                          .last_buffer = {}};
    const SoftmaxTabularPolicy reference = result.policy;  // fixed uniform reference

    for (int iter = 0; iter < config.iterations; ++iter) {
        const TaskSpec task = make_key_fact_task(mix_seed(config.seed, 1, static_cast<std::uint64_t>(iter)),
                                                 config.task);

        auto factory = [&](int rollout) {
            auto policy = std::make_unique<SoftmaxTabularPolicy>(result.policy);
            policy->set_seed(mix_seed(config.seed, static_cast<std::uint64_t>(iter) + 2,
                                      static_cast<std::uint64_t>(rollout)));
            return policy;
        };
        const std::vector<Trajectory> trajectories =
            engine.rollout_group(task, factory, config.group_size, judge, config.jobs);

        double reward_sum = 0.0;
        int completed = 0;
        int successes = 0;
        for (const Trajectory& t : trajectories) {
            if (t.aborted) {
                result.episode_successes.push_back(false);
                continue;
            }
            reward_sum += t.terminal_reward;
            ++completed;
            const bool success = t.answer.has_value() && *t.answer == task.expected_answer;
            result.episode_successes.push_back(success);
            if (success) {
                ++successes;
            }
        }

        GroupBatch group{"keyfact", trajectories};
        const std::vector<BufferEntry> buffer = build_buffer({group}, config.epsilon);
        train_step(result.policy, buffer, reference, config.beta, config.learning_rate);
        const ObjectiveStats stats = objective(buffer, result.policy, reference, config.beta);

        IterationStats row;
        row.iteration = iter;
        row.mean_group_reward = completed > 0 ? reward_sum / completed : 0.0;
        row.success_rate =
            static_cast<double>(successes) / static_cast<double>(trajectories.size());
        row.j = stats.j;
        row.mean_kl = stats.mean_kl;
        result.curve.push_back(row);
        result.last_buffer = buffer;

        bool bad = !std::isfinite(stats.j) || !std::isfinite(stats.mean_kl);
        for (const auto& [key, weights] : result.policy.parameters()) {
            for (double w : weights) {
                if (!std::isfinite(w)) {
                    bad = true;
                }
            }
        }
        if (bad) {
            result.diverged = true;
            result.divergence_reason =
                "non-finite value at iteration " + std::to_string(iter);
            return result;
        }
    }

    const std::size_t window = std::min<std::size_t>(
        static_cast<std::size_t>(config.trailing_window), result.episode_successes.size());
    if (window > 0) {
        int good = 0;
        for (std::size_t i = result.episode_successes.size() - window;
             i < result.episode_successes.size(); ++i) {
            if (result.episode_successes[i]) {
                ++good;
            }
        }
        result.trailing_success = static_cast<double>(good) / static_cast<double>(window);
    }
    return result;
}

std::string curve_to_csv(const std::vector<IterationStats>& curve) {
    std::string out = "iteration,mean_group_reward,success_rate,J,mean_KL\n";
    char line[160];
    for (const IterationStats& row : curve) {
        std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", row.iteration,
                      row.mean_group_reward, row.success_rate, row.j, row.mean_kl);
        out += line;
    }
    return out;
}

double measure_uniform_baseline(int episodes, std::uint64_t seed, const ToyTaskConfig& config) {
    auto encoder = std::make_shared<HashedEncoder>();
    MockJudge judge(encoder);
    EngineConfig engine_config;
    engine_config.hooks = key_fact_hooks();
    EpisodeEngine engine(encoder, engine_config);

    int successes = 0;
    for (int i = 0; i < episodes; ++i) {
        const TaskSpec task =
            make_key_fact_task(mix_seed(seed, 7, static_cast<std::uint64_t>(i)), config);
        SoftmaxTabularPolicy policy(tabular_actions(), 1.0,
                                    mix_seed(seed, 11, static_cast<std::uint64_t>(i)));
        const Trajectory t = engine.run_episode(task, policy, judge);
        if (!t.aborted && t.answer.has_value() && *t.answer == task.expected_answer) {
            ++successes;
        }
    }
    return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0;
}

}  // namespace agemem
