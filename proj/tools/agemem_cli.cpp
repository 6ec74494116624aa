// Operator entry points: run episodes, train the toy policy, evaluate traces,
// inspect stores.
//
// Exit codes: 0 success, 1 criterion/verify failure, 2 invalid input file,
// 3 backend failure, 4 training divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agemem/config.hpp"
#include "agemem/episode.hpp"
#include "agemem/http_client.hpp"
#include "agemem/prompts.hpp"
#include "agemem/toy_env.hpp"

using namespace agemem;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitBackend = 3;
constexpr int kExitDiverged = 4;

bool glob_match(const std::string& pattern, const std::string& text) {
    std::size_t p = 0;
    std::size_t t = 0;
    std::size_t star = std::string::npos;
    std::size_t match = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            match = t;
        } else if (star != std::string::npos) {
            p = star + 1;
            t = ++match;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') {
        ++p;
    }
    return p == pattern.size();
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    const fs::path as_path(pattern);
    const fs::path dir = as_path.has_parent_path() ? as_path.parent_path() : fs::path(".");
    const std::string base = as_path.filename().string();
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && glob_match(base, entry.path().filename().string())) {
            out.push_back(entry.path().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Expected<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return Expected<std::string>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        return false;
    }
    out << text;
    return true;
}

std::unique_ptr<Judge> make_judge(const Config& config) {
    if (config.judge_backend.kind == "http") {
        const std::string url = env_or("AGEMEM_JUDGE_URL", "");
        if (url.empty()) {
            return nullptr;
        }
        ChatOptions options;
        options.model = config.judge_backend.model;
        options.temperature = config.judge_backend.temperature;
        options.max_tokens = config.max_response_tokens;
        return std::make_unique<HttpJudge>(
            HttpChatClient(url, "/v1/chat/completions", env_or("AGEMEM_API_KEY", "")), options);
    }
    return std::make_unique<MockJudge>(std::make_shared<HashedEncoder>());
}

// Table-1 tool labels, in table order.
const std::vector<std::pair<std::string, std::string>>& table_tool_names() {
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"Add", "Add_memory"},           {"Update", "Update_memory"}, {"Delete", "Delete_memory"},
        {"Retrieve", "Retrieve_memory"}, {"Summary", "Summary_context"}, {"Filter", "Filter_context"},
    };
    return rows;
}

int cmd_run_episode(const std::string& task_path, const std::string& policy_spec,
                    const std::string& out_path, const std::string& config_path,
                    std::uint64_t seed_override, bool seed_set) {
    Config config;
    if (!config_path.empty()) {
        auto loaded = Config::load_file(config_path);
        if (!loaded) {
            std::fprintf(stderr, "config: %s\n", loaded.error().c_str());
            return kExitBadInput;
        }
        config = loaded.value();
    }
    if (seed_set) {
        config.seed = seed_override;
    }

    auto task = TaskSpec::load_file(task_path);
    if (!task) {
        std::fprintf(stderr, "task: %s\n", task.error().c_str());
        return kExitBadInput;
    }
    if (task.value().n_max == kDefaultMaxRounds && config.n_max != kDefaultMaxRounds) {
        task.value().n_max = config.n_max;
    }

    std::unique_ptr<Policy> policy;
    const std::size_t colon = policy_spec.find(':');
    const std::string kind = policy_spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : policy_spec.substr(colon + 1);
    if (kind == "scripted") {
        auto loaded = ScriptedPolicy::load_file(arg);
        if (!loaded) {
            std::fprintf(stderr, "policy: %s\n", loaded.error().c_str());
            return kExitBadInput;
        }
        policy = std::make_unique<ScriptedPolicy>(std::move(loaded).value());
    } else if (kind == "tabular") {
        auto loaded = SoftmaxTabularPolicy::load_file(arg);
        if (!loaded) {
            std::fprintf(stderr, "policy: %s\n", loaded.error().c_str());
            return kExitBadInput;
        }
        auto tabular = std::make_unique<SoftmaxTabularPolicy>(std::move(loaded).value());
        tabular->set_seed(config.seed);
        policy = std::move(tabular);
    } else if (kind == "http") {
        const std::string url = env_or("AGEMEM_POLICY_URL", "");
        if (url.empty()) {
            std::fprintf(stderr, "policy: AGEMEM_POLICY_URL is not set\n");
            return kExitBadInput;
        }
        ChatOptions options;
        options.model = config.policy_backend.model;
        options.temperature = config.policy_backend.temperature;
        options.max_tokens = config.max_response_tokens;
        policy = std::make_unique<HttpPolicy>(
            HttpChatClient(url, "/v1/chat/completions", env_or("AGEMEM_API_KEY", "")), options);
    } else {
        std::fprintf(stderr, "policy: unknown backend '%s'\n", kind.c_str());
        return kExitBadInput;
    }

    auto judge = make_judge(config);
    if (!judge) {
        std::fprintf(stderr, "judge: AGEMEM_JUDGE_URL is not set\n");
        return kExitBadInput;
    }

    EngineConfig engine_config;
    engine_config.token_budget = config.t_max;
    engine_config.auto_retrieve_top_k = config.retrieve_top_k;
    engine_config.filter_threshold = config.filter_theta;
    try {
        key_fact_of(task.value());
        engine_config.hooks = key_fact_hooks();  // key-fact style task
    } catch (const std::invalid_argument&) {
        // generic task: default stage tags
    }

    std::shared_ptr<const TextEncoder> encoder;
    if (config.encoder_backend == "http") {
        const std::string url = env_or("AGEMEM_EMBED_URL", "");
        if (url.empty()) {
            std::fprintf(stderr, "encoder: AGEMEM_EMBED_URL is not set\n");
            return kExitBadInput;
        }
        encoder = std::make_shared<HttpEncoder>(url);  // negotiates the dimension
    } else {
        encoder = std::make_shared<HashedEncoder>(config.embedding_dim);
    }
    EpisodeEngine engine(encoder, engine_config);

    const Trajectory trajectory = engine.run_episode(task.value(), *policy, *judge);
    if (trajectory.aborted) {
        std::fprintf(stderr, "episode aborted: %s\n", trajectory.abort_reason.c_str());
        return kExitBackend;
    }

    if (!out_path.empty() && !write_file(out_path, trace_to_jsonl(trajectory, task.value()))) {
        std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
        return kExitBadInput;
    }

    std::printf("answer: %s\n", trajectory.answer ? trajectory.answer->c_str() : "(none)");
    std::printf("reward breakdown:\n%s\n", trajectory.breakdown.to_json().dump(2).c_str());
    std::printf("tool usage (mean calls per episode):\n");
    std::printf("  %-10s %s\n", "Tool", "Calls");
    for (const auto& [label, canonical] : table_tool_names()) {
        std::printf("  %-10s %.2f\n", label.c_str(),
                    static_cast<double>(trajectory.tool_usage.at(canonical)));
    }
    std::printf("  (stage-1 auto-retrievals, counted separately: %d)\n", trajectory.auto_retrievals);
    return kExitOk;
}

int cmd_train_toy(int iterations, std::uint64_t seed, const std::string& out_dir, double lr,
                  int group_size, double beta, int jobs) {
    ToyTrainConfig config;
    config.iterations = iterations;
    config.seed = seed;
    config.learning_rate = lr;
    config.group_size = group_size;
    config.beta = beta;
    config.jobs = jobs;

    if (iterations == 0) {
        const double baseline = measure_uniform_baseline(1000, seed);
        std::printf("baseline-only evaluation: untrained success rate %.4f over 1000 episodes\n",
                    baseline);
        return kExitOk;
    }

    const ToyTrainResult result = train_toy(config);
    if (result.diverged) {
        std::fprintf(stderr, "training diverged: %s\n", result.divergence_reason.c_str());
        return kExitDiverged;
    }

    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (!write_file(out_dir + "/curve.csv", curve_to_csv(result.curve)) ||
            !write_file(out_dir + "/policy.json", result.policy.to_json().dump(2) + "\n") ||
            !write_file(out_dir + "/buffer.jsonl", buffer_to_jsonl(result.last_buffer))) {
            std::fprintf(stderr, "cannot write outputs under %s\n", out_dir.c_str());
            return kExitBadInput;
        }
    }

    std::printf("iterations: %d\n", iterations);
    std::printf("trailing-%d-episode success rate: %.4f\n", config.trailing_window,
                result.trailing_success);
    if (result.trailing_success >= 0.9) {
        std::printf("success criterion met (>= 0.9)\n");
        return kExitOk;
    }
    std::printf("success criterion NOT met (< 0.9)\n");
    return kExitFailure;
}

int cmd_eval(const std::string& traces_glob, const std::string& metric,
             const std::string& out_path, const std::string& config_path) {
    Config config;
    if (!config_path.empty()) {
        auto loaded = Config::load_file(config_path);
        if (!loaded) {
            std::fprintf(stderr, "config: %s\n", loaded.error().c_str());
            return kExitBadInput;
        }
        config = loaded.value();
    }
    const std::vector<std::string> files = expand_glob(traces_glob);
    if (files.empty()) {
        std::fprintf(stderr, "no traces match %s\n", traces_glob.c_str());
        return kExitBadInput;
    }
    auto judge = make_judge(config);
    if (!judge) {
        std::fprintf(stderr, "judge: AGEMEM_JUDGE_URL is not set\n");
        return kExitBadInput;
    }

    ordered_json per_item = ordered_json::array();
    double sum = 0.0;
    std::map<std::string, double> tool_totals;

    for (const std::string& file : files) {
        auto text = read_file(file);
        if (!text) {
            std::fprintf(stderr, "%s\n", text.error().c_str());
            return kExitBadInput;
        }
        auto trace = trace_from_jsonl(text.value());
        if (!trace) {
            std::fprintf(stderr, "%s: %s\n", file.c_str(), trace.error().c_str());
            return kExitBadInput;
        }
        const ordered_json& trailer = trace.value().trailer;
        const ordered_json& task = trailer.at("task");
        double value = 0.0;
        try {
            if (metric == "tokens") {
                value = trailer.at("final_context_usage").get<double>();
            } else if (metric == "tools") {
                double total = 0.0;
                for (auto it = trailer.at("tool_usage").begin(); it != trailer.at("tool_usage").end();
                     ++it) {
                    total += it.value().get<double>();
                    tool_totals[it.key()] += it.value().get<double>();
                }
                value = total;
            } else if (metric == "judge") {
                std::optional<std::string> answer;
                if (!trailer.at("answer").is_null()) {
                    answer = trailer.at("answer").get<std::string>();
                }
                value = task_reward(answer, task.at("query").get<std::string>(),
                                    task.at("expected_answer").get<std::string>(), *judge);
            } else if (metric == "mq") {
                // Supporting facts: context entries carrying a key token (all
                // entries when no key tokens are listed).
                std::vector<std::string> facts;
                const auto key_tokens = task.at("key_tokens").get<std::vector<std::string>>();
                for (const auto& fact : task.at("context_info")) {
                    const std::string f = fact.get<std::string>();
                    bool keyed = key_tokens.empty();
                    for (const std::string& token : key_tokens) {
                        std::string lf = f;
                        std::string lt = token;
                        for (auto& c : lf) c = static_cast<char>(std::tolower((unsigned char)c));
                        for (auto& c : lt) c = static_cast<char>(std::tolower((unsigned char)c));
                        if (lf.find(lt) != std::string::npos) {
                            keyed = true;
                        }
                    }
                    if (keyed) {
                        facts.push_back(f);
                    }
                }
                const std::string answer =
                    trailer.at("answer").is_null() ? "" : trailer.at("answer").get<std::string>();
                value = judge->memory_quality(
                    task.at("query").get<std::string>(), answer, facts,
                    trailer.at("added_contents").get<std::vector<std::string>>());
            } else {
                std::fprintf(stderr, "unknown metric %s\n", metric.c_str());
                return kExitBadInput;
            }
        } catch (const JudgeError& e) {
            std::fprintf(stderr, "judge failure on %s: %s\n", file.c_str(), e.what());
            return kExitBackend;
        } catch (const ordered_json::exception& e) {
            std::fprintf(stderr, "%s: malformed trailer: %s\n", file.c_str(), e.what());
            return kExitBadInput;
        }
        sum += value;
        per_item.push_back({{"trace", file}, {"value", value}});
    }

    ordered_json report;
    report["metric"] = metric;
    report["mean"] = sum / static_cast<double>(files.size());
    report["n"] = files.size();
    report["per_item"] = per_item;
    if (metric == "tools") {
        ordered_json means = ordered_json::object();
        for (const auto& [tool, total] : tool_totals) {
            means[tool] = total / static_cast<double>(files.size());
        }
        report["per_tool_mean"] = means;
    }

    std::printf("%s\n", report.dump(2).c_str());
    if (!out_path.empty() && !write_file(out_path, report.dump(2) + "\n")) {
        std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
        return kExitBadInput;
    }
    return kExitOk;
}

int cmd_memstore(const std::string& action, const std::string& file) {
    auto text = read_file(file);
    if (!text) {
        std::fprintf(stderr, "%s\n", text.error().c_str());
        return kExitBadInput;
    }
    auto encoder = std::make_shared<HashedEncoder>();
    auto store = MemoryStore::load_jsonl(text.value(), encoder);
    if (!store) {
        std::fprintf(stderr, "%s: %s\n", file.c_str(), store.error().c_str());
        return kExitBadInput;
    }

    if (action == "inspect") {
        std::printf("%zu entries\n", store.value().size());
        for (const MemoryEntry* e : store.value().entries_in_order()) {
            std::string preview = e->content.substr(0, 60);
            if (e->content.size() > 60) {
                preview += "...";
            }
            std::printf("%s  type=%s  created=%llu updated=%llu  %s\n", e->id.c_str(),
                        e->memory_type ? e->memory_type->c_str() : "-",
                        static_cast<unsigned long long>(e->created_at),
                        static_cast<unsigned long long>(e->updated_at), preview.c_str());
        }
        return kExitOk;
    }

    // verify: re-encode every content with the default encoder and compare
    int mismatches = 0;
    for (const MemoryEntry* e : store.value().entries_in_order()) {
        const EmbeddingVector expected = encoder->encode(e->content);
        bool same = expected.values.size() == e->embedding.values.size();
        for (std::size_t i = 0; same && i < expected.values.size(); ++i) {
            if (std::abs(expected.values[i] - e->embedding.values[i]) > 1e-9) {
                same = false;
            }
        }
        if (!same) {
            std::printf("verify failure: %s (embedding does not match its content)\n", e->id.c_str());
            ++mismatches;
        }
    }
    if (mismatches > 0) {
        return kExitFailure;
    }
    std::printf("OK, %zu entries verified\n", store.value().size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agemem: unified agent-memory runtime"};
    app.require_subcommand(1);

    // run-episode
    std::string task_path;
    std::string policy_spec;
    std::string out_path;
    std::string config_path;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run-episode", "run one three-stage episode");
    run->add_option("--task", task_path, "task JSON file")->required();
    run->add_option("--policy", policy_spec, "scripted:FILE | tabular:FILE | http")->required();
    run->add_option("--out", out_path, "trace JSONL output path");
    run->add_option("--config", config_path, "config JSON file");
    auto* seed_opt = run->add_option("--seed", seed, "RNG seed override");

    // train-toy
    int iterations = 1200;
    std::uint64_t train_seed = 0;
    std::string train_out;
    double lr = ToyTrainConfig{}.learning_rate;
    int group_size = kDefaultGroupSize;
    double beta = kDefaultKlBeta;
    int jobs = 1;
    auto* train = app.add_subcommand("train-toy", "train the tabular policy on the key-fact task");
    train->add_option("--iterations", iterations, "training iterations")->required();
    train->add_option("--seed", train_seed, "RNG seed");
    train->add_option("--out", train_out, "output directory (curve.csv, policy.json, buffer.jsonl)");
    train->add_option("--lr", lr, "learning rate");
    train->add_option("--k", group_size, "rollouts per task");
    train->add_option("--beta", beta, "KL coefficient");
    train->add_option("--jobs", jobs, "rollout parallelism (serial by default)");

    // eval
    std::string traces_glob;
    std::string metric;
    std::string eval_out;
    std::string eval_config;
    auto* eval = app.add_subcommand("eval", "aggregate metrics over trace files");
    eval->add_option("--traces", traces_glob, "glob for trace JSONL files")->required();
    eval->add_option("--metric", metric, "mq | judge | tokens | tools")->required();
    eval->add_option("--out", eval_out, "report JSON output path");
    eval->add_option("--config", eval_config, "config JSON file");

    // memstore
    std::string action;
    std::string store_file;
    auto* memstore = app.add_subcommand("memstore", "inspect or verify a store file");
    memstore->add_option("action", action, "inspect | verify")
        ->required()
        ->check(CLI::IsMember({"inspect", "verify"}));
    memstore->add_option("file", store_file, "store JSONL file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run_episode(task_path, policy_spec, out_path, config_path, seed,
                                   seed_opt->count() > 0);
        }
        if (train->parsed()) {
            return cmd_train_toy(iterations, train_seed, train_out, lr, group_size, beta, jobs);
        }
        if (eval->parsed()) {
            return cmd_eval(traces_glob, metric, eval_out, eval_config);
        }
        if (memstore->parsed()) {
            return cmd_memstore(action, store_file);
        }
    } catch (const TransportError& e) {
        std::fprintf(stderr, "backend failure: %s\n", e.what());
        return kExitBackend;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitOk;
}
