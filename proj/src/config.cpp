#include "agemem/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace agemem {

using ordered_json = nlohmann::ordered_json;

ordered_json Config::to_json() const {
    ordered_json j;
    j["embedding_dim"] = embedding_dim;
    j["t_max"] = t_max;
    j["max_response_tokens"] = max_response_tokens;
    j["k"] = k;
    j["beta"] = beta;
    j["epsilon"] = epsilon;
    j["filter_theta"] = filter_theta;
    j["n_max"] = n_max;
    j["retrieve_top_k"] = retrieve_top_k;
    j["policy"] = {{"backend", policy_backend.kind},
                   {"path", policy_backend.path},
                   {"model", policy_backend.model},
                   {"temperature", policy_backend.temperature}};
    j["judge"] = {{"backend", judge_backend.kind},
                  {"path", judge_backend.path},
                  {"model", judge_backend.model},
                  {"temperature", judge_backend.temperature}};
    j["encoder"] = encoder_backend;
    j["seed"] = seed;
    j["jobs"] = jobs;
    return j;
}

Expected<Config> Config::from_json(const ordered_json& j) {
    if (!j.is_object()) {
        return Expected<Config>::failure("config must be a JSON object");
    }
    Config c;
    try {
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.t_max = j.value("t_max", c.t_max);
        c.max_response_tokens = j.value("max_response_tokens", c.max_response_tokens);
        c.k = j.value("k", c.k);
        c.beta = j.value("beta", c.beta);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.filter_theta = j.value("filter_theta", c.filter_theta);
        c.n_max = j.value("n_max", c.n_max);
        c.retrieve_top_k = j.value("retrieve_top_k", c.retrieve_top_k);
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("policy")) {
            const auto& p = j["policy"];
            c.policy_backend.kind = p.value("backend", c.policy_backend.kind);
            c.policy_backend.path = p.value("path", c.policy_backend.path);
            c.policy_backend.model = p.value("model", c.policy_backend.model);
            c.policy_backend.temperature = p.value("temperature", c.policy_backend.temperature);
        }
        if (j.contains("judge")) {
            const auto& p = j["judge"];
            c.judge_backend.kind = p.value("backend", c.judge_backend.kind);
            c.judge_backend.path = p.value("path", c.judge_backend.path);
            c.judge_backend.model = p.value("model", c.judge_backend.model);
            c.judge_backend.temperature = p.value("temperature", c.judge_backend.temperature);
        }
        c.encoder_backend = j.value("encoder", c.encoder_backend);
    } catch (const ordered_json::exception& e) {
        return Expected<Config>::failure(std::string("config json: ") + e.what());
    }
    if (c.embedding_dim < 1 || c.t_max < 1 || c.k < 2 || c.n_max < 1 || c.retrieve_top_k < 1) {
        return Expected<Config>::failure("config values out of range");
    }
    return c;
}

Expected<Config> Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        return Expected<Config>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) {
        return Expected<Config>::failure("invalid JSON in " + path);
    }
    return from_json(j);
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : fallback;
}

}  // namespace agemem
