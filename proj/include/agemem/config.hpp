#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "agemem/constants.hpp"
#include "agemem/result.hpp"

namespace agemem {

struct BackendSpec {
    std::string kind;  // policy: scripted|tabular|http; judge: mock|http
    std::string path;  // script / policy parameter file
    std::string model = "default";
    double temperature = 0.7;
};

// Endpoint URLs and credentials come from the environment, never from the
// config file: AGEMEM_POLICY_URL, AGEMEM_JUDGE_URL, AGEMEM_EMBED_URL,
// AGEMEM_API_KEY.
struct Config {
    int embedding_dim = kDefaultEmbeddingDim;
    int t_max = kDefaultContextBudget;
    int max_response_tokens = kDefaultResponseBudget;
    int k = kDefaultGroupSize;
    double beta = kDefaultKlBeta;
    double epsilon = kDefaultAdvantageEpsilon;
    double filter_theta = kDefaultFilterThreshold;
    int n_max = kDefaultMaxRounds;
    int retrieve_top_k = kDefaultRetrieveTopK;
    BackendSpec policy_backend{"scripted", "", "default", 0.7};
    BackendSpec judge_backend{"mock", "", "default", 0.0};
    std::string encoder_backend = "hashed";  // hashed | http
    std::uint64_t seed = 0;
    int jobs = 1;

    nlohmann::ordered_json to_json() const;
    static Expected<Config> from_json(const nlohmann::ordered_json& j);
    static Expected<Config> load_file(const std::string& path);
};

std::string env_or(const char* name, const std::string& fallback);

}  // namespace agemem
