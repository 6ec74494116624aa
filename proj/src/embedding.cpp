#include "agemem/embedding.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace agemem {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<std::string> hash_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            continue;
        }
        if (std::ispunct(c)) {
            continue;
        }
        current.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!current.empty()) {
        tokens.push_back(current);
    }
    return tokens;
}

HashedEncoder::HashedEncoder(int dim) : dim_(dim) {
    if (dim_ < 1) {
        throw std::invalid_argument("embedding dimension must be >= 1");
    }
}

EmbeddingVector HashedEncoder::encode(std::string_view text) const {
    EmbeddingVector out;
    out.values.assign(static_cast<std::size_t>(dim_), 0.0);

    const std::vector<std::string> tokens = hash_tokens(text);
    if (tokens.empty()) {
        out.is_empty = true;
        return out;
    }

    auto accumulate = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a64(feature);
        const std::size_t bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
        const double sign = (h >> 63) ? -1.0 : 1.0;
        out.values[bucket] += sign;
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        accumulate(tokens[i]);
        if (i + 1 < tokens.size()) {
            accumulate(tokens[i] + " " + tokens[i + 1]);
        }
    }

    double norm_sq = 0.0;
    for (double v : out.values) {
        norm_sq += v * v;
    }
    if (norm_sq == 0.0) {
        // Signed counts can cancel exactly; treat like empty input rather
        // than dividing by zero.
        out.is_empty = true;
        return out;
    }
    const double norm = std::sqrt(norm_sq);
    for (double& v : out.values) {
        v /= norm;
    }
    return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw std::invalid_argument("cosine: dimension mismatch");
    }
    if (a.is_empty || b.is_empty) {
        return 0.0;
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace agemem
