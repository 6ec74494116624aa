#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace agemem {

// Dense text embedding. `values` is L2-normalized unless `is_empty` is set,
// in which case the vector is all zeros (no tokens survived tokenization)
// and is never normalized.
struct EmbeddingVector {
    std::vector<double> values;
    bool is_empty = false;

    std::size_t dimension() const { return values.size(); }
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual EmbeddingVector encode(std::string_view text) const = 0;
    virtual int dimension() const = 0;
};

// Tokens exactly as consumed by HashedEncoder. The rule is part of the
// contract so stored fixtures stay portable:
//   - bytes are ASCII-lowercased,
//   - ASCII punctuation bytes are dropped,
//   - tokens are the maximal runs of non-whitespace bytes that remain
//     (whitespace = space, \t, \n, \v, \f, \r).
std::vector<std::string> hash_tokens(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);

// Deterministic feature-hashing encoder over word unigrams plus adjacent
// bigrams (feature string "tok1 tok2"). Each feature is hashed with FNV-1a
// 64-bit; bucket = hash % dim; sign = -1 when bit 63 is set, else +1. The
// signed counts are L2-normalized.
class HashedEncoder final : public TextEncoder {
public:
    explicit HashedEncoder(int dim = 256);
    EmbeddingVector encode(std::string_view text) const override;
    int dimension() const override { return dim_; }

private:
    int dim_;
};

// Cosine similarity. Empty/zero vectors score 0.0 by convention.
// Throws std::invalid_argument on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace agemem
