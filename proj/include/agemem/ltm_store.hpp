#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agemem/embedding.hpp"
#include "agemem/result.hpp"

namespace agemem {

struct MemoryEntry {
    std::string id;
    std::string content;
    EmbeddingVector embedding;  // encode(content), re-encoded on update
    std::map<std::string, std::string> metadata;
    std::optional<std::string> memory_type;
    std::uint64_t created_at = 0;  // logical step counters, not wall clock
    std::uint64_t updated_at = 0;
};

struct RetrievedEntry {
    MemoryEntry entry;
    double score = 0.0;
};

// Persistent long-term memory store. Ids are never reused after deletion.
// One store instance is owned by a single rollout; no shared mutation.
class MemoryStore {
public:
    explicit MemoryStore(std::shared_ptr<const TextEncoder> encoder);

    // Returns the new entry id, or a tool error ("empty content").
    Expected<std::string> add(const std::string& content,
                              std::map<std::string, std::string> metadata = {},
                              std::optional<std::string> memory_type = std::nullopt);

    // Replaces content (re-encoding it) and, when given, metadata.
    Expected<MemoryEntry> update(const std::string& id, const std::string& content,
                                 std::optional<std::map<std::string, std::string>> metadata = std::nullopt);

    // Deletion demands confirmation; refusals leave the entry live.
    Expected<bool> remove(const std::string& id, bool confirmation);

    // Top-k by cosine(encode(query), entry.embedding), descending, ties broken
    // by insertion order. metadata_filter keeps entries whose metadata contains
    // every given key/value pair. Empty store yields an empty list.
    std::vector<RetrievedEntry> retrieve(const std::string& query, int top_k = 3,
                                         const std::map<std::string, std::string>& metadata_filter = {}) const;

    const MemoryEntry* find(const std::string& id) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::vector<const MemoryEntry*> entries_in_order() const;

    // JSONL persistence, one object per line with fields
    // id, content, embedding, metadata, memory_type, created_at, updated_at.
    std::string save_jsonl() const;
    static Expected<MemoryStore> load_jsonl(const std::string& text,
                                            std::shared_ptr<const TextEncoder> encoder);

    Expected<bool> save_file(const std::string& path) const;
    static Expected<MemoryStore> load_file(const std::string& path,
                                           std::shared_ptr<const TextEncoder> encoder);

    const TextEncoder& encoder() const { return *encoder_; }
    std::shared_ptr<const TextEncoder> encoder_ptr() const { return encoder_; }

private:
    std::string next_id();

    std::shared_ptr<const TextEncoder> encoder_;
    std::map<std::string, MemoryEntry> entries_;
    std::vector<std::string> insertion_order_;  // live ids, in add order
    std::uint64_t id_counter_ = 0;
    std::uint64_t clock_ = 0;
};

}  // namespace agemem
