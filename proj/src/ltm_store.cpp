#include "agemem/ltm_store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace agemem {

using ordered_json = nlohmann::ordered_json;

MemoryStore::MemoryStore(std::shared_ptr<const TextEncoder> encoder) : encoder_(std::move(encoder)) {
    if (!encoder_) {
        throw std::invalid_argument("MemoryStore requires an encoder");
    }
}

std::string MemoryStore::next_id() {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "mem_%08llx", static_cast<unsigned long long>(id_counter_++));
    return buf;
}

Expected<std::string> MemoryStore::add(const std::string& content,
                                       std::map<std::string, std::string> metadata,
                                       std::optional<std::string> memory_type) {
    if (content.empty()) {
        return Expected<std::string>::failure("empty content");
    }
    MemoryEntry entry;
    entry.id = next_id();
    entry.content = content;
    entry.embedding = encoder_->encode(content);
    entry.metadata = std::move(metadata);
    entry.memory_type = std::move(memory_type);
    entry.created_at = clock_;
    entry.updated_at = clock_;
    ++clock_;
    insertion_order_.push_back(entry.id);
    const std::string id = entry.id;
    entries_.emplace(id, std::move(entry));
    return id;
}

Expected<MemoryEntry> MemoryStore::update(const std::string& id, const std::string& content,
                                          std::optional<std::map<std::string, std::string>> metadata) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        return Expected<MemoryEntry>::failure("memory not found");
    }
    if (content.empty()) {
        return Expected<MemoryEntry>::failure("empty content");
    }
    MemoryEntry& entry = it->second;
    entry.content = content;
    entry.embedding = encoder_->encode(content);
    if (metadata.has_value()) {
        entry.metadata = std::move(*metadata);
    }
    entry.updated_at = clock_++;
    return entry;
}

Expected<bool> MemoryStore::remove(const std::string& id, bool confirmation) {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        return Expected<bool>::failure("memory not found");
    }
    if (!confirmation) {
        return Expected<bool>::failure("confirmation required");
    }
    entries_.erase(it);
    insertion_order_.erase(std::remove(insertion_order_.begin(), insertion_order_.end(), id),
                           insertion_order_.end());
    ++clock_;
    return true;
}

std::vector<RetrievedEntry> MemoryStore::retrieve(const std::string& query, int top_k,
                                                  const std::map<std::string, std::string>& metadata_filter) const {
    if (top_k < 1) {
        throw std::invalid_argument("retrieve: top_k must be >= 1");
    }
    const EmbeddingVector q = encoder_->encode(query);

    std::vector<RetrievedEntry> scored;
    scored.reserve(entries_.size());
    for (const std::string& id : insertion_order_) {
        const MemoryEntry& entry = entries_.at(id);
        bool keep = true;
        for (const auto& [k, v] : metadata_filter) {
            auto mit = entry.metadata.find(k);
            if (mit == entry.metadata.end() || mit->second != v) {
                keep = false;
                break;
            }
        }
        if (!keep) {
            continue;
        }
        scored.push_back(RetrievedEntry{entry, cosine(q, entry.embedding)});
    }
    // stable_sort keeps insertion order between equal scores
    std::stable_sort(scored.begin(), scored.end(),
                     [](const RetrievedEntry& a, const RetrievedEntry& b) { return a.score > b.score; });
    if (scored.size() > static_cast<std::size_t>(top_k)) {
        scored.resize(static_cast<std::size_t>(top_k));
    }
    return scored;
}

const MemoryEntry* MemoryStore::find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const MemoryEntry*> MemoryStore::entries_in_order() const {
    std::vector<const MemoryEntry*> out;
    out.reserve(insertion_order_.size());
    for (const std::string& id : insertion_order_) {
        out.push_back(&entries_.at(id));
    }
    return out;
}

std::string MemoryStore::save_jsonl() const {
    std::ostringstream out;
    for (const MemoryEntry* entry : entries_in_order()) {
        ordered_json j;
        j["id"] = entry->id;
        j["content"] = entry->content;
        j["embedding"] = entry->embedding.values;
        j["metadata"] = entry->metadata;
        if (entry->memory_type.has_value()) {
            j["memory_type"] = *entry->memory_type;
        } else {
            j["memory_type"] = nullptr;
        }
        j["created_at"] = entry->created_at;
        j["updated_at"] = entry->updated_at;
        out << j.dump() << '\n';
    }
    return out.str();
}

Expected<MemoryStore> MemoryStore::load_jsonl(const std::string& text,
                                              std::shared_ptr<const TextEncoder> encoder) {
    MemoryStore store(std::move(encoder));
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            return Expected<MemoryStore>::failure("line " + std::to_string(line_no) + ": invalid JSON");
        }
        MemoryEntry entry;
        try {
            entry.id = j.at("id").get<std::string>();
            entry.content = j.at("content").get<std::string>();
            entry.embedding.values = j.at("embedding").get<std::vector<double>>();
            entry.embedding.is_empty =
                std::all_of(entry.embedding.values.begin(), entry.embedding.values.end(),
                            [](double v) { return v == 0.0; });
            entry.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
            if (j.at("memory_type").is_null()) {
                entry.memory_type = std::nullopt;
            } else {
                entry.memory_type = j.at("memory_type").get<std::string>();
            }
            entry.created_at = j.at("created_at").get<std::uint64_t>();
            entry.updated_at = j.at("updated_at").get<std::uint64_t>();
        } catch (const ordered_json::exception& e) {
            return Expected<MemoryStore>::failure("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (store.entries_.count(entry.id)) {
            return Expected<MemoryStore>::failure("line " + std::to_string(line_no) + ": duplicate id " + entry.id);
        }
        store.clock_ = std::max(store.clock_, std::max(entry.created_at, entry.updated_at) + 1);
        // Restore the id counter so freed ids are never handed out again.
        if (entry.id.rfind("mem_", 0) == 0) {
            const std::uint64_t n = std::strtoull(entry.id.c_str() + 4, nullptr, 16);
            store.id_counter_ = std::max(store.id_counter_, n + 1);
        }
        store.insertion_order_.push_back(entry.id);
        store.entries_.emplace(entry.id, std::move(entry));
    }
    store.id_counter_ = std::max(store.id_counter_, static_cast<std::uint64_t>(store.entries_.size()));
    return store;
}

Expected<bool> MemoryStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        return Expected<bool>::failure("cannot open " + path + " for writing");
    }
    out << save_jsonl();
    return true;
}

Expected<MemoryStore> MemoryStore::load_file(const std::string& path,
                                             std::shared_ptr<const TextEncoder> encoder) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return Expected<MemoryStore>::failure("cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_jsonl(buf.str(), std::move(encoder));
}

}  // namespace agemem
