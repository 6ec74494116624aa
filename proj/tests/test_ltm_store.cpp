#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "agemem/ltm_store.hpp"

using namespace agemem;

namespace {

std::shared_ptr<const TextEncoder> encoder() {
    static auto enc = std::make_shared<HashedEncoder>();
    return enc;
}

std::string random_content(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {
        "paris",  "capital", "france", "launch", "code", "vault", "soup", "tuesday",
        "printer", "garage", "sky",    "green",  "cat",  "sat",   "mat",  "memory",
    };
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i) {
            out += ' ';
        }
        out += words[pick(rng)];
    }
    return out;
}

// Brute-force retrieval oracle: full descending sort on cosine with
// insertion-order tie-break, then the first k.
std::vector<std::string> brute_force_top_k(const MemoryStore& store, const std::string& query, int k) {
    const auto q = store.encoder().encode(query);
    struct Row {
        std::size_t order;
        std::string id;
        double score;
    };
    std::vector<Row> rows;
    std::size_t order = 0;
    for (const MemoryEntry* e : store.entries_in_order()) {
        rows.push_back(Row{order++, e->id, cosine(q, e->embedding)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.order < b.order;
    });
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < rows.size() && i < static_cast<std::size_t>(k); ++i) {
        ids.push_back(rows[i].id);
    }
    return ids;
}

}  // namespace

TEST_CASE("add grows the store and the entry is retrievable by id") {
    MemoryStore store(encoder());
    CHECK(store.size() == 0);
    auto id = store.add("user prefers 120-minute blocks");
    REQUIRE(id.ok());
    CHECK(store.size() == 1);
    const MemoryEntry* entry = store.find(id.value());
    REQUIRE(entry != nullptr);
    CHECK(entry->content == "user prefers 120-minute blocks");
    CHECK(entry->created_at == entry->updated_at);
}

TEST_CASE("add rejects empty content") {
    MemoryStore store(encoder());
    auto result = store.add("");
    CHECK(!result.ok());
    CHECK(result.error() == "empty content");
    CHECK(store.size() == 0);
}

TEST_CASE("identical content gets two distinct live ids") {
    MemoryStore store(encoder());
    auto a = store.add("same text");
    auto b = store.add("same text");
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value() != b.value());
    CHECK(store.size() == 2);
}

TEST_CASE("update replaces content and embedding, keeps id and cardinality") {
    MemoryStore store(encoder());
    auto id = store.add("old text");
    REQUIRE(id.ok());
    auto updated = store.update(id.value(), "new text");
    REQUIRE(updated.ok());
    CHECK(updated.value().id == id.value());
    CHECK(updated.value().content == "new text");
    CHECK(updated.value().updated_at > updated.value().created_at);
    CHECK(store.size() == 1);

    const auto expected = encoder()->encode("new text");
    CHECK(store.find(id.value())->embedding.values == expected.values);
}

TEST_CASE("update on unknown id fails") {
    MemoryStore store(encoder());
    auto result = store.update("mem_nonexistent", "anything");
    CHECK(!result.ok());
    CHECK(result.error() == "memory not found");
}

TEST_CASE("delete requires confirmation and removes the entry") {
    MemoryStore store(encoder());
    auto id = store.add("to be deleted");
    REQUIRE(id.ok());

    auto refused = store.remove(id.value(), false);
    CHECK(!refused.ok());
    CHECK(refused.error() == "confirmation required");
    CHECK(store.size() == 1);

    auto removed = store.remove(id.value(), true);
    CHECK(removed.ok());
    CHECK(store.size() == 0);

    auto again = store.remove(id.value(), true);
    CHECK(!again.ok());
    CHECK(again.error() == "memory not found");
}

TEST_CASE("deleted entries never reappear in retrieval and ids are not reused") {
    MemoryStore store(encoder());
    auto id = store.add("paris is the capital of france");
    REQUIRE(id.ok());
    REQUIRE(store.remove(id.value(), true).ok());

    auto results = store.retrieve("capital of france", 3);
    CHECK(results.empty());

    auto fresh = store.add("something else entirely");
    REQUIRE(fresh.ok());
    CHECK(fresh.value() != id.value());
}

TEST_CASE("retrieve ranks by cosine and respects top_k") {
    MemoryStore store(encoder());
    REQUIRE(store.add("paris is the capital of france").ok());
    REQUIRE(store.add("the printer jams constantly").ok());
    REQUIRE(store.add("bananas are yellow").ok());

    auto results = store.retrieve("capital of france", 1);
    REQUIRE(results.size() == 1);
    CHECK(results[0].entry.content == "paris is the capital of france");

    auto all = store.retrieve("capital of france", 3);
    CHECK(all.size() == 3);
    CHECK(std::is_sorted(all.begin(), all.end(),
                         [](const RetrievedEntry& a, const RetrievedEntry& b) { return a.score > b.score; }));
}

TEST_CASE("retrieve on an empty store returns an empty list") {
    MemoryStore store(encoder());
    CHECK(store.retrieve("anything", 3).empty());
}

TEST_CASE("retrieve demands top_k >= 1") {
    MemoryStore store(encoder());
    CHECK_THROWS_AS(store.retrieve("q", 0), std::invalid_argument);
}

TEST_CASE("metadata_filter keeps only exact-match conjunctions") {
    MemoryStore store(encoder());
    REQUIRE(store.add("fact one", {{"type", "user_info"}, {"domain", "math"}}).ok());
    REQUIRE(store.add("fact two", {{"type", "user_info"}}).ok());
    REQUIRE(store.add("fact three", {{"type", "other"}, {"domain", "math"}}).ok());

    auto results = store.retrieve("fact", 10, {{"type", "user_info"}, {"domain", "math"}});
    REQUIRE(results.size() == 1);
    CHECK(results[0].entry.content == "fact one");

    auto loose = store.retrieve("fact", 10, {{"type", "user_info"}});
    CHECK(loose.size() == 2);
}

TEST_CASE("ties break by insertion order") {
    MemoryStore store(encoder());
    auto a = store.add("identical text");
    auto b = store.add("identical text");
    auto c = store.add("identical text");
    REQUIRE(c.ok());
    auto results = store.retrieve("identical text", 3);
    REQUIRE(results.size() == 3);
    CHECK(results[0].entry.id == a.value());
    CHECK(results[1].entry.id == b.value());
    CHECK(results[2].entry.id == c.value());
}

TEST_CASE("property: retrieval equals the brute-force oracle on random stores") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        MemoryStore store(encoder());
        std::uniform_int_distribution<int> size_dist(0, 100);
        const int n = size_dist(rng);
        for (int i = 0; i < n; ++i) {
            REQUIRE(store.add(random_content(rng)).ok());
        }
        std::uniform_int_distribution<int> k_dist(1, 10);
        const int k = k_dist(rng);
        const std::string query = random_content(rng);

        const auto got = store.retrieve(query, k);
        const auto expected = brute_force_top_k(store, query, k);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(got[i].entry.id == expected[i]);
        }
    }
}

TEST_CASE("mutations never touch entries not named by id") {
    MemoryStore store(encoder());
    auto a = store.add("alpha content");
    auto b = store.add("beta content");
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    const std::string before = store.find(b.value())->content;
    REQUIRE(store.update(a.value(), "gamma content").ok());
    CHECK(store.find(b.value())->content == before);
    REQUIRE(store.remove(a.value(), true).ok());
    CHECK(store.find(b.value())->content == before);
}
