#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/kernels.hpp"
#include "cacherag/plan.hpp"

namespace cacherag {

// Domain key used when a deployment has a single unnamed graph.
inline constexpr std::string_view kGlobalDomain = "_global";

struct CacheEntry {
    std::uint64_t id = 0;
    std::string domain;
    std::string aspect;
    std::string question;
    QueryPlan plan;
    std::string answer;
    std::uint64_t last_used = 0;

    friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

struct CacheConfig {
    double lambda = 0.5;
    std::size_t k = 5;
    std::optional<std::size_t> capacity;  // per bucket; unset = unbounded
    double relevance_floor = 0.1;

    // Throws UsageError when a value is out of range.
    void validate() const;
};

struct RetrieveStats {
    std::size_t bucket_size = 0;
    std::size_t pool_size = 0;           // entries scored for relevance
    std::size_t scored_outside_bucket = 0;
    std::size_t candidates = 0;          // pool entries at or above the relevance floor
    std::size_t similarity_evaluations = 0;  // pairwise Sim(Qj, Qk) lookups in the MMR loop
    std::size_t bm25_rows = 0;           // raw BM25 rows computed for the pairwise term
    bool relaxed = false;
    bool unknown_domain = false;
};

struct Retrieval {
    std::vector<CacheEntry> selected;  // in MMR pick order
    std::vector<double> relevance;     // normalized relevance of each selected entry
    RetrieveStats stats;
};

struct CacheStats {
    std::map<std::pair<std::string, std::string>, std::size_t> buckets;
    std::size_t entries = 0;
    std::uint64_t hits = 0;      // retrievals returning at least one entry
    std::uint64_t misses = 0;
    std::uint64_t inserts = 0;
    std::uint64_t evictions = 0;
    std::size_t bytes = 0;       // estimate of the heap held by entries
};

// Domain -> aspect -> entries. Retrieval is diversity-aware (MMR over
// normalized BM25). Inserts take an exclusive lock; retrievals share a lock
// and only touch last_used, which is atomic.
class SemanticCache {
public:
    explicit SemanticCache(CacheConfig config = {});
    ~SemanticCache();
    SemanticCache(SemanticCache&&) noexcept;
    SemanticCache& operator=(SemanticCache&&) noexcept;

    const CacheConfig& config() const;

    Retrieval retrieve(std::string_view query, std::string_view domain, std::string_view aspect,
                       Exec exec = Exec::Parallel) const;

    // Throws UsageError on an empty plan, or when a vocabulary is given and the
    // plan violates it.
    CacheEntry insert(std::string domain, std::string aspect, std::string question,
                      QueryPlan plan, std::string answer,
                      const std::set<std::string>* vocabulary = nullptr);

    // Duplicate guard: same domain, question and plan already stored.
    bool contains(std::string_view domain, std::string_view question, const QueryPlan& plan) const;

    std::size_t size() const;
    CacheStats stats() const;
    std::vector<CacheEntry> entries() const;  // sorted by id

    // JSON Lines, one entry per line sorted by id:
    // {"id","domain","aspect","question","plan","answer","last_used"}
    void export_jsonl(std::ostream& out) const;
    // Entries keep their ids and ticks; capacity applies as they are loaded.
    static SemanticCache import_jsonl(std::istream& in, CacheConfig config = {});

private:
    struct State;
    std::unique_ptr<State> state_;
};

}  // namespace cacherag
