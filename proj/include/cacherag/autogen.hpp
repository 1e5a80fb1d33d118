#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cacherag/kg_store.hpp"
#include "cacherag/plan.hpp"
#include "cacherag/semantic_cache.hpp"
#include "cacherag/semantic_parser.hpp"

namespace cacherag {

class LlmAdapter;
class Trace;

// One sampled entity with all of its 1-hop triples.
struct TripleGroup {
    std::string entity;
    std::vector<Triple> triples;
};

struct StarSample {
    std::vector<TripleGroup> groups;
    bool exhausted = false;  // asked for more entities than the graph has
};

// Uniform sampling of subjects without replacement, deterministic per seed.
StarSample sample_star_schemas(const KnowledgeGraph& kg, std::size_t count, std::uint64_t seed,
                               Trace* trace = nullptr);

enum class SeedVerdict { Pending, Kept, Rejected };

struct SeedCandidate {
    std::size_t id = 0;  // 1-based within its synthesis batch
    std::string question;
    std::vector<Triple> triples;
    std::string answer;
    SeedVerdict verdict = SeedVerdict::Pending;
    std::string reason;  // why it was rejected at parse time
};

inline constexpr std::size_t kMaxSeedQuestions = 5;

// Parses AUTOGEN_QUESTIONS output against the group: QUESTION:/TRIPLE:/ANSWER:
// blocks, "NA" blocks skipped, at most five kept. A block citing a triple that
// is not in the group, or citing none, is Rejected.
std::vector<SeedCandidate> parse_seed_candidates(std::string_view completion, const TripleGroup& group);

std::vector<SeedCandidate> synthesize(const TripleGroup& group, const LlmAdapter& llm,
                                      Trace* trace = nullptr);

// Applies VERDICT: <id> KEEP|REJECT lines to the pending candidates. Ids the
// evaluator does not mention are rejected. No model call when nothing is pending.
void filter(std::vector<SeedCandidate>& candidates, const LlmAdapter& llm, Trace* trace = nullptr);

// One PointQuery per distinct (subject, predicate), in canonical order.
QueryPlan compile_seed_plan(const std::vector<Triple>& triples);

struct PrewarmReport {
    std::size_t sampled = 0;
    std::size_t candidates = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t inserted = 0;
    std::size_t duplicates = 0;  // kept seeds already present in the cache
};

PrewarmReport prewarm(const KnowledgeGraph& kg, SemanticCache& cache, std::size_t count,
                      std::uint64_t seed, const LlmAdapter& llm, Trace* trace = nullptr,
                      const AspectTable& aspects = AspectTable::defaults());

}  // namespace cacherag
