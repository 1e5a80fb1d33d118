#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/kernels.hpp"
#include "cacherag/query_compiler.hpp"

namespace cacherag {

enum class CompletionStatus { Complete, Incomplete };

struct DispatcherVerdict {
    CompletionStatus status = CompletionStatus::Incomplete;
    std::optional<std::string> next_relation;
    std::vector<std::string> frontier_hint;
    bool consulted_llm = false;
    bool parsed = true;

    bool complete() const { return status == CompletionStatus::Complete; }
};

struct ExpansionBounds {
    std::size_t k_depth = 3;
    std::size_t k_degree = 30;

    void validate() const;  // both >= 1, else UsageError
};

// STATUS: COMPLETE|INCOMPLETE, optional NEXT_RELATION:, repeatable FRONTIER:
// lines with '|'-separated names. Unparseable text gives INCOMPLETE with no
// hints and parsed = false. COMPLETE drops any hints.
DispatcherVerdict parse_verdict(std::string_view completion);

// Judges whether the subgraph answers the question. An empty subgraph is
// INCOMPLETE without consulting the model.
DispatcherVerdict dispatch(const QueryContext& ctx, const Subgraph& subgraph,
                           std::span<const CacheEntry> examples, const LlmAdapter& llm,
                           Trace* trace = nullptr);

// Index nested-loop join: (e, relation, *) for every frontier entity. Throws
// UsageError when the relation is not in the vocabulary.
std::vector<Triple> depth_expand(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                                 std::string_view relation, Exec exec = Exec::Parallel);

// Star scan with per-entity top-k pruning by the ranker.
kernels::StarTopK breadth_expand(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                                 const QueryContext& ctx, const PredicateRanker& ranker,
                                 std::size_t k_degree, Exec exec = Exec::Parallel);

enum class Termination { Complete, BoundHit };

std::string_view termination_name(Termination t);

struct TraversalResult {
    QueryPlan plan;
    Subgraph subgraph;
    Termination termination = Termination::Complete;
    std::size_t iterations = 0;
    std::size_t dispatcher_calls = 0;
    std::size_t max_breadth_per_entity = 0;
    std::size_t expansion_pairs = 0;  // triples added by all iterations
};

struct TraversalOptions {
    const PredicateRanker* ranker = nullptr;  // LexicalRanker when null
    Exec exec = Exec::Parallel;
    // Verdict already obtained for the starting subgraph; when set the first
    // judgement is not repeated.
    std::optional<DispatcherVerdict> initial_verdict;
};

// Bounded expansion. Each iteration follows r_next from the frontier when the
// verdict names a known relation, then scans stars of the hinted entities (or
// the entities the join reached, or the frontier), and merges both into the
// subgraph. After k_depth iterations the traversal stops with BoundHit
// without judging again, so at most k_depth dispatcher calls are made.
TraversalResult heuristic_traversal(const QueryContext& ctx, const KnowledgeGraph& kg,
                                    QueryPlan plan, Subgraph subgraph,
                                    std::span<const CacheEntry> examples,
                                    const ExpansionBounds& bounds, const LlmAdapter& llm,
                                    Trace* trace = nullptr, const TraversalOptions& options = {});

}  // namespace cacherag
