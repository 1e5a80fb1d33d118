#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cacherag/expansion.hpp"
#include "cacherag/semantic_cache.hpp"
#include "cacherag/semantic_parser.hpp"
#include "cacherag/trace.hpp"

namespace cacherag {

enum class AnswerStatus { Answered, Fallback };

std::string_view status_name(AnswerStatus s);

struct AnswerRecord {
    std::string answer;
    AnswerStatus status = AnswerStatus::Fallback;
    Trace trace;
    QueryPlan plan_used;
    Subgraph subgraph;
    Isr isr;
    std::string domain;
    std::string aspect;
    std::vector<std::uint64_t> examples;  // ids of the retrieved cache entries
    std::optional<Termination> termination;  // set when a traversal ran
    std::size_t expansion_iterations = 0;
    std::optional<CacheEntry> inserted;
    std::string error;  // transport failure that forced the fallback, if any
};

struct PipelineOptions {
    ExpansionBounds bounds;
    const PredicateRanker* ranker = nullptr;
    const ApiRegistry* apis = nullptr;
    const AspectTable* aspects = nullptr;  // AspectTable::defaults() when null
    Exec exec = Exec::Parallel;
};

// Cache key for a graph: its domain label, or "_global" when unlabeled.
std::string cache_domain(const KnowledgeGraph& kg);

// SUMMARIZE over the subgraph. Throws UsageError when the subgraph is empty.
std::string summarize(const QueryContext& ctx, const Subgraph& subgraph, const LlmAdapter& llm,
                      Trace* trace = nullptr);

// DIRECT_ANSWER: the model alone, used when retrieval could not complete.
std::string direct_answer(const QueryContext& ctx, const LlmAdapter& llm, Trace* trace = nullptr);

// One question end to end: parse, retrieve examples, compile, execute, judge,
// expand if needed, then summarize and cache the plan, or fall back to a
// direct answer without touching the cache.
AnswerRecord answer(const QueryContext& ctx, const KnowledgeGraph& kg, SemanticCache& cache,
                    const LlmAdapter& llm, const PipelineOptions& options = {});

// Several graphs: route to a domain first (one extra model call when more
// than one graph is loaded), then answer over that graph.
AnswerRecord answer_routed(const QueryContext& ctx, std::span<const KnowledgeGraph* const> graphs,
                           const DescriptionStore& descriptions, SemanticCache& cache,
                           const LlmAdapter& llm, const PipelineOptions& options = {});

}  // namespace cacherag
