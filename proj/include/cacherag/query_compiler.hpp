#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/kg_store.hpp"
#include "cacherag/plan.hpp"
#include "cacherag/semantic_cache.hpp"
#include "cacherag/semantic_parser.hpp"

namespace cacherag {

class LlmAdapter;
class Trace;

// Retrieved triples plus the entities at the growing edge.
struct Subgraph {
    std::set<Triple> triples;
    std::set<std::string> frontier;

    bool empty() const { return triples.empty(); }
    std::size_t size() const { return triples.size(); }

    // Adds triples; returns the ones that were not already present.
    std::vector<Triple> merge(const std::vector<Triple>& more);
    // Canonical triple lines, one per line.
    std::string serialize() const;
};

// Entity objects of the given triples, sorted and unique.
std::set<std::string> entity_objects(const std::vector<Triple>& triples);

using ApiHandler = std::function<std::vector<Triple>(const ApiCall&, const KnowledgeGraph&)>;

class ApiRegistry {
public:
    void add(std::string name, ApiHandler handler);
    const ApiHandler* find(std::string_view name) const;

private:
    std::map<std::string, ApiHandler, std::less<>> handlers_;
};

struct CompileResult {
    QueryPlan plan;
    std::vector<std::string> dropped;  // serialized ops removed for schema violations
    std::size_t malformed = 0;
};

// "Q: ...\nOP: ..." blocks used by the compile and dispatch prompts.
std::string format_examples(std::span<const CacheEntry> examples);

// One QUERY_COMPILE call. Ops whose predicate is outside `schema` are dropped
// and flagged. Throws CompileError when nothing parseable came back
// (breadth_fallback() false) or when every op was dropped (true).
CompileResult compile(const QueryContext& ctx, const Isr& isr, const std::set<std::string>& schema,
                      std::span<const CacheEntry> examples, const LlmAdapter& llm,
                      Trace* trace = nullptr);

// Runs ops in order. An empty result leaves the frontier at `topic` (or the
// first op's entity when topic is empty). ApiCall goes through `apis`, except
// the breadth-step marker, which is a no-op. Throws ExecutionError for an
// unregistered call.
Subgraph execute(const QueryPlan& plan, const KnowledgeGraph& kg, const ApiRegistry& apis = {},
                 std::string_view topic = {}, Trace* trace = nullptr);

}  // namespace cacherag
