#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/bm25.hpp"
#include "cacherag/kg_store.hpp"

namespace cacherag {

// Scores a 1-hop pair for breadth expansion; higher is better.
class PredicateRanker {
public:
    virtual ~PredicateRanker() = default;
    virtual double score(std::string_view question, const Triple& triple) const = 0;
};

// Number of distinct question tokens that also appear among the predicate's
// identifier words ("directedBy" -> directed, by).
class LexicalRanker final : public PredicateRanker {
public:
    double score(std::string_view question, const Triple& triple) const override;
};

// The kernels come in two flavours with identical results: a plain loop kept
// as the reference, and an OpenMP version. Results never depend on thread
// count or scheduling.
enum class Exec { Serial, Parallel };

namespace kernels {

// rows[i][j] = raw BM25 of pool document j with document queries[i] as query.
std::vector<std::vector<double>> bm25_rows(const Bm25Corpus& corpus,
                                           std::span<const std::size_t> queries, Exec exec);

// Union of (e, predicate, *) over the frontier, canonical order, no duplicates.
std::vector<Triple> point_join(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                               std::string_view predicate, Exec exec);

// Per frontier entity: its star pairs ranked by (score desc, predicate, object),
// truncated to k. Result is merged in canonical order; per_entity[i] holds how
// many pairs entity i contributed.
struct StarTopK {
    std::vector<Triple> triples;
    std::vector<std::size_t> per_entity;
};

StarTopK star_topk(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                   std::string_view question, const PredicateRanker& ranker, std::size_t k,
                   Exec exec);

}  // namespace kernels

}  // namespace cacherag
