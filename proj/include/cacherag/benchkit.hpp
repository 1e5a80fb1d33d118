#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/kg_store.hpp"

namespace cacherag {

struct SynthSpec {
    std::size_t n_triples = 40000;
    std::uint64_t seed = 1;
    double zipf_exponent = 2.5;
    std::size_t predicate_pool = 500;
    double literal_share = 0.2;  // fraction of objects that are literals

    void validate() const;  // UsageError on n_triples == 0, exponent <= 1, empty pool
};

// Entities "Q<i>" get out-degrees from a Zipf(exponent) law over 1, 2, 3, ...;
// predicates "P<j>" are uniform over the pool. Entity i draws from its own
// seeded stream, so the same entity has the same degree and predicates at
// every target size; only the object pool differs. Generation stops at the
// triple target (the last entity is truncated).
KnowledgeGraph synth_kg(const SynthSpec& spec);

// Degree of entity i for a SynthSpec, without building a graph.
std::size_t synth_degree(const SynthSpec& spec, std::size_t entity);

enum class QueryKind { Point, Star };
std::string_view query_kind_name(QueryKind k);

struct ScalabilityRow {
    std::size_t n_triples = 0;
    QueryKind query_kind = QueryKind::Point;
    double mean_comparisons = 0.0;
    double mean_elapsed_ns = 0.0;  // warm-cache mean over the timed passes
    std::size_t query_count = 0;
    double cold_elapsed_ns = 0.0;  // mean of the first, untimed-for-the-report pass
};

struct ScalabilityReport {
    std::vector<ScalabilityRow> rows;  // per size: point row, then star row

    // Header: n_triples,query_kind,mean_comparisons,mean_elapsed,query_count
    // (mean_elapsed in nanoseconds, warm cache).
    void write_csv(std::ostream& out) const;
    std::vector<ScalabilityRow> of(QueryKind kind) const;
};

struct ScalabilityOptions {
    double zipf_exponent = 2.5;
    std::size_t predicate_pool = 500;
    // The batch runs once to warm caches (reported as cold_elapsed_ns), then
    // this many more times for mean_elapsed_ns.
    std::size_t timed_passes = 3;
};

// For each size: build the graph, then run `queries_per_kind` point and star
// lookups. Targets are drawn from entities present at every size, so the
// batches match across the grid. Sizes must be ascending.
ScalabilityReport run_scalability(std::span<const std::size_t> sizes, std::size_t queries_per_kind,
                                  std::uint64_t seed, const ScalabilityOptions& options = {});

// "40000x2^6" -> 40000, 80000, ..., 1280000 (six sizes); "1000,2000" -> list.
std::vector<std::size_t> parse_size_grid(std::string_view spec);

// Least squares y = a + b * log2(x).
struct LogFit {
    double a = 0.0;
    double b = 0.0;
    double r2 = 0.0;
};

LogFit fit_log2(std::span<const double> x, std::span<const double> y);

// Log-log least-squares slope of the out-degree histogram over degrees that
// at least `min_count` subjects have.
double degree_histogram_slope(const KnowledgeGraph& kg, std::size_t min_count = 10);

}  // namespace cacherag
