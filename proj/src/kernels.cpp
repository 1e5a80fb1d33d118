#include "cacherag/kernels.hpp"

#include <algorithm>
#include <unordered_set>

#include "cacherag/text.hpp"

namespace cacherag {

double LexicalRanker::score(std::string_view question, const Triple& triple) const {
    auto words = text::identifier_words(triple.predicate);
    std::unordered_set<std::string> pred(words.begin(), words.end());
    auto tokens = text::tokenize(question);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    double hits = 0;
    for (const auto& t : tokens) hits += pred.count(t) ? 1.0 : 0.0;
    return hits;
}

namespace kernels {

namespace {

std::vector<Triple> merge_sorted(std::vector<std::vector<Triple>>& parts) {
    std::vector<Triple> out;
    for (auto& p : parts) {
        out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Triple> top_pairs(const KnowledgeGraph& kg, const std::string& entity,
                              std::string_view question, const PredicateRanker& ranker,
                              std::size_t k) {
    auto star = kg.triples_of(entity);
    std::vector<std::pair<double, Triple>> scored;
    scored.reserve(star.size());
    for (auto& t : star) {
        double s = ranker.score(question, t);
        scored.emplace_back(s, std::move(t));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // predicate, then object, by canonical order
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<Triple> out;
    out.reserve(scored.size());
    for (auto& [_, t] : scored) out.push_back(std::move(t));
    return out;
}

}  // namespace

std::vector<std::vector<double>> bm25_rows(const Bm25Corpus& corpus,
                                           std::span<const std::size_t> queries, Exec exec) {
    std::vector<std::vector<double>> rows(queries.size());
    const auto n = static_cast<long>(queries.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) rows[i] = corpus.raw_scores(corpus.tokens(queries[i]));
    } else {
        for (long i = 0; i < n; ++i) rows[i] = corpus.raw_scores(corpus.tokens(queries[i]));
    }
    return rows;
}

std::vector<Triple> point_join(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                               std::string_view predicate, Exec exec) {
    std::vector<std::vector<Triple>> parts(frontier.size());
    const auto n = static_cast<long>(frontier.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) parts[i] = kg.triples_of(frontier[i], predicate);
    } else {
        for (long i = 0; i < n; ++i) parts[i] = kg.triples_of(frontier[i], predicate);
    }
    return merge_sorted(parts);
}

StarTopK star_topk(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                   std::string_view question, const PredicateRanker& ranker, std::size_t k,
                   Exec exec) {
    std::vector<std::vector<Triple>> parts(frontier.size());
    const auto n = static_cast<long>(frontier.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) parts[i] = top_pairs(kg, frontier[i], question, ranker, k);
    } else {
        for (long i = 0; i < n; ++i) parts[i] = top_pairs(kg, frontier[i], question, ranker, k);
    }
    StarTopK out;
    out.per_entity.reserve(parts.size());
    for (const auto& p : parts) out.per_entity.push_back(p.size());
    out.triples = merge_sorted(parts);
    return out;
}

}  // namespace kernels

}  // namespace cacherag
