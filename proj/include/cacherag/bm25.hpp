#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cacherag {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// The document pool doubles as the corpus for IDF and average length.
class Bm25Corpus {
public:
    explicit Bm25Corpus(std::span<const std::string> docs, Bm25Params params = {});

    std::size_t size() const { return docs_.size(); }
    const std::vector<std::string>& tokens(std::size_t doc) const { return tokens_[doc]; }

    // Raw score of every document for the query.
    std::vector<double> raw_scores(std::string_view query) const;
    std::vector<double> raw_scores(const std::vector<std::string>& query_tokens) const;
    double raw_score(const std::vector<std::string>& query_tokens, std::size_t doc) const;

    // Lucene-style IDF: ln((N - df + 0.5) / (df + 0.5) + 1), always positive.
    double idf(const std::string& term) const;

private:
    Bm25Params params_;
    std::vector<std::string> docs_;
    std::vector<std::vector<std::string>> tokens_;
    std::vector<std::unordered_map<std::string, std::size_t>> tf_;
    std::unordered_map<std::string, std::size_t> df_;
    double avgdl_ = 0.0;
};

// Min-max into [0,1]. All-zero input stays all zero; any other constant input
// maps to 1.0.
std::vector<double> normalize_min_max(std::span<const double> raw);

// Normalized BM25 of each doc against the query; empty docs -> empty result.
std::vector<double> bm25_scores(std::string_view query, std::span<const std::string> docs,
                                Bm25Params params = {});

}  // namespace cacherag
