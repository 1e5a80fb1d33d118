#include "cacherag/bm25.hpp"

#include <algorithm>
#include <cmath>

#include "cacherag/text.hpp"

namespace cacherag {

namespace {

std::vector<std::string> distinct(const std::vector<std::string>& tokens) {
    std::vector<std::string> out = tokens;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

Bm25Corpus::Bm25Corpus(std::span<const std::string> docs, Bm25Params params)
    : params_(params), docs_(docs.begin(), docs.end()) {
    tokens_.reserve(docs_.size());
    tf_.resize(docs_.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        tokens_.push_back(text::tokenize(docs_[i]));
        total += tokens_[i].size();
        for (const auto& t : tokens_[i]) ++tf_[i][t];
        for (const auto& [t, _] : tf_[i]) ++df_[t];
    }
    avgdl_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

double Bm25Corpus::idf(const std::string& term) const {
    auto it = df_.find(term);
    double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    double n = static_cast<double>(docs_.size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Corpus::raw_score(const std::vector<std::string>& query_tokens, std::size_t doc) const {
    if (avgdl_ == 0.0 || tokens_[doc].empty()) return 0.0;
    double dl = static_cast<double>(tokens_[doc].size());
    double norm = params_.k1 * (1.0 - params_.b + params_.b * dl / avgdl_);
    double score = 0.0;
    for (const auto& term : distinct(query_tokens)) {
        auto it = tf_[doc].find(term);
        if (it == tf_[doc].end()) continue;
        double f = static_cast<double>(it->second);
        score += idf(term) * f * (params_.k1 + 1.0) / (f + norm);
    }
    return score;
}

std::vector<double> Bm25Corpus::raw_scores(const std::vector<std::string>& query_tokens) const {
    std::vector<double> out(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) out[i] = raw_score(query_tokens, i);
    return out;
}

std::vector<double> Bm25Corpus::raw_scores(std::string_view query) const {
    return raw_scores(text::tokenize(query));
}

std::vector<double> normalize_min_max(std::span<const double> raw) {
    std::vector<double> out(raw.size(), 0.0);
    if (raw.empty()) return out;
    auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    if (*hi == 0.0 && *lo == 0.0) return out;
    if (*hi == *lo) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / (*hi - *lo);
    return out;
}

std::vector<double> bm25_scores(std::string_view query, std::span<const std::string> docs,
                                Bm25Params params) {
    if (docs.empty()) return {};
    Bm25Corpus corpus(docs, params);
    auto raw = corpus.raw_scores(query);
    return normalize_min_max(raw);
}

}  // namespace cacherag
