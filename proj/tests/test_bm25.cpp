#include "doctest.h"

#include <random>

#include "cacherag/bm25.hpp"
#include "cacherag/kernels.hpp"
#include "oracles/bm25_oracle.hpp"

using namespace cacherag;

TEST_CASE("singleton identical document scores 1") {
    std::vector<std::string> docs{"director award"};
    CHECK(bm25_scores("director award", docs) == std::vector<double>{1.0});
}

TEST_CASE("no overlap gives all zeros") {
    std::vector<std::string> docs{"music charts", "stock prices", "league table"};
    CHECK(bm25_scores("director award", docs) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(bm25_scores("x", std::vector<std::string>{}).empty());
}

TEST_CASE("three short documents against hand-computed values") {
    // Worked by hand: N = 3, avgdl = 2, idf(director) = ln(8/3), idf(award) = ln(1.6).
    std::vector<std::string> docs{"director award", "award award film", "music"};
    Bm25Corpus corpus(docs);
    auto raw = corpus.raw_scores("director award");
    CHECK(raw[0] == doctest::Approx(1.450832882).epsilon(1e-9));
    CHECK(raw[1] == doctest::Approx(0.566579717).epsilon(1e-9));
    CHECK(raw[2] == 0.0);
    auto norm = bm25_scores("director award", docs);
    CHECK(norm[0] == 1.0);
    CHECK(norm[1] == doctest::Approx(0.390520317).epsilon(1e-9));
    CHECK(norm[2] == 0.0);
    CHECK(corpus.idf("director") == doctest::Approx(std::log(8.0 / 3.0)));
}

TEST_CASE("repeated query terms count once") {
    std::vector<std::string> docs{"award film", "film"};
    Bm25Corpus corpus(docs);
    CHECK(corpus.raw_scores("award award")[0] == doctest::Approx(corpus.raw_scores("award")[0]));
}

TEST_CASE("normalization edge cases") {
    CHECK(normalize_min_max(std::vector<double>{2.0, 2.0}) == std::vector<double>{1.0, 1.0});
    CHECK(normalize_min_max(std::vector<double>{0.0, 0.0}) == std::vector<double>{0.0, 0.0});
    CHECK(normalize_min_max(std::vector<double>{1.0, 3.0, 2.0}) == std::vector<double>{0.0, 1.0, 0.5});
}

TEST_CASE("random corpora agree with the oracle") {
    const std::vector<std::string> vocab{"film", "director", "award", "nolan", "release", "cast",
                                         "music", "song", "2018", "oscar", "best", "picture"};
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> docs(1 + rng() % 12);
        for (auto& d : docs) {
            for (std::size_t w = 0, n = rng() % 8; w < n; ++w) d += vocab[rng() % vocab.size()] + " ";
        }
        std::string q;
        for (std::size_t w = 0, n = 1 + rng() % 4; w < n; ++w) q += vocab[rng() % vocab.size()] + " ";
        auto expect = oracle::bm25_raw(q, docs);
        auto got = Bm25Corpus(docs).raw_scores(q);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
        auto norm = bm25_scores(q, docs);
        auto expect_norm = oracle::min_max(expect);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(norm[i] == doctest::Approx(expect_norm[i]).epsilon(1e-12));
    }
}

TEST_CASE("bm25_rows serial and parallel agree") {
    std::vector<std::string> docs;
    for (int i = 0; i < 40; ++i) docs.push_back("film " + std::to_string(i % 7) + " award " + std::to_string(i % 3));
    Bm25Corpus corpus(docs);
    std::vector<std::size_t> queries{0, 5, 17, 39};
    auto serial = kernels::bm25_rows(corpus, queries, Exec::Serial);
    auto parallel = kernels::bm25_rows(corpus, queries, Exec::Parallel);
    CHECK(serial == parallel);
    REQUIRE(serial.size() == queries.size());
    CHECK(serial[1] == corpus.raw_scores(corpus.tokens(5)));
}
