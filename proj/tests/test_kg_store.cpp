#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "cacherag/error.hpp"
#include "cacherag/kg_store.hpp"
#include "support.hpp"

using namespace cacherag;

TEST_CASE("load: empty stream") {
    auto kg = testing::graph_from("");
    CHECK(kg.size() == 0);
    CHECK(kg.vocabulary().empty());
    CHECK(kg.point_query("x", "y").values.empty());
}

TEST_CASE("load: repeated lines merge") {
    auto kg = testing::graph_from("a\tp\tb\nc\tp\td\na\tp\tb\n");
    CHECK(kg.size() == 2);
}

TEST_CASE("load: fixture vocabulary") {
    auto kg = testing::fixture();
    CHECK(kg.size() == 6);
    CHECK(kg.vocabulary() == std::set<std::string>{"directedBy", "directed", "nominated", "releaseDate"});
    CHECK(kg.domain_label() == "movie");
}

TEST_CASE("load: malformed input names the line") {
    auto bad = [](const std::string& tsv) {
        std::istringstream in(tsv);
        return load_triples(in, "");
    };
    try {
        bad("a\tp\tb\nonly two\tfields\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(bad("a\tp q\tb\n"), ParseError);
    CHECK_THROWS_AS(bad("a\tp\t\"open\n"), ParseError);
    CHECK_THROWS_AS(bad("a\tp\tb\t2020..2010\n"), ParseError);
    CHECK_THROWS_AS(bad("a\tp\tb\tyesterday\n"), ParseError);
    CHECK_THROWS_AS(load_triples_file("/nonexistent/x.tsv", ""), UsageError);
}

TEST_CASE("load: temporal annotation and literals survive") {
    auto kg = testing::graph_from("A\tmember\tB\t2001..2004-06\nA\tborn\t\"1970-05-02\"\nA\theight\t\"1.85\"\n");
    auto t = kg.triples_of("A", "member");
    REQUIRE(t.size() == 1);
    REQUIRE(t[0].temporal.has_value());
    CHECK(t[0].temporal->canonical() == "2001..2004-06");
    auto born = kg.point_query("A", "born").values;
    REQUIRE(born.size() == 1);
    CHECK_FALSE(born[0].is_entity());
    CHECK(born[0].date().has_value());
    CHECK(kg.point_query("A", "height").values[0].numeric().value() == doctest::Approx(1.85));
    std::ostringstream out;
    kg.write_tsv(out);
    auto again = testing::graph_from(out.str());
    CHECK(again.triples() == kg.triples());
}

TEST_CASE("point query on fixture") {
    auto kg = testing::fixture();
    auto r = kg.point_query("Inception", "directedBy");
    REQUIRE(r.values.size() == 1);
    CHECK(r.values[0] == ObjectValue::entity("Christopher Nolan"));
    auto films = kg.point_query("Christopher Nolan", "directed").values;
    REQUIRE(films.size() == 3);
    CHECK(films[0].text == "Dunkirk");
    CHECK(films[1].text == "Interstellar");
    CHECK(films[2].text == "Tenet");
    CHECK(kg.point_query("UnknownEntity", "directedBy").values.empty());
}

TEST_CASE("star query and local schema on fixture") {
    auto kg = testing::fixture();
    auto d = kg.star_query("Dunkirk").values;
    REQUIRE(d.size() == 1);
    CHECK(d[0].predicate == "nominated");
    CHECK(d[0].object == ObjectValue::literal("Academy Award for Best Picture (2018)"));
    CHECK(kg.star_query("Tenet").values.empty());
    CHECK(kg.local_schema("Inception") == std::set<std::string>{"directedBy", "releaseDate"});
    CHECK(kg.local_schema("Christopher Nolan") == std::set<std::string>{"directed"});
    CHECK(kg.local_schema("nobody").empty());
}

TEST_CASE("star query returns exactly the subject's pairs") {
    auto kg = testing::graph_from(
        "X\ta\t1\nX\tb\t2\nX\tc\t3\nX\td\t4\nX\te\t5\nY\ta\tX\nW\tz\tX\n");
    auto r = kg.star_query("X");
    REQUIRE(r.values.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.values[i].predicate == std::string(1, char('a' + i)));
}

TEST_CASE("SpoIndex lower_bound matches std::lower_bound") {
    std::mt19937_64 rng(3);
    for (std::size_t n : {0u, 1u, 2u, 15u, 16u, 17u, 255u, 256u, 257u, 4097u, 10000u}) {
        std::vector<std::uint64_t> keys(n);
        for (auto& k : keys) k = rng() % (4 * n + 1);
        std::sort(keys.begin(), keys.end());
        SpoIndex index(keys);
        std::uint64_t max_cmp = 0;
        for (std::uint64_t probe = 0; probe <= 4 * n + 2; ++probe) {
            std::uint64_t cmp = 0;
            auto expect = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), probe) - keys.begin());
            REQUIRE(index.lower_bound(probe, cmp) == expect);
            max_cmp = std::max(max_cmp, cmp);
        }
        CHECK(max_cmp <= comparison_bound(n, 0));
    }
}

TEST_CASE("random graphs agree with a linear scan") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 4; ++round) {
        std::vector<Triple> all;
        std::ostringstream tsv;
        const int n = 2500 * (round + 1);
        for (int i = 0; i < n; ++i) {
            Triple t{"e" + std::to_string(rng() % 300), "p" + std::to_string(rng() % 12),
                     ObjectValue::entity("e" + std::to_string(rng() % 300)), std::nullopt};
            tsv << t.canonical_line() << '\n';
            all.push_back(t);
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        auto kg = testing::graph_from(tsv.str());
        REQUIRE(kg.size() == all.size());
        CHECK(kg.triples() == all);

        for (int q = 0; q < 200; ++q) {
            std::string e = "e" + std::to_string(rng() % 320);
            std::string p = "p" + std::to_string(rng() % 13);
            std::vector<ObjectValue> expect_point;
            std::vector<PredicateObject> expect_star;
            for (const auto& t : all) {
                if (t.subject != e) continue;
                expect_star.push_back({t.predicate, t.object});
                if (t.predicate == p) expect_point.push_back(t.object);
            }
            auto point = kg.point_query(e, p);
            CHECK(point.values == expect_point);
            CHECK(point.stats.comparisons <= comparison_bound(kg.size(), point.values.size()));
            auto star = kg.star_query(e);
            CHECK(star.values == expect_star);
            CHECK(star.stats.comparisons <= comparison_bound(kg.size(), star.values.size()));
        }
    }
}

TEST_CASE("triple invariants") {
    CHECK(triple_violation({"", "p", ObjectValue::entity("o"), {}}).has_value());
    CHECK(triple_violation({"s", "has space", ObjectValue::entity("o"), {}}).has_value());
    CHECK(triple_violation({"s", "p", ObjectValue::literal("x"), {}}) == std::nullopt);
    KnowledgeGraph::Builder b;
    CHECK_THROWS_AS(b.add(Triple{"s", "", ObjectValue::entity("o"), {}}), UsageError);
}
