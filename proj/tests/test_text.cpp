#include "doctest.h"

#include "cacherag/text.hpp"

using namespace cacherag;

TEST_CASE("tokenize lowercases and splits on punctuation") {
    CHECK(text::tokenize("Who directed Inception?") == std::vector<std::string>{"who", "directed", "inception"});
    CHECK(text::tokenize("  ").empty());
    CHECK(text::tokenize("award-winning (2018)") == std::vector<std::string>{"award", "winning", "2018"});
}

TEST_CASE("tokenize keeps utf-8 words whole") {
    auto t = text::tokenize("Amélie Poulain");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "amélie");
}

TEST_CASE("identifier_words splits camel and snake case") {
    CHECK(text::identifier_words("directedBy") == std::vector<std::string>{"directed", "by"});
    CHECK(text::identifier_words("release_date") == std::vector<std::string>{"release", "date"});
    CHECK(text::identifier_words("P31") == std::vector<std::string>{"p31"});
}

TEST_CASE("keyed lines ignore list markers and uppercase keys") {
    auto lines = text::parse_keyed_lines("- entity: Inception\n1. Constraint: 2018\nnoise\n* DOMAIN: movies");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].key == "ENTITY");
    CHECK(lines[0].value == "Inception");
    CHECK(lines[1].key == "CONSTRAINT");
    CHECK(lines[1].value == "2018");
    CHECK(lines[2].value == "movies");
}

TEST_CASE("escape round-trips") {
    std::string raw = "a\tb\nc\\d";
    CHECK(text::escape(raw) == "a\\tb\\nc\\\\d");
    CHECK(text::unescape(text::escape(raw)) == raw);
}

TEST_CASE("small helpers") {
    CHECK(text::trim("  x y \t") == "x y");
    CHECK(text::strip_quotes("\"abc\"") == "abc");
    CHECK(text::strip_quotes("'abc'") == "abc");
    CHECK(text::strip_quotes("\"abc") == "\"abc");
    CHECK(text::starts_with_ci("Status: ok", "STATUS:"));
    CHECK(text::split("a|b||c", '|') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(text::join({"a", "b"}, ", ") == "a, b");
    CHECK(text::split_lines("a\r\nb\n").size() == 2);
}
