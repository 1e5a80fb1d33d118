#include "doctest.h"

#include <fstream>
#include <thread>

#include "cacherag/error.hpp"
#include "cacherag/semantic_parser.hpp"
#include "cacherag/trace.hpp"
#include "support.hpp"

using namespace cacherag;

namespace {

const char* kRunning = "Which film by the director of Inception was nominated for an Academy Award in 2018?";

std::vector<DomainDescription> shipped_domains() {
    std::ifstream in(testing::source_path("data/domains.txt"));
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_descriptions(all);
}

}  // namespace

TEST_CASE("ISR for the running example") {
    testing::Scripted s(
        "[ISR_EXTRACT] Inception\nENTITY: Inception\nCONSTRAINT: directed by\nCONSTRAINT: Academy Award\n"
        "CONSTRAINT: 2018\nDOMAIN: movies\n");
    auto isr = extract_isr({kRunning}, s.llm);
    CHECK(isr == Isr{"Inception", {"directed by", "Academy Award", "2018"}, "movies", false});
    CHECK(s.count(TemplateId::IsrExtract) == 1);
    CHECK(s.recorder->calls()[0].prompt.find(kRunning) != std::string::npos);
}

TEST_CASE("ISR round-trips scripted fields") {
    testing::Scripted s("[ISR_EXTRACT] Who directed\nENTITY: \"Inception\"\nCONSTRAINT: [who directed it]\n");
    auto isr = extract_isr({"Who directed Inception?"}, s.llm);
    CHECK(isr.raw_entity == "Inception");
    CHECK(isr.constraints == std::vector<std::string>{"who directed it"});
    CHECK(isr.domain_hint.empty());
}

TEST_CASE("ISR without an entity is a parse error") {
    CHECK_THROWS_AS(parse_isr("CONSTRAINT: x\nDOMAIN: movies"), ParseError);
    CHECK_THROWS_AS(parse_isr("NA"), ParseError);
    testing::Scripted s(std::vector<ScriptRule>{});
    CHECK_THROWS_AS(extract_isr({"Who?"}, s.llm), ParseError);
}

TEST_CASE("fallback entity picks the longest capitalized run") {
    CHECK(fallback_entity("Who directed Inception?") == "Inception");
    CHECK(fallback_entity("Which films did Christopher Nolan direct?") == "Christopher Nolan");
    CHECK(fallback_entity("what is the capital?") == "");
    CHECK(fallback_entity(kRunning) == "Academy Award");
}

TEST_CASE("schema leaks are constraints equal to predicates") {
    Isr isr{"Inception", {"directedBy", "nominated for an award"}, "", false};
    CHECK(schema_leaks(isr, {"directedBy", "nominated"}) == std::vector<std::string>{"directedBy"});
}

TEST_CASE("query time formatting") {
    QueryContext ctx{"q", QueryContext::parse_time("2018-03-01T00:00:00Z")};
    CHECK(ctx.time_iso() == "2018-03-01T00:00:00Z");
    CHECK(QueryContext{"q", QueryContext::parse_time("2020-02-29")}.time_iso() == "2020-02-29T00:00:00Z");
    CHECK_THROWS_AS(QueryContext::parse_time("yesterday"), UsageError);
}

TEST_CASE("routing with a single domain makes no model call") {
    testing::Scripted s(std::vector<ScriptRule>{});
    std::vector<DomainDescription> one{{"movie", "films", 0}};
    auto d = route_domain({"Who directed Inception?"}, one, s.llm);
    CHECK(d.domain == "movie");
    CHECK_FALSE(d.consulted_llm);
    CHECK(s.total() == 0);
}

TEST_CASE("routing over the shipped descriptions") {
    auto domains = shipped_domains();
    REQUIRE(domains.size() == 5);
    testing::Scripted s(
        "[DOMAIN_ROUTE] Inception\nREASONING: it is a film\nDOMAIN: movie\n"
        "[DOMAIN_ROUTE] rain\nREASONING: weather question\nDOMAIN: weather\n");
    auto d = route_domain({"Who directed Inception?"}, domains, s.llm);
    CHECK(d.domain == "movie");
    CHECK(d.reasoning == "it is a film");
    CHECK_FALSE(d.fell_back);

    Trace trace;
    auto w = route_domain({"Will it rain tomorrow?"}, domains, s.llm, &trace);
    CHECK(w.domain == domains.front().domain);
    CHECK(w.fell_back);
    CHECK(trace.count("flag") == 1);
}

TEST_CASE("description updates bump every version") {
    auto domains = shipped_domains();
    testing::Scripted s(
        "[DOMAIN_DESC_UPDATE] music\n"
        "DESC: open | Broad background facts not covered by the specialised graphs.\n"
        "DESC: movie | Films only: directors, cast, releases and film awards.\n"
        "DESC: music | Recorded music: songs, albums, artists and chart history.\n"
        "DESC: finance | Companies and stock market data.\n");
    DescriptionStore store(domains);
    store.record_misroute("movie", "music", {"Who composed the Inception soundtrack album?"},
                          "mentions a film", s.llm);
    auto after = store.snapshot();
    REQUIRE(after.size() == domains.size());
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i].version == domains[i].version + 1);
    CHECK(after[0].description != domains[0].description);  // open
    CHECK(after[4].domain == "sports");
    CHECK(after[4].description == domains[4].description);
    CHECK_THROWS_AS(update_descriptions("movie", "movie", {"q"}, "", domains, s.llm), UsageError);
}

TEST_CASE("a clashing description keeps the old text") {
    std::vector<DomainDescription> d{{"a", "alpha", 0}, {"b", "beta", 0}};
    testing::Scripted s("[DOMAIN_DESC_UPDATE] q\nDESC: a | beta\nDESC: b | gamma\n");
    auto out = update_descriptions("a", "b", {"q"}, "r", d, s.llm);
    CHECK(out[0].description == "alpha");
    CHECK(out[1].description == "gamma");
}

TEST_CASE("descriptions persist and parse back") {
    auto domains = shipped_domains();
    CHECK(parse_descriptions(format_descriptions(domains)) == domains);
    CHECK_THROWS_AS(parse_descriptions("DESC: orphan\n"), ParseError);
}

TEST_CASE("routing and updates under concurrency") {
    auto domains = shipped_domains();
    testing::Scripted s("[DOMAIN_ROUTE] film\nDOMAIN: movie\n[DOMAIN_DESC_UPDATE] film\nDESC: movie | Films.\n");
    DescriptionStore store(domains);
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 50; ++i) {
                if (t == 0 && i % 10 == 0) {
                    store.record_misroute("music", "movie", {"which film"}, "", s.llm);
                } else {
                    CHECK(store.route({"which film"}, s.llm).domain == "movie");
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(store.snapshot()[0].version == 5);
}

TEST_CASE("aspect derivation") {
    CHECK(derive_aspect({"Inception", {"directed by", "Academy Award", "2018"}, "", false}) == "award");
    CHECK(derive_aspect({"Inception", {}, "", false}) == "general");
    CHECK(derive_aspect({"Inception", {"starring"}, "", false}) == "cast");
    auto shipped = AspectTable::from_file(testing::source_path("data/aspects.conf"));
    CHECK(shipped.entries() == AspectTable::defaults().entries());
    auto custom = AspectTable::parse("# c\nwhen = [year, date]\n");
    CHECK(custom.derive({"x", {"release Date"}, "", false}) == "when");
    CHECK_THROWS_AS(AspectTable::parse("broken line"), ParseError);
}
