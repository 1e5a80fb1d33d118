#include "doctest.h"

#include <algorithm>
#include <fstream>

#include "cacherag/autogen.hpp"
#include "cacherag/error.hpp"
#include "cacherag/pipeline.hpp"
#include "session_fixture.hpp"
#include "support.hpp"

using namespace cacherag;

namespace {

const std::string kQuestion = "Which film by the director of Inception was nominated for an Academy Award in 2018?";

QueryContext running() {
    return {kQuestion, QueryContext::parse_time("2018-03-01T00:00:00Z")};
}

std::string golden_script() {
    std::ifstream in(testing::source_path("data/golden/golden.script"));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fails the transport on every call.
class DeadBackend final : public LlmBackend {
public:
    Completion complete(TemplateId, const std::string&) const override { throw TransportError("connection refused"); }
};

// Fails only once the given template is reached.
class FailOn final : public LlmBackend {
public:
    FailOn(std::shared_ptr<const LlmBackend> inner, TemplateId id) : inner_(std::move(inner)), id_(id) {}
    Completion complete(TemplateId id, const std::string& prompt) const override {
        if (id == id_) throw TransportError("timeout");
        return inner_->complete(id, prompt);
    }

private:
    std::shared_ptr<const LlmBackend> inner_;
    TemplateId id_;
};

}  // namespace

TEST_CASE("golden scenario end to end") {
    auto kg = testing::fixture();
    testing::Scripted s(golden_script());
    SemanticCache cache;
    auto report = prewarm(kg, cache, 3, 7, s.llm);
    CHECK(report.inserted > 0);
    const auto before = cache.size();
    s.recorder->clear();

    auto rec = answer(running(), kg, cache, s.llm);
    CHECK(rec.status == AnswerStatus::Answered);
    CHECK(rec.answer.find("Dunkirk") != std::string::npos);
    CHECK(rec.expansion_iterations <= 2);
    CHECK(rec.termination == Termination::Complete);
    CHECK(cache.size() == before + 1);
    REQUIRE(rec.inserted.has_value());
    CHECK(validate(rec.inserted->plan, kg.vocabulary()).empty());
    CHECK(rec.inserted->domain == "movie");
    CHECK(rec.inserted->aspect == "award");
    CHECK_FALSE(rec.examples.empty());
    CHECK(rec.trace.count("recheck") == 1);
    CHECK(s.total() <= 3 + ExpansionBounds{}.k_depth);
}

TEST_CASE("pre-warming gives the golden question examples") {
    auto kg = testing::fixture();
    testing::Scripted s(golden_script());
    SemanticCache cold;
    auto unwarmed = answer(running(), kg, cold, s.llm);
    CHECK(unwarmed.examples.empty());
    SemanticCache warm;
    prewarm(kg, warm, 3, 7, s.llm);
    auto warmed = answer(running(), kg, warm, s.llm);
    CHECK_FALSE(warmed.examples.empty());
    CHECK(warmed.answer == unwarmed.answer);
}

TEST_CASE("asking twice retrieves the first answer's entry") {
    auto kg = testing::fixture();
    testing::Scripted s(golden_script());
    SemanticCache cache;
    auto first = answer(running(), kg, cache, s.llm);
    REQUIRE(first.inserted.has_value());
    auto second = answer(running(), kg, cache, s.llm);
    CHECK(std::find(second.examples.begin(), second.examples.end(), first.inserted->id) != second.examples.end());
    // The prompt for the second compile carries the cached plan.
    bool shown = false;
    for (const auto& c : s.recorder->calls()) {
        if (c.id == TemplateId::QueryCompile && c.prompt.find("Q: " + kQuestion) != std::string::npos) shown = true;
    }
    CHECK(shown);
}

TEST_CASE("always-INCOMPLETE falls back without caching") {
    auto kg = testing::fixture();
    testing::Scripted s(
        "[ISR_EXTRACT] Academy Award\nENTITY: Inception\nCONSTRAINT: nominated\n"
        "[QUERY_COMPILE] Topic entity: Inception\nOP: POINT Inception directedBy\n"
        "[DISPATCH_JUDGE] Question:\nSTATUS: INCOMPLETE\nNEXT_RELATION: directed\n"
        "[DIRECT_ANSWER] Question:\nI don't know.\n");
    SemanticCache cache;
    for (std::size_t depth : {1u, 3u, 4u}) {
        s.recorder->clear();
        PipelineOptions opt;
        opt.bounds = {depth, 30};
        auto rec = answer(running(), kg, cache, s.llm, opt);
        CHECK(rec.status == AnswerStatus::Fallback);
        CHECK(rec.termination == Termination::BoundHit);
        CHECK(rec.expansion_iterations == depth);
        CHECK(rec.answer == "I don't know.");
        CHECK_FALSE(rec.inserted.has_value());
        CHECK(s.count(TemplateId::DispatchJudge) == depth);
        CHECK(s.total() <= 3 + depth);
    }
    CHECK(cache.size() == 0);
}

TEST_CASE("ISR failure uses the capitalized span") {
    auto kg = testing::fixture();
    testing::Scripted s(
        "[QUERY_COMPILE] Topic entity: Inception\nOP: POINT Inception directedBy\n"
        "[DISPATCH_JUDGE] Question:\nSTATUS: COMPLETE\n"
        "[SUMMARIZE] Question:\nChristopher Nolan\n");
    SemanticCache cache;
    auto rec = answer({"Who directed Inception?"}, kg, cache, s.llm);
    CHECK(rec.isr.entity_from_fallback);
    CHECK(rec.isr.raw_entity == "Inception");
    CHECK(rec.status == AnswerStatus::Answered);
    CHECK(rec.answer == "Christopher Nolan");

    auto none = answer({"what is this?"}, kg, cache, s.llm);
    CHECK(none.status == AnswerStatus::Fallback);
    CHECK(none.trace.count("fallback") == 1);
}

TEST_CASE("schema vocabulary in the ISR is dropped") {
    auto kg = testing::fixture();
    testing::Scripted s(
        "[ISR_EXTRACT] Inception\nENTITY: Inception\nCONSTRAINT: directedBy\nCONSTRAINT: who directed it\n"
        "[QUERY_COMPILE] Topic entity: Inception\nOP: POINT Inception directedBy\n"
        "[DISPATCH_JUDGE] Question:\nSTATUS: COMPLETE\n[SUMMARIZE] Question:\nNolan\n");
    SemanticCache cache;
    auto rec = answer({"Who directed Inception?"}, kg, cache, s.llm);
    CHECK(rec.isr.constraints == std::vector<std::string>{"who directed it"});
    CHECK(rec.aspect == "director");
}

TEST_CASE("transport failures fall back") {
    auto kg = testing::fixture();
    SemanticCache cache;
    LlmAdapter dead(std::make_shared<DeadBackend>());
    auto rec = answer(running(), kg, cache, dead);
    CHECK(rec.status == AnswerStatus::Fallback);
    CHECK_FALSE(rec.error.empty());
    CHECK(cache.size() == 0);

    auto inner = std::make_shared<ScriptedBackend>(ScriptedBackend::parse(golden_script()));
    LlmAdapter late(std::make_shared<FailOn>(inner, TemplateId::Summarize));
    auto rec2 = answer(running(), kg, cache, late);
    CHECK(rec2.status == AnswerStatus::Fallback);
    CHECK(rec2.answer == "I don't know.");
    CHECK(cache.size() == 0);
}

TEST_CASE("summarize") {
    auto kg = testing::fixture();
    testing::Scripted s("[SUMMARIZE] Question:\nExactly this text.\n");
    Subgraph g;
    g.merge(kg.triples());
    CHECK(summarize(running(), g, s.llm) == "Exactly this text.");
    auto prompt = s.recorder->calls().at(0).prompt;
    for (const auto& t : kg.triples()) CHECK(prompt.find(t.canonical_line()) != std::string::npos);
    CHECK(prompt.find("2018-03-01T00:00:00Z") != std::string::npos);
    CHECK_THROWS_AS(summarize(running(), Subgraph{}, s.llm), UsageError);
}

TEST_CASE("cache domain key") {
    CHECK(cache_domain(testing::fixture("")) == "_global");
    CHECK(cache_domain(testing::fixture("movie")) == "movie");
}

TEST_CASE("routing across graphs") {
    auto movies = testing::fixture("movie");
    auto music = testing::graph_from("Thriller\tperformer\tMichael Jackson\n", "music");
    std::vector<const KnowledgeGraph*> graphs{&music, &movies};
    DescriptionStore store({{"movie", "films", 0}, {"music", "songs", 0}});
    testing::Scripted s(golden_script() + "[DOMAIN_ROUTE] Inception\nREASONING: film\nDOMAIN: movie\n");
    SemanticCache cache;
    auto rec = answer_routed(running(), graphs, store, cache, s.llm);
    CHECK(rec.domain == "movie");
    CHECK(rec.status == AnswerStatus::Answered);
    CHECK(rec.trace.records().front().stage == "llm_call");
    CHECK(s.count(TemplateId::DomainRoute) == 1);

    std::vector<const KnowledgeGraph*> one{&movies};
    s.recorder->clear();
    answer_routed(running(), one, store, cache, s.llm);
    CHECK(s.count(TemplateId::DomainRoute) == 0);
}

TEST_CASE("a 20-question session accumulates the cache") {
    auto f = testing::session_fixture();
    auto kg = testing::graph_from(f.tsv, "movie");
    testing::Scripted s(f.script);
    SemanticCache cache;
    auto warm = prewarm(kg, cache, 4, 11, s.llm);
    CHECK(warm.inserted == cache.size());

    std::size_t answered = 0, hits_on_session_entries = 0;
    std::vector<std::uint64_t> session_ids;
    std::set<std::string> seen_patterns;
    for (const auto& q : f.questions) {
        s.recorder->clear();
        auto rec = answer({q.text}, kg, cache, s.llm);
        CHECK(s.total() <= 3 + ExpansionBounds{}.k_depth);
        if (rec.status == AnswerStatus::Answered) {
            ++answered;
            CHECK(validate(rec.plan_used, kg.vocabulary()).empty());
        }
        CHECK((rec.status == AnswerStatus::Answered) == q.in_graph);
        if (seen_patterns.count(q.pattern)) {
            for (auto id : rec.examples) {
                if (std::find(session_ids.begin(), session_ids.end(), id) != session_ids.end()) {
                    ++hits_on_session_entries;
                    break;
                }
            }
        }
        seen_patterns.insert(q.pattern);
        if (rec.inserted) session_ids.push_back(rec.inserted->id);
    }
    CHECK(answered == 19);
    CHECK(hits_on_session_entries >= 1);
    CHECK(cache.size() == warm.inserted + answered);
}
