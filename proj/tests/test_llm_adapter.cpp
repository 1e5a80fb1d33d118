#include "doctest.h"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/trace.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace cacherag;

namespace {

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("every template body comes from prompts/") {
    auto lib = PromptLibrary::builtin();
    for (auto id : kAllTemplates) {
        auto path = testing::source_path("prompts/" + std::string(template_name(id)) + ".txt");
        REQUIRE(std::filesystem::exists(path));
        auto body = read_all(path);
        while (!body.empty() && body.back() == '\n') body.pop_back();
        std::string builtin = lib.get(id).body;
        while (!builtin.empty() && builtin.back() == '\n') builtin.pop_back();
        CHECK(builtin == body);
        // Each declared slot is used and nothing else is referenced.
        auto referenced = lib.get(id).referenced_slots();
        std::set<std::string> ref(referenced.begin(), referenced.end());
        std::set<std::string> declared;
        for (auto s : declared_slots(id)) declared.emplace(s);
        CHECK(ref == declared);
    }
    CHECK(std::filesystem::directory_iterator(testing::source_path("prompts")) !=
          std::filesystem::directory_iterator());
}

TEST_CASE("template names round-trip") {
    for (auto id : kAllTemplates) CHECK(parse_template_id(template_name(id)) == id);
    CHECK_FALSE(parse_template_id("NOPE").has_value());
}

TEST_CASE("render fills slots and rejects missing ones") {
    auto lib = PromptLibrary::builtin();
    auto prompt = lib.render(TemplateId::IsrExtract, {{"question", "Who directed Inception?"}});
    CHECK(prompt.find("Who directed Inception?") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);
    CHECK_THROWS_AS(lib.render(TemplateId::IsrExtract, {}), UsageError);
    CHECK_THROWS_AS(lib.set({TemplateId::Summarize, "{{question}} {{bogus}}"}), UsageError);
}

TEST_CASE("prompt directory overrides a template") {
    auto dir = std::filesystem::temp_directory_path() / "cacherag_prompt_override";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "SUMMARIZE.txt") << "Q={{question}} T={{time}} F={{subgraph}}";
    auto lib = PromptLibrary::from_directory(dir);
    CHECK(lib.render(TemplateId::Summarize, {{"question", "q"}, {"time", "t"}, {"subgraph", "s"}}) == "Q=q T=t F=s");
    CHECK(lib.get(TemplateId::IsrExtract).body == PromptLibrary::builtin().get(TemplateId::IsrExtract).body);
    std::filesystem::remove_all(dir);
}

TEST_CASE("scripted backend: matching, first rule wins, default") {
    auto backend = register_script({{TemplateId::IsrExtract, "Inception", "ENTITY: Inception"},
                                    {TemplateId::IsrExtract, "Incep", "ENTITY: other"}});
    CHECK(backend.complete(TemplateId::IsrExtract, "about Inception").text == "ENTITY: Inception");
    CHECK(backend.complete(TemplateId::IsrExtract, "about Incep...").text == "ENTITY: other");
    CHECK(backend.complete(TemplateId::Summarize, "about Inception").text == "NA");
    CHECK(backend.complete(TemplateId::IsrExtract, "unrelated").text == "NA");
    CHECK_THROWS_AS(register_script({{TemplateId::IsrExtract, "", "x"}}), UsageError);
}

TEST_CASE("adapter is deterministic over the scripted backend") {
    testing::Scripted s({{TemplateId::IsrExtract, "Inception", "ENTITY: Inception\nCONSTRAINT: director"}});
    Trace trace;
    Slots slots{{"question", "Who directed Inception?"}};
    auto a = s.llm.complete(TemplateId::IsrExtract, slots, &trace);
    auto b = s.llm.complete(TemplateId::IsrExtract, slots, &trace);
    CHECK(a.text == "ENTITY: Inception\nCONSTRAINT: director");
    CHECK(a.text == b.text);
    CHECK(s.llm.calls() == 2);
    CHECK(trace.count("llm_call") == 2);
    CHECK(trace.records()[0].detail["template"] == "ISR_EXTRACT");
    CHECK_THROWS_AS(s.llm.complete(TemplateId::IsrExtract, {}), UsageError);
    CHECK(s.llm.calls() == 2);
}

TEST_CASE("script file format") {
    auto backend = ScriptedBackend::parse(
        "# comment\n"
        "[DISPATCH_JUDGE] a\\tb\n"
        "STATUS: COMPLETE\n"
        "\n"
        "[SUMMARIZE] x\n"
        "line one\n"
        "line two\n"
        "[DEFAULT] fallback\n");
    REQUIRE(backend.rules().size() == 2);
    CHECK(backend.rules()[0].matcher == "a\tb");
    CHECK(backend.rules()[0].response == "STATUS: COMPLETE");
    CHECK(backend.rules()[1].response == "line one\nline two");
    CHECK(backend.default_response() == "fallback");
    CHECK_THROWS_AS(ScriptedBackend::parse("[BOGUS] x\ny\n"), ParseError);
    CHECK_THROWS_AS(ScriptedBackend::parse("text first\n"), ParseError);
    CHECK_THROWS_AS(ScriptedBackend::parse("[SUMMARIZE]\ny\n"), ParseError);
    CHECK_NOTHROW(ScriptedBackend::from_file(testing::source_path("data/golden/golden.script")));
}

TEST_CASE("recording backend keeps every call") {
    testing::Scripted s("[SUMMARIZE] q\nanswer\n");
    s.llm.complete(TemplateId::Summarize, {{"question", "q"}, {"time", "t"}, {"subgraph", "s"}});
    auto calls = s.recorder->calls();
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].response == "answer");
    CHECK(calls[0].prompt.find("\"q\"") != std::string::npos);
    s.recorder->clear();
    CHECK(s.total() == 0);
}

TEST_CASE("http backend retries 5xx and 429, fails fast on 4xx") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth, seen_template, seen_body;
    std::mutex seen_mutex;
    server.Post("/flaky", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        {
            std::lock_guard lock(seen_mutex);
            seen_auth = req.get_header_value("Authorization");
            seen_template = req.get_header_value("X-Cacherag-Template");
            seen_body = req.body;
        }
        if (n == 1) res.status = 503;
        else if (n == 2) res.status = 429;
        else res.set_content("STATUS: COMPLETE", "text/plain");
    });
    server.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    std::string base = "http://127.0.0.1:" + std::to_string(port);
    HttpBackend ok({base + "/flaky", "secret", std::chrono::milliseconds(2000), 2});
    auto c = ok.complete(TemplateId::DispatchJudge, "prompt body");
    CHECK(c.text == "STATUS: COMPLETE");
    CHECK(c.backend == BackendKind::Live);
    CHECK(hits == 3);
    {
        std::lock_guard lock(seen_mutex);
        CHECK(seen_auth == "Bearer secret");
        CHECK(seen_template == "DISPATCH_JUDGE");
        CHECK(seen_body == "prompt body");
    }

    hits = 0;
    HttpBackend bad({base + "/bad", "", std::chrono::milliseconds(2000), 3});
    CHECK_THROWS_AS(bad.complete(TemplateId::Summarize, "x"), TransportError);
    CHECK(hits == 1);

    hits = 0;
    HttpBackend exhausted({base + "/flaky", "", std::chrono::milliseconds(2000), 0});
    CHECK_THROWS_AS(exhausted.complete(TemplateId::Summarize, "x"), TransportError);
    CHECK(hits == 1);

    server.stop();
    thread.join();

    HttpBackend down({base + "/flaky", "", std::chrono::milliseconds(300), 1});
    CHECK_THROWS_AS(down.complete(TemplateId::Summarize, "x"), TransportError);
    CHECK_THROWS_AS(HttpBackend({"https://example.com", "", std::chrono::milliseconds(1), 0}), UsageError);
}
