#include "cacherag/llm_adapter.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cacherag/error.hpp"
#include "cacherag/text.hpp"
#include "cacherag/trace.hpp"
#include "httplib.h"

namespace cacherag {

namespace {

struct BuiltinPrompt {
    std::string_view name;
    std::string_view body;
};

// Generated at configure time from prompts/*.txt.
constexpr BuiltinPrompt kBuiltinPrompts[] = {
#include "prompt_bodies.inc"
};

using Clock = std::chrono::steady_clock;

constexpr std::string_view kIsrSlots[] = {"question"};
constexpr std::string_view kCompileSlots[] = {"question", "entity", "constraints", "schema",
                                              "examples"};
constexpr std::string_view kDispatchSlots[] = {"question", "time", "subgraph", "examples"};
constexpr std::string_view kSummarizeSlots[] = {"question", "time", "subgraph"};
constexpr std::string_view kAutogenSlots[] = {"triples"};
constexpr std::string_view kFilterSlots[] = {"candidates"};
constexpr std::string_view kRouteSlots[] = {"question", "descriptions"};
constexpr std::string_view kDescUpdateSlots[] = {"descriptions", "previous", "question",
                                                 "reasoning", "correct"};
constexpr std::string_view kDirectSlots[] = {"question", "time"};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string_view template_name(TemplateId id) {
    switch (id) {
        case TemplateId::IsrExtract: return "ISR_EXTRACT";
        case TemplateId::QueryCompile: return "QUERY_COMPILE";
        case TemplateId::DispatchJudge: return "DISPATCH_JUDGE";
        case TemplateId::Summarize: return "SUMMARIZE";
        case TemplateId::AutogenQuestions: return "AUTOGEN_QUESTIONS";
        case TemplateId::AutogenFilter: return "AUTOGEN_FILTER";
        case TemplateId::DomainRoute: return "DOMAIN_ROUTE";
        case TemplateId::DomainDescUpdate: return "DOMAIN_DESC_UPDATE";
        case TemplateId::DirectAnswer: return "DIRECT_ANSWER";
    }
    return "UNKNOWN";
}

std::optional<TemplateId> parse_template_id(std::string_view name) {
    for (auto id : kAllTemplates) {
        if (template_name(id) == name) return id;
    }
    return std::nullopt;
}

std::span<const std::string_view> declared_slots(TemplateId id) {
    switch (id) {
        case TemplateId::IsrExtract: return kIsrSlots;
        case TemplateId::QueryCompile: return kCompileSlots;
        case TemplateId::DispatchJudge: return kDispatchSlots;
        case TemplateId::Summarize: return kSummarizeSlots;
        case TemplateId::AutogenQuestions: return kAutogenSlots;
        case TemplateId::AutogenFilter: return kFilterSlots;
        case TemplateId::DomainRoute: return kRouteSlots;
        case TemplateId::DomainDescUpdate: return kDescUpdateSlots;
        case TemplateId::DirectAnswer: return kDirectSlots;
    }
    return {};
}

// --- Templates -------------------------------------------------------------

std::vector<std::string> PromptTemplate::referenced_slots() const {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string::npos) {
        auto end = body.find("}}", pos + 2);
        if (end == std::string::npos) break;
        std::string name(text::trim(std::string_view(body).substr(pos + 2, end - pos - 2)));
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        pos = end + 2;
    }
    return out;
}

std::string PromptTemplate::fill(const Slots& slots) const {
    std::string out;
    out.reserve(body.size() + 256);
    std::size_t pos = 0;
    while (true) {
        auto open = body.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        out.append(body, pos, open - pos);
        auto name = text::trim(std::string_view(body).substr(open + 2, close - open - 2));
        auto it = slots.find(name);
        if (it == slots.end()) {
            throw UsageError("missing slot '" + std::string(name) + "' for template " +
                             std::string(template_name(id)));
        }
        out += it->second;
        pos = close + 2;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& p : kBuiltinPrompts) {
        auto id = parse_template_id(p.name);
        if (!id) continue;
        lib.set({*id, std::string(p.body)});
    }
    for (auto id : kAllTemplates) {
        if (!lib.templates_.count(id)) {
            throw UsageError("no builtin prompt for " + std::string(template_name(id)));
        }
    }
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    for (auto id : kAllTemplates) {
        auto path = dir / (std::string(template_name(id)) + ".txt");
        if (std::filesystem::exists(path)) lib.set({id, read_file(path)});
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw UsageError("no prompt registered for " + std::string(template_name(id)));
    }
    return it->second;
}

void PromptLibrary::set(PromptTemplate tmpl) {
    auto declared = declared_slots(tmpl.id);
    for (const auto& slot : tmpl.referenced_slots()) {
        if (std::find(declared.begin(), declared.end(), slot) == declared.end()) {
            throw UsageError("template " + std::string(template_name(tmpl.id)) +
                             " references undeclared slot '" + slot + "'");
        }
    }
    auto id = tmpl.id;
    templates_.insert_or_assign(id, std::move(tmpl));
}

std::string PromptLibrary::render(TemplateId id, const Slots& slots) const {
    for (auto slot : declared_slots(id)) {
        if (slots.find(slot) == slots.end()) {
            throw UsageError("missing slot '" + std::string(slot) + "' for template " +
                             std::string(template_name(id)));
        }
    }
    return get(id).fill(slots);
}

// --- Scripted backend ------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::string default_response)
    : rules_(std::move(rules)), default_response_(std::move(default_response)) {
    for (const auto& rule : rules_) {
        if (rule.matcher.empty()) {
            throw UsageError("script rule for " + std::string(template_name(rule.id)) +
                             " has an empty matcher");
        }
    }
}

ScriptedBackend ScriptedBackend::parse(std::string_view script) {
    std::vector<ScriptRule> rules;
    std::string default_response = "NA";
    std::vector<std::string> body;
    enum class Target { None, Rule, Default } target = Target::None;

    auto flush = [&] {
        while (!body.empty() && text::trim(body.back()).empty()) body.pop_back();
        std::string response = text::join(body, "\n");
        body.clear();
        if (target == Target::Rule) rules.back().response = std::move(response);
        if (target == Target::Default && !response.empty()) {
            default_response += "\n" + response;
        }
    };

    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(script)) {
        ++line_no;
        if (!line.empty() && line.front() == '#') continue;
        if (!line.empty() && line.front() == '[') {
            auto close = line.find(']');
            if (close == std::string::npos) throw ParseError("unterminated rule header", line_no);
            std::string name = line.substr(1, close - 1);
            std::string rest(text::trim(std::string_view(line).substr(close + 1)));
            flush();
            if (name == "DEFAULT") {
                default_response = text::unescape(rest);
                target = Target::Default;
                continue;
            }
            auto id = parse_template_id(name);
            if (!id) throw ParseError("unknown template id '" + name + "'", line_no);
            if (rest.empty()) throw ParseError("rule for " + name + " has an empty matcher", line_no);
            rules.push_back({*id, text::unescape(rest), {}});
            target = Target::Rule;
            continue;
        }
        if (target == Target::None) {
            if (text::trim(line).empty()) continue;
            throw ParseError("response text before any rule header", line_no);
        }
        body.push_back(line);
    }
    flush();
    return ScriptedBackend(std::move(rules), std::move(default_response));
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    return parse(read_file(path));
}

Completion ScriptedBackend::complete(TemplateId id, const std::string& prompt) const {
    auto start = Clock::now();
    for (const auto& rule : rules_) {
        if (rule.id == id && prompt.find(rule.matcher) != std::string::npos) {
            return {rule.response, Clock::now() - start, BackendKind::Scripted};
        }
    }
    return {default_response_, Clock::now() - start, BackendKind::Scripted};
}

ScriptedBackend register_script(std::vector<ScriptRule> rules, std::string default_response) {
    return ScriptedBackend(std::move(rules), std::move(default_response));
}

// --- HTTP backend ----------------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig cfg;
    if (const char* url = std::getenv("CACHERAG_LLM_URL")) cfg.url = url;
    if (const char* token = std::getenv("CACHERAG_LLM_TOKEN")) cfg.token = token;
    if (const char* ms = std::getenv("CACHERAG_LLM_TIMEOUT_MS")) {
        cfg.timeout = std::chrono::milliseconds(std::strtoll(ms, nullptr, 10));
    }
    if (const char* retries = std::getenv("CACHERAG_LLM_RETRIES")) {
        cfg.max_retries = std::atoi(retries);
    }
    return cfg;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const std::string& url = config_.url;
    auto scheme = url.find("://");
    if (url.empty() || scheme == std::string::npos || url.substr(0, scheme) != "http") {
        throw UsageError("live backend needs an http:// URL (CACHERAG_LLM_URL), got '" + url + "'");
    }
    auto path_start = url.find('/', scheme + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (config_.max_retries < 0) throw UsageError("max_retries must be >= 0");
}

Completion HttpBackend::complete(TemplateId id, const std::string& prompt) const {
    auto start = Clock::now();
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers{{"X-Cacherag-Template", std::string(template_name(id))}};
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        auto res = client.Post(path_, headers, prompt, "text/plain");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            return {res->body, Clock::now() - start, BackendKind::Live};
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) break;
    }
    throw TransportError("live backend failed after " + std::to_string(config_.max_retries + 1) +
                         " attempt(s): " + last_error);
}

// --- Recording backend -----------------------------------------------------

Completion RecordingBackend::complete(TemplateId id, const std::string& prompt) const {
    auto completion = inner_->complete(id, prompt);
    std::lock_guard lock(mutex_);
    calls_.push_back({id, prompt, completion.text});
    return completion;
}

std::vector<RecordingBackend::Call> RecordingBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t RecordingBackend::count(TemplateId id) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [&](const Call& c) { return c.id == id; }));
}

void RecordingBackend::clear() {
    std::lock_guard lock(mutex_);
    calls_.clear();
}

// --- Adapter ---------------------------------------------------------------

LlmAdapter::LlmAdapter(std::shared_ptr<const LlmBackend> backend, PromptLibrary prompts)
    : backend_(std::move(backend)), prompts_(std::move(prompts)) {
    if (!backend_) throw UsageError("LlmAdapter needs a backend");
}

Completion LlmAdapter::complete(TemplateId id, const Slots& slots, Trace* trace) const {
    std::string prompt = prompts_.render(id, slots);
    calls_.fetch_add(1);
    try {
        auto completion = backend_->complete(id, prompt);
        if (trace) {
            trace->add("llm_call", {{"template", template_name(id)},
                                    {"prompt_bytes", prompt.size()},
                                    {"response", completion.text},
                                    {"latency_ns", completion.latency.count()},
                                    {"backend", completion.backend == BackendKind::Live ? "live"
                                                                                        : "scripted"}});
        }
        return completion;
    } catch (const TransportError& e) {
        if (trace) {
            trace->add("llm_call", {{"template", template_name(id)},
                                    {"prompt_bytes", prompt.size()},
                                    {"error", e.what()}});
        }
        throw;
    }
}

}  // namespace cacherag
