#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cacherag {

class Trace;

enum class TemplateId {
    IsrExtract,
    QueryCompile,
    DispatchJudge,
    Summarize,
    AutogenQuestions,
    AutogenFilter,
    DomainRoute,
    DomainDescUpdate,
    DirectAnswer,
};

inline constexpr std::array<TemplateId, 9> kAllTemplates = {
    TemplateId::IsrExtract,       TemplateId::QueryCompile,  TemplateId::DispatchJudge,
    TemplateId::Summarize,        TemplateId::AutogenQuestions, TemplateId::AutogenFilter,
    TemplateId::DomainRoute,      TemplateId::DomainDescUpdate, TemplateId::DirectAnswer,
};

// "ISR_EXTRACT", "QUERY_COMPILE", ...; also the prompt file stem.
std::string_view template_name(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view name);

// Slots the caller must supply for each template.
std::span<const std::string_view> declared_slots(TemplateId id);

using Slots = std::map<std::string, std::string, std::less<>>;

// Template body with {{slot}} placeholders.
struct PromptTemplate {
    TemplateId id;
    std::string body;

    std::vector<std::string> referenced_slots() const;
    std::string fill(const Slots& slots) const;
};

class PromptLibrary {
public:
    // Bodies compiled in from prompts/*.txt.
    static PromptLibrary builtin();
    // Starts from builtin() and replaces every template whose <NAME>.txt exists in dir.
    static PromptLibrary from_directory(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateId id) const;
    void set(PromptTemplate tmpl);

    // Fills the template; every declared slot must be present.
    std::string render(TemplateId id, const Slots& slots) const;

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

enum class BackendKind { Live, Scripted };

struct Completion {
    std::string text;
    std::chrono::nanoseconds latency{0};
    BackendKind backend = BackendKind::Scripted;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual Completion complete(TemplateId id, const std::string& prompt) const = 0;
};

struct ScriptRule {
    TemplateId id;
    std::string matcher;   // substring of the filled prompt
    std::string response;
};

// Deterministic backend: the first rule whose template matches and whose
// matcher occurs in the prompt answers; otherwise the default ("NA").
class ScriptedBackend final : public LlmBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRule> rules, std::string default_response = "NA");

    // Script file format:
    //   # comment
    //   [TEMPLATE_ID] matcher       (matcher may use \t, \n, \\ escapes)
    //   response line 1
    //   response line 2
    //   [DEFAULT] response for unmatched prompts
    static ScriptedBackend parse(std::string_view script);
    static ScriptedBackend from_file(const std::filesystem::path& path);

    Completion complete(TemplateId id, const std::string& prompt) const override;

    const std::vector<ScriptRule>& rules() const { return rules_; }
    const std::string& default_response() const { return default_response_; }

private:
    std::vector<ScriptRule> rules_;
    std::string default_response_;
};

ScriptedBackend register_script(std::vector<ScriptRule> rules, std::string default_response = "NA");

struct HttpBackendConfig {
    std::string url;  // http://host[:port][/path]
    std::string token;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;

    // CACHERAG_LLM_URL, CACHERAG_LLM_TOKEN, CACHERAG_LLM_TIMEOUT_MS, CACHERAG_LLM_RETRIES.
    static HttpBackendConfig from_env();
};

// POSTs the filled prompt as text/plain with a bearer token and the template
// name in X-Cacherag-Template; the response body is the completion. Connection
// failures, 429 and 5xx are retried; anything else fails immediately.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    Completion complete(TemplateId id, const std::string& prompt) const override;

private:
    HttpBackendConfig config_;
    std::string origin_;
    std::string path_;
};

// Test helper: forwards to another backend and remembers every prompt.
class RecordingBackend final : public LlmBackend {
public:
    struct Call {
        TemplateId id;
        std::string prompt;
        std::string response;
    };

    explicit RecordingBackend(std::shared_ptr<const LlmBackend> inner) : inner_(std::move(inner)) {}
    Completion complete(TemplateId id, const std::string& prompt) const override;

    std::vector<Call> calls() const;
    std::size_t count(TemplateId id) const;
    void clear();

private:
    std::shared_ptr<const LlmBackend> inner_;
    mutable std::mutex mutex_;
    mutable std::vector<Call> calls_;
};

// The one entry point for model calls: renders the template, invokes the
// backend, and logs an llm_call trace record when a trace is given.
class LlmAdapter {
public:
    explicit LlmAdapter(std::shared_ptr<const LlmBackend> backend,
                        PromptLibrary prompts = PromptLibrary::builtin());

    Completion complete(TemplateId id, const Slots& slots, Trace* trace = nullptr) const;

    const PromptLibrary& prompts() const { return prompts_; }
    std::uint64_t calls() const { return calls_.load(); }

private:
    std::shared_ptr<const LlmBackend> backend_;
    PromptLibrary prompts_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace cacherag
