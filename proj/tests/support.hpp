#pragma once

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cacherag/kg_store.hpp"
#include "cacherag/llm_adapter.hpp"

namespace testing {

inline std::filesystem::path source_path(const std::string& rel) {
    return std::filesystem::path(CACHERAG_SOURCE_DIR) / rel;
}

inline cacherag::KnowledgeGraph fixture(std::string label = "movie") {
    return cacherag::load_triples_file(source_path("data/inception.tsv").string(), std::move(label));
}

inline cacherag::KnowledgeGraph graph_from(const std::string& tsv, std::string label = "movie") {
    std::istringstream in(tsv);
    return cacherag::load_triples(in, std::move(label));
}

// Scripted adapter that also records every call.
struct Scripted {
    std::shared_ptr<cacherag::RecordingBackend> recorder;
    cacherag::LlmAdapter llm;

    explicit Scripted(const std::string& script)
        : Scripted(std::make_shared<cacherag::RecordingBackend>(
              std::make_shared<cacherag::ScriptedBackend>(cacherag::ScriptedBackend::parse(script)))) {}

    explicit Scripted(std::vector<cacherag::ScriptRule> rules, std::string fallback = "NA")
        : Scripted(std::make_shared<cacherag::RecordingBackend>(std::make_shared<cacherag::ScriptedBackend>(
              std::move(rules), std::move(fallback)))) {}

    std::size_t count(cacherag::TemplateId id) const { return recorder->count(id); }
    std::size_t total() const { return recorder->calls().size(); }

private:
    explicit Scripted(std::shared_ptr<cacherag::RecordingBackend> r) : recorder(r), llm(r) {}
};

}  // namespace testing
