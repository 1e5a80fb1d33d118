#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cacherag/expansion.hpp"
#include "cacherag/semantic_cache.hpp"
#include "json.hpp"

namespace cacherag {

// Effective settings. Layers apply in order: defaults, config file,
// CACHERAG_<KEY> environment variables, command-line flags.
struct Config {
    CacheConfig cache;
    ExpansionBounds bounds;
    std::string llm = "script";             // "script" or "live"
    std::string script;                     // scripted backend file
    std::vector<std::string> kg;            // triple files
    std::string domain;                     // label for a single graph; "" = _global
    std::string prompt_dir;                 // overrides compiled-in prompts when set
    std::string cache_file;                 // JSONL cache to load and persist
    std::string domains;                    // router description file
    std::string aspects;                    // aspect table; built-in when empty
    std::uint64_t seed = 42;

    // Recognized keys, in documentation order.
    static const std::vector<std::string>& keys();

    // Throws UsageError for an unknown key or a bad value.
    void set(std::string_view key, std::string_view value);
    void load_file(const std::filesystem::path& path);
    void apply_env();

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

}  // namespace cacherag
