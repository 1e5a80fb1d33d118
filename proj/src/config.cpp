#include "cacherag/config.hpp"

#include <cstdlib>
#include <fstream>

#include "cacherag/error.hpp"
#include "cacherag/text.hpp"

namespace cacherag {

namespace {

double to_double(std::string_view key, std::string_view v) {
    std::string s(text::trim(v));
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) throw UsageError(std::string(key) + ": expected a number, got '" + s + "'");
    return d;
}

std::size_t to_size(std::string_view key, std::string_view v) {
    std::string s(text::trim(v));
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size() || s.front() == '-') {
        throw UsageError(std::string(key) + ": expected a non-negative integer, got '" + s + "'");
    }
    return static_cast<std::size_t>(n);
}

}  // namespace

const std::vector<std::string>& Config::keys() {
    static const std::vector<std::string> k = {
        "lambda", "k",      "k_depth",    "k_degree", "capacity", "relevance_floor",
        "llm",    "script", "kg",         "domain",   "prompt_dir", "cache_file",
        "domains", "aspects", "seed"};
    return k;
}

void Config::set(std::string_view key_in, std::string_view value_in) {
    std::string key = text::to_lower(text::trim(key_in));
    std::string value(text::trim(value_in));
    if (key == "lambda") {
        cache.lambda = to_double(key, value);
    } else if (key == "k") {
        cache.k = to_size(key, value);
    } else if (key == "k_depth") {
        bounds.k_depth = to_size(key, value);
    } else if (key == "k_degree") {
        bounds.k_degree = to_size(key, value);
    } else if (key == "capacity") {
        auto lower = text::to_lower(value);
        if (lower.empty() || lower == "none" || lower == "unbounded") {
            cache.capacity.reset();
        } else {
            cache.capacity = to_size(key, value);
        }
    } else if (key == "relevance_floor") {
        cache.relevance_floor = to_double(key, value);
    } else if (key == "llm") {
        auto lower = text::to_lower(value);
        if (lower != "script" && lower != "live") throw UsageError("llm must be 'script' or 'live'");
        llm = lower;
    } else if (key == "script") {
        script = value;
    } else if (key == "kg") {
        kg.clear();
        for (const auto& p : text::split(value, ',')) {
            auto t = std::string(text::trim(p));
            if (!t.empty()) kg.push_back(t);
        }
    } else if (key == "domain") {
        domain = value;
    } else if (key == "prompt_dir") {
        prompt_dir = value;
    } else if (key == "cache_file") {
        cache_file = value;
    } else if (key == "domains") {
        domains = value;
    } else if (key == "aspects") {
        aspects = value;
    } else if (key == "seed") {
        seed = to_size(key, value);
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

void Config::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
        try {
            set(t.substr(0, eq), text::strip_quotes(text::trim(t.substr(eq + 1))));
        } catch (const UsageError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

void Config::apply_env() {
    for (const auto& key : keys()) {
        std::string name = "CACHERAG_";
        for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(name.c_str())) set(key, v);
    }
}

void Config::validate() const {
    cache.validate();
    bounds.validate();
}

nlohmann::ordered_json Config::to_json() const {
    nlohmann::ordered_json j;
    j["lambda"] = cache.lambda;
    j["k"] = cache.k;
    j["k_depth"] = bounds.k_depth;
    j["k_degree"] = bounds.k_degree;
    j["capacity"] = cache.capacity ? nlohmann::ordered_json(*cache.capacity) : nlohmann::ordered_json(nullptr);
    j["relevance_floor"] = cache.relevance_floor;
    j["llm"] = llm;
    j["script"] = script;
    j["kg"] = kg;
    j["domain"] = domain;
    j["prompt_dir"] = prompt_dir;
    j["cache_file"] = cache_file;
    j["domains"] = domains;
    j["aspects"] = aspects;
    j["seed"] = seed;
    return j;
}

}  // namespace cacherag
