#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cacherag {

struct TraceRecord {
    std::size_t seq = 0;
    std::string stage;
    nlohmann::json detail;
};

// Ordered log of one question's execution. Stages in use:
//   llm_call, isr, route, cache_retrieve, compile, execute, dispatch,
//   expansion, recheck, summarize, fallback, cache_insert, flag, config
// One record per event; not shared between threads.
class Trace {
public:
    void add(std::string stage, nlohmann::json detail = nlohmann::json::object());
    void flag(std::string_view what, nlohmann::json detail = nlohmann::json::object());

    const std::vector<TraceRecord>& records() const { return records_; }
    std::size_t count(std::string_view stage) const;
    std::vector<const TraceRecord*> of(std::string_view stage) const;

    // One JSON object per line: {"seq":..,"stage":..,"detail":{..}}.
    void write_jsonl(std::ostream& out) const;

private:
    std::vector<TraceRecord> records_;
};

}  // namespace cacherag
