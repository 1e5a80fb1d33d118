#include "cacherag/trace.hpp"

namespace cacherag {

void Trace::add(std::string stage, nlohmann::json detail) {
    records_.push_back({records_.size(), std::move(stage), std::move(detail)});
}

void Trace::flag(std::string_view what, nlohmann::json detail) {
    detail["flag"] = std::string(what);
    add("flag", std::move(detail));
}

std::size_t Trace::count(std::string_view stage) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += r.stage == stage;
    return n;
}

std::vector<const TraceRecord*> Trace::of(std::string_view stage) const {
    std::vector<const TraceRecord*> out;
    for (const auto& r : records_) {
        if (r.stage == stage) out.push_back(&r);
    }
    return out;
}

void Trace::write_jsonl(std::ostream& out) const {
    for (const auto& r : records_) {
        nlohmann::json line{{"seq", r.seq}, {"stage", r.stage}, {"detail", r.detail}};
        out << line.dump() << '\n';
    }
}

}  // namespace cacherag
