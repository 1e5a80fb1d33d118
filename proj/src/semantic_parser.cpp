#include "cacherag/semantic_parser.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/text.hpp"
#include "cacherag/trace.hpp"

namespace cacherag {

namespace {

constexpr std::string_view kQuestionWords[] = {
    "which", "who",  "whom", "whose", "what", "when", "where", "why",  "how",  "is",
    "are",   "was",  "were", "did",   "does", "do",   "can",   "could", "name", "list",
    "tell",  "give", "in",   "the",   "a",    "an",   "has",   "have", "had"};

bool is_question_word(std::string_view word) {
    auto lower = text::to_lower(word);
    return std::find(std::begin(kQuestionWords), std::end(kQuestionWords), lower) !=
           std::end(kQuestionWords);
}

std::string strip_word_punct(std::string_view word) {
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.front())) &&
           word.front() != '"') {
        word.remove_prefix(1);
    }
    while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) {
        word.remove_suffix(1);
    }
    if (!word.empty() && word.front() == '"') word.remove_prefix(1);
    return std::string(word);
}

std::string clean_value(std::string_view v) {
    std::string s = text::strip_quotes(v);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = text::strip_quotes(s.substr(1, s.size() - 2));
    return s;
}

}  // namespace

// --- QueryContext ----------------------------------------------------------

std::string QueryContext::time_iso() const {
    std::time_t t = std::chrono::system_clock::to_time_t(query_time);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::chrono::system_clock::time_point QueryContext::parse_time(std::string_view iso) {
    std::tm tm{};
    std::string s(text::trim(iso));
    std::istringstream in(s);
    if (s.size() == 10) {
        in >> std::get_time(&tm, "%Y-%m-%d");
    } else {
        in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    }
    if (in.fail()) throw UsageError("query time must be ISO-8601 (YYYY-MM-DD[THH:MM:SS]): " + s);
    return std::chrono::system_clock::from_time_t(timegm(&tm));
}

// --- ISR -------------------------------------------------------------------

Isr parse_isr(std::string_view completion) {
    Isr isr;
    for (const auto& [key, value] : text::parse_keyed_lines(completion)) {
        if (key == "ENTITY" || key == "MAIN_ENTITY") {
            if (isr.raw_entity.empty()) isr.raw_entity = clean_value(value);
        } else if (key == "CONSTRAINT") {
            auto c = clean_value(value);
            if (!c.empty()) isr.constraints.push_back(std::move(c));
        } else if (key == "DOMAIN") {
            if (isr.domain_hint.empty()) isr.domain_hint = clean_value(value);
        }
    }
    if (isr.raw_entity.empty()) throw ParseError("ISR completion has no ENTITY line");
    return isr;
}

Isr extract_isr(const QueryContext& ctx, const LlmAdapter& llm, Trace* trace) {
    auto completion = llm.complete(TemplateId::IsrExtract, {{"question", ctx.question}}, trace);
    return parse_isr(completion.text);
}

std::string fallback_entity(std::string_view question) {
    std::vector<std::string> words;
    std::istringstream in{std::string(question)};
    for (std::string w; in >> w;) words.push_back(w);

    std::string best;
    std::string current;
    bool closes_span = false;
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string word = strip_word_punct(words[i]);
        bool capitalized = !word.empty() && std::isupper(static_cast<unsigned char>(word.front()));
        if (i == 0 && is_question_word(word)) capitalized = false;
        if (capitalized) {
            if (!current.empty()) current += ' ';
            current += word;
        }
        // Trailing punctuation ("Inception?", "Nolan,") ends the span.
        closes_span = !capitalized || words[i].size() != word.size() + (words[i].front() == '"');
        if (closes_span || i + 1 == words.size()) {
            if (current.size() > best.size()) best = current;
            current.clear();
        }
    }
    return best;
}

std::vector<std::string> schema_leaks(const Isr& isr, const std::set<std::string>& vocabulary) {
    std::vector<std::string> out;
    for (const auto& c : isr.constraints) {
        if (vocabulary.count(c)) out.push_back(c);
    }
    return out;
}

// --- Domain routing --------------------------------------------------------

std::string format_descriptions(std::span<const DomainDescription> descriptions) {
    std::string out;
    for (const auto& d : descriptions) {
        if (!out.empty()) out += '\n';
        out += "DOMAIN: " + d.domain + "\nVERSION: " + std::to_string(d.version) +
               "\nDESC: " + d.description + "\n";
    }
    return out;
}

std::vector<DomainDescription> parse_descriptions(std::string_view source) {
    std::vector<DomainDescription> out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(source)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto keyed = text::parse_keyed_lines(line);
        if (keyed.empty()) throw ParseError("expected DOMAIN:, VERSION: or DESC:", line_no);
        const auto& [key, value] = keyed.front();
        if (key == "DOMAIN") {
            out.push_back({value, {}, 0});
        } else if (out.empty()) {
            throw ParseError(key + " before any DOMAIN line", line_no);
        } else if (key == "VERSION") {
            out.back().version = std::stoull(value);
        } else if (key == "DESC") {
            out.back().description = value;
        } else {
            throw ParseError("unknown key " + key, line_no);
        }
    }
    return out;
}

static std::string description_block(std::span<const DomainDescription> descriptions) {
    std::string out;
    for (const auto& d : descriptions) out += "[" + d.domain + "]: " + d.description + "\n";
    return out;
}

RouteDecision route_domain(const QueryContext& ctx, std::span<const DomainDescription> descriptions,
                           const LlmAdapter& llm, Trace* trace) {
    if (descriptions.empty()) throw UsageError("route_domain needs at least one domain");
    RouteDecision decision;
    if (descriptions.size() == 1) {
        decision.domain = descriptions.front().domain;
        if (trace) trace->add("route", {{"domain", decision.domain}, {"llm", false}});
        return decision;
    }
    decision.consulted_llm = true;
    auto completion = llm.complete(
        TemplateId::DomainRoute,
        {{"question", ctx.question}, {"descriptions", description_block(descriptions)}}, trace);
    std::string named;
    for (const auto& [key, value] : text::parse_keyed_lines(completion.text)) {
        if (key == "DOMAIN" && named.empty()) named = clean_value(value);
        if (key == "REASONING") {
            if (!decision.reasoning.empty()) decision.reasoning += ' ';
            decision.reasoning += value;
        }
    }
    auto lowered = text::to_lower(named);
    for (const auto& d : descriptions) {
        if (text::to_lower(d.domain) == lowered) {
            decision.domain = d.domain;
            break;
        }
    }
    if (decision.domain.empty()) {
        decision.domain = descriptions.front().domain;
        decision.fell_back = true;
        if (trace) trace->flag("unknown_domain", {{"named", named}, {"used", decision.domain}});
    }
    if (trace) {
        trace->add("route", {{"domain", decision.domain}, {"llm", true}, {"fell_back", decision.fell_back}});
    }
    return decision;
}

std::vector<DomainDescription> update_descriptions(std::string_view misrouted,
                                                   std::string_view correct,
                                                   const QueryContext& ctx,
                                                   std::string_view reasoning,
                                                   std::span<const DomainDescription> descriptions,
                                                   const LlmAdapter& llm, Trace* trace) {
    if (misrouted == correct) {
        throw UsageError("update_descriptions: misrouted and correct domain are the same");
    }
    auto completion = llm.complete(TemplateId::DomainDescUpdate,
                                   {{"descriptions", description_block(descriptions)},
                                    {"previous", std::string(misrouted)},
                                    {"question", ctx.question},
                                    {"reasoning", std::string(reasoning)},
                                    {"correct", std::string(correct)}},
                                   trace);

    std::vector<DomainDescription> updated(descriptions.begin(), descriptions.end());
    std::vector<std::string> proposed(updated.size());
    for (const auto& [key, value] : text::parse_keyed_lines(completion.text)) {
        if (key != "DESC") continue;
        auto bar = value.find('|');
        if (bar == std::string::npos) continue;
        auto name = text::to_lower(clean_value(std::string_view(value).substr(0, bar)));
        auto desc = std::string(text::trim(std::string_view(value).substr(bar + 1)));
        for (std::size_t i = 0; i < updated.size(); ++i) {
            if (text::to_lower(updated[i].domain) == name && proposed[i].empty()) proposed[i] = desc;
        }
    }
    for (std::size_t i = 0; i < updated.size(); ++i) {
        ++updated[i].version;
        if (proposed[i].empty()) {
            if (trace) trace->flag("description_kept", {{"domain", updated[i].domain}});
            continue;
        }
        // Distinct domains must keep distinct texts; a clash keeps the old one.
        bool clash = false;
        for (std::size_t j = 0; j < updated.size(); ++j) {
            if (j != i && updated[j].description == proposed[i]) clash = true;
        }
        if (clash) {
            if (trace) trace->flag("description_clash", {{"domain", updated[i].domain}});
            continue;
        }
        updated[i].description = proposed[i];
    }
    return updated;
}

DescriptionStore::DescriptionStore(std::vector<DomainDescription> initial)
    : descriptions_(std::move(initial)) {}

std::vector<DomainDescription> DescriptionStore::snapshot() const {
    std::shared_lock lock(mutex_);
    return descriptions_;
}

void DescriptionStore::replace(std::vector<DomainDescription> descriptions) {
    std::unique_lock lock(mutex_);
    descriptions_ = std::move(descriptions);
}

RouteDecision DescriptionStore::route(const QueryContext& ctx, const LlmAdapter& llm,
                                      Trace* trace) const {
    std::shared_lock lock(mutex_);
    return route_domain(ctx, descriptions_, llm, trace);
}

void DescriptionStore::record_misroute(std::string_view misrouted, std::string_view correct,
                                       const QueryContext& ctx, std::string_view reasoning,
                                       const LlmAdapter& llm, Trace* trace) {
    std::unique_lock lock(mutex_);
    descriptions_ = update_descriptions(misrouted, correct, ctx, reasoning, descriptions_, llm, trace);
}

// --- Aspects ---------------------------------------------------------------

AspectTable::AspectTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (auto& [aspect, keywords] : entries_) {
        if (aspect.empty()) throw UsageError("aspect table entry with empty name");
        for (auto& kw : keywords) kw = text::to_lower(kw);
    }
}

AspectTable AspectTable::parse(std::string_view source) {
    std::vector<Entry> entries;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(source)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected `aspect = [keywords]`", line_no);
        std::string aspect(text::trim(line.substr(0, eq)));
        auto list = text::trim(line.substr(eq + 1));
        if (aspect.empty() || list.size() < 2 || list.front() != '[' || list.back() != ']') {
            throw ParseError("expected `aspect = [keywords]`", line_no);
        }
        std::vector<std::string> keywords;
        for (const auto& kw : text::split(list.substr(1, list.size() - 2), ',')) {
            auto cleaned = text::strip_quotes(kw);
            if (!cleaned.empty()) keywords.push_back(cleaned);
        }
        entries.emplace_back(std::move(aspect), std::move(keywords));
    }
    return AspectTable(std::move(entries));
}

AspectTable AspectTable::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open aspect table " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const AspectTable& AspectTable::defaults() {
    static const AspectTable table({
        {"award", {"award", "nominat", "oscar", "prize", "won"}},
        {"cast", {"cast", "actor", "actress", "star"}},
        {"director", {"direct", "filmmaker"}},
        {"release", {"release", "premiere", "came out"}},
        {"genre", {"genre", "kind of film"}},
    });
    return table;
}

std::string AspectTable::derive(const Isr& isr) const {
    std::vector<std::string> lowered;
    lowered.reserve(isr.constraints.size());
    for (const auto& c : isr.constraints) lowered.push_back(text::to_lower(c));
    for (const auto& [aspect, keywords] : entries_) {
        for (const auto& c : lowered) {
            for (const auto& kw : keywords) {
                if (c.find(kw) != std::string::npos) return aspect;
            }
        }
    }
    return std::string(kGeneralAspect);
}

std::string derive_aspect(const Isr& isr, const AspectTable& table) {
    return table.derive(isr);
}

}  // namespace cacherag
