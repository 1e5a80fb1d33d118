#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cacherag {

class LlmAdapter;
class Trace;

struct QueryContext {
    std::string question;
    std::chrono::system_clock::time_point query_time = std::chrono::system_clock::now();

    // UTC, seconds precision: 2024-03-01T12:00:00Z
    std::string time_iso() const;
    static std::chrono::system_clock::time_point parse_time(std::string_view iso);
};

// Schema-agnostic reading of a question: topic entity, natural-language
// constraints and a domain hint.
struct Isr {
    std::string raw_entity;
    std::vector<std::string> constraints;
    std::string domain_hint;
    bool entity_from_fallback = false;

    friend bool operator==(const Isr&, const Isr&) = default;
};

// Parses ENTITY:, CONSTRAINT: (repeatable) and DOMAIN: lines. Throws
// ParseError when no non-empty ENTITY line is present.
Isr parse_isr(std::string_view completion);

// One ISR_EXTRACT call. Throws ParseError when the completion has no entity.
Isr extract_isr(const QueryContext& ctx, const LlmAdapter& llm, Trace* trace = nullptr);

// Longest run of capitalized words, ignoring a leading question word.
// Empty when the question has none.
std::string fallback_entity(std::string_view question);

// Constraints that are literally predicate identifiers of the vocabulary.
std::vector<std::string> schema_leaks(const Isr& isr, const std::set<std::string>& vocabulary);

struct DomainDescription {
    std::string domain;
    std::string description;
    std::uint64_t version = 0;

    friend bool operator==(const DomainDescription&, const DomainDescription&) = default;
};

struct RouteDecision {
    std::string domain;
    std::string reasoning;
    bool fell_back = false;   // completion named no known domain
    bool consulted_llm = false;
};

RouteDecision route_domain(const QueryContext& ctx, std::span<const DomainDescription> descriptions,
                           const LlmAdapter& llm, Trace* trace = nullptr);

// Rewrites every description after a misrouted question. `misrouted` is the
// domain the router picked, `correct` the one it should have picked. Each
// domain's version is bumped; domains absent from the completion keep their
// text.
std::vector<DomainDescription> update_descriptions(std::string_view misrouted,
                                                   std::string_view correct,
                                                   const QueryContext& ctx,
                                                   std::string_view reasoning,
                                                   std::span<const DomainDescription> descriptions,
                                                   const LlmAdapter& llm, Trace* trace = nullptr);

// Persisted as blocks of DOMAIN:/VERSION:/DESC: lines separated by blank lines.
std::vector<DomainDescription> parse_descriptions(std::string_view text);
std::string format_descriptions(std::span<const DomainDescription> descriptions);

// Shared description cache: many concurrent routers, one updater at a time.
class DescriptionStore {
public:
    DescriptionStore() = default;
    explicit DescriptionStore(std::vector<DomainDescription> initial);

    std::vector<DomainDescription> snapshot() const;
    void replace(std::vector<DomainDescription> descriptions);

    RouteDecision route(const QueryContext& ctx, const LlmAdapter& llm, Trace* trace = nullptr) const;
    void record_misroute(std::string_view misrouted, std::string_view correct, const QueryContext& ctx,
                         std::string_view reasoning, const LlmAdapter& llm, Trace* trace = nullptr);

private:
    mutable std::shared_mutex mutex_;
    std::vector<DomainDescription> descriptions_;
};

// Ordered keyword table mapping constraints to an aspect. Earlier entries win.
class AspectTable {
public:
    using Entry = std::pair<std::string, std::vector<std::string>>;

    AspectTable() = default;
    explicit AspectTable(std::vector<Entry> entries);

    // Lines of `aspect = [keyword, ...]`; '#' starts a comment.
    static AspectTable parse(std::string_view text);
    static AspectTable from_file(const std::filesystem::path& path);
    // Same table as data/aspects.conf.
    static const AspectTable& defaults();

    const std::vector<Entry>& entries() const { return entries_; }
    std::string derive(const Isr& isr) const;

private:
    std::vector<Entry> entries_;
};

inline constexpr std::string_view kGeneralAspect = "general";

std::string derive_aspect(const Isr& isr, const AspectTable& table = AspectTable::defaults());

}  // namespace cacherag
