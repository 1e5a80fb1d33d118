#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cacherag/spo_index.hpp"

namespace cacherag {

enum class ObjectKind : std::uint8_t { Entity, Literal };

// An object is either an entity name or a literal. Literals are written
// double-quoted in triple files; the quotes are part of the canonical text,
// which is also the sort key.
struct ObjectValue {
    std::string text;
    ObjectKind kind = ObjectKind::Entity;

    static ObjectValue entity(std::string name) { return {std::move(name), ObjectKind::Entity}; }
    static ObjectValue literal(std::string value) { return {std::move(value), ObjectKind::Literal}; }
    static ObjectValue parse(std::string_view field);

    bool is_entity() const { return kind == ObjectKind::Entity; }
    std::string canonical() const;
    std::optional<double> numeric() const;
    std::optional<std::chrono::year_month_day> date() const;

    friend bool operator==(const ObjectValue&, const ObjectValue&) = default;
    friend std::strong_ordering operator<=>(const ObjectValue& a, const ObjectValue& b) {
        return a.canonical() <=> b.canonical();
    }
};

// Validity annotation `start..end`. Bounds are ISO-like dates (YYYY, YYYY-MM,
// YYYY-MM-DD, optionally followed by a time part).
struct TimeRange {
    std::string start;
    std::string end;

    static TimeRange parse(std::string_view field);
    std::string canonical() const { return start + ".." + end; }

    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    ObjectValue object;
    std::optional<TimeRange> temporal;

    // Tab-separated line as written to triple files (no trailing newline).
    std::string canonical_line() const;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend std::strong_ordering operator<=>(const Triple& a, const Triple& b);
};

// Returns an error message when the triple violates a storage invariant
// (empty subject or predicate, whitespace or quotes in the predicate, quoted
// subject, reversed time range).
std::optional<std::string> triple_violation(const Triple& triple);

struct PredicateObject {
    std::string predicate;
    ObjectValue object;

    friend bool operator==(const PredicateObject&, const PredicateObject&) = default;
};

struct LookupStats {
    std::uint64_t comparisons = 0;
    std::uint64_t results = 0;
    std::chrono::nanoseconds elapsed{0};
};

template <class T>
struct Lookup {
    std::vector<T> values;
    LookupStats stats;
};

// Upper bound on index comparisons for one lookup over n triples returning
// `results` rows: ceil(2 * log2(n)) + results (n is clamped to >= 2).
std::uint64_t comparison_bound(std::size_t n, std::uint64_t results);

class KnowledgeGraph {
public:
    // Interns terms as triples arrive; build() sorts the dictionary so term ids
    // order exactly like their canonical text.
    class Builder {
    public:
        void add(const Triple& triple);
        void add(std::string_view subject, std::string_view predicate, const ObjectValue& object);
        std::size_t pending() const { return records_.size(); }
        KnowledgeGraph build(std::string domain_label) &&;

    private:
        std::uint32_t intern(std::string text);

        std::vector<std::string> terms_;
        std::unordered_map<std::string, std::uint32_t> ids_;
        std::vector<TimeRange> temporals_;
        std::unordered_map<std::string, std::uint32_t> temporal_ids_;
        std::vector<std::array<std::uint32_t, 4>> records_;
    };

    KnowledgeGraph() = default;
    KnowledgeGraph(KnowledgeGraph&&) noexcept = default;
    KnowledgeGraph& operator=(KnowledgeGraph&&) noexcept = default;
    KnowledgeGraph(const KnowledgeGraph&) = delete;
    KnowledgeGraph& operator=(const KnowledgeGraph&) = delete;

    const std::string& domain_label() const { return domain_label_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::set<std::string>& vocabulary() const { return vocabulary_; }
    bool has_predicate(std::string_view predicate) const {
        return vocabulary_.find(std::string(predicate)) != vocabulary_.end();
    }

    // Entities with at least one outgoing triple, sorted.
    std::vector<std::string> subjects() const;
    std::size_t subject_count() const { return subject_ids_.size(); }
    const std::string& subject_at(std::size_t i) const { return terms_[subject_ids_[i]]; }

    Lookup<ObjectValue> point_query(std::string_view entity, std::string_view predicate) const;
    Lookup<PredicateObject> star_query(std::string_view entity) const;
    std::set<std::string> local_schema(std::string_view entity) const;

    // All triples with the given subject (star query, as full triples).
    std::vector<Triple> triples_of(std::string_view entity) const;
    // All triples matching (entity, predicate).
    std::vector<Triple> triples_of(std::string_view entity, std::string_view predicate) const;

    // Every triple in canonical order.
    std::vector<Triple> triples() const;
    void write_tsv(std::ostream& out) const;

    std::size_t index_depth() const { return index_.depth(); }

private:
    struct Record {
        std::uint32_t subject;
        std::uint32_t predicate;
        std::uint32_t object;
        std::uint32_t temporal;  // 0 = none, else 1 + index into temporals_
    };

    std::optional<std::uint32_t> term_id(std::string_view text) const;
    Triple materialize(const Record& r) const;
    ObjectValue object_of(const Record& r) const;

    std::string domain_label_;
    std::vector<std::string> terms_;     // sorted canonical texts
    std::vector<std::uint8_t> literal_;  // per term: canonical text is a quoted literal
    std::unordered_map<std::string_view, std::uint32_t> term_ids_;  // views into terms_
    std::vector<TimeRange> temporals_;
    std::vector<Record> records_;  // sorted by (subject, predicate, object, temporal)
    std::vector<std::uint32_t> subject_ids_;
    std::set<std::string> vocabulary_;
    SpoIndex index_;
};

// Reads the tab-separated triple format. Throws ParseError naming the line on
// malformed input; repeated triples are merged.
KnowledgeGraph load_triples(std::istream& source, std::string domain_label);
KnowledgeGraph load_triples_file(const std::string& path, std::string domain_label);

}  // namespace cacherag
