#include "cacherag/kg_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>

#include "cacherag/error.hpp"
#include "cacherag/text.hpp"

namespace cacherag {

namespace {

using Clock = std::chrono::steady_clock;

struct DateKey {
    int year = 0;
    int month = 0;
    int day = 0;
    std::string rest;

    auto operator<=>(const DateKey&) const = default;
};

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::optional<DateKey> parse_date_key(std::string_view s) {
    DateKey key;
    auto t = s.find('T');
    std::string_view date = s.substr(0, t);
    if (t != std::string_view::npos) key.rest = std::string(s.substr(t));
    bool negative = !date.empty() && date.front() == '-';
    if (negative) date.remove_prefix(1);
    auto parts = text::split(date, '-');
    if (parts.empty() || parts.size() > 3) return std::nullopt;
    if (!parse_int(parts[0], key.year)) return std::nullopt;
    if (negative) key.year = -key.year;
    if (parts.size() > 1 && (!parse_int(parts[1], key.month) || key.month < 1 || key.month > 12))
        return std::nullopt;
    if (parts.size() > 2 && (!parse_int(parts[2], key.day) || key.day < 1 || key.day > 31))
        return std::nullopt;
    return key;
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
}

std::uint64_t pack(std::uint32_t subject, std::uint32_t predicate) {
    return (static_cast<std::uint64_t>(subject) << 32) | predicate;
}

}  // namespace

ObjectValue ObjectValue::parse(std::string_view field) {
    field = text::trim(field);
    if (!field.empty() && field.front() == '"') {
        if (field.size() < 2 || field.back() != '"') {
            throw ParseError("unterminated literal: " + std::string(field));
        }
        return literal(std::string(field.substr(1, field.size() - 2)));
    }
    return entity(std::string(field));
}

std::string ObjectValue::canonical() const {
    if (kind == ObjectKind::Literal) return "\"" + text + "\"";
    return text;
}

std::optional<double> ObjectValue::numeric() const {
    if (kind != ObjectKind::Literal || text.empty()) return std::nullopt;
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::optional<std::chrono::year_month_day> ObjectValue::date() const {
    if (kind != ObjectKind::Literal) return std::nullopt;
    auto key = parse_date_key(text);
    if (!key || key->month == 0 || key->day == 0 || !key->rest.empty()) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{key->year},
                                    std::chrono::month{static_cast<unsigned>(key->month)},
                                    std::chrono::day{static_cast<unsigned>(key->day)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

TimeRange TimeRange::parse(std::string_view field) {
    field = text::trim(field);
    auto sep = field.find("..");
    if (sep == std::string_view::npos) {
        throw ParseError("time range must be start..end: " + std::string(field));
    }
    TimeRange range{std::string(text::trim(field.substr(0, sep))),
                    std::string(text::trim(field.substr(sep + 2)))};
    auto start = parse_date_key(range.start);
    auto end = parse_date_key(range.end);
    if (!start || !end) throw ParseError("unparseable time bound in: " + std::string(field));
    if (*end < *start) throw ParseError("time range start after end: " + std::string(field));
    return range;
}

std::string Triple::canonical_line() const {
    std::string line = subject + '\t' + predicate + '\t' + object.canonical();
    if (temporal) line += '\t' + temporal->canonical();
    return line;
}

std::strong_ordering operator<=>(const Triple& a, const Triple& b) {
    if (auto c = a.subject <=> b.subject; c != 0) return c;
    if (auto c = a.predicate <=> b.predicate; c != 0) return c;
    if (auto c = a.object.canonical() <=> b.object.canonical(); c != 0) return c;
    if (a.temporal.has_value() != b.temporal.has_value()) {
        return a.temporal.has_value() ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    if (!a.temporal) return std::strong_ordering::equal;
    return a.temporal->canonical() <=> b.temporal->canonical();
}

std::optional<std::string> triple_violation(const Triple& t) {
    if (t.subject.empty()) return "empty subject";
    if (t.predicate.empty()) return "empty predicate";
    if (t.subject.front() == '"') return "subject must be an entity, not a literal";
    if (has_space(t.predicate) || t.predicate.find('"') != std::string::npos)
        return "predicate may not contain whitespace or quotes: " + t.predicate;
    if (t.object.is_entity() && t.object.text.empty()) return "empty object";
    if (t.object.is_entity() && t.object.text.front() == '"')
        return "entity object may not start with a quote";
    if (t.temporal) {
        auto start = parse_date_key(t.temporal->start);
        auto end = parse_date_key(t.temporal->end);
        if (!start || !end) return "unparseable time range";
        if (*end < *start) return "time range start after end";
    }
    return std::nullopt;
}

std::uint64_t comparison_bound(std::size_t n, std::uint64_t results) {
    double log_n = std::log2(static_cast<double>(std::max<std::size_t>(n, 2)));
    return static_cast<std::uint64_t>(std::ceil(2.0 * log_n)) + results;
}

// --- Builder ---------------------------------------------------------------

std::uint32_t KnowledgeGraph::Builder::intern(std::string text) {
    auto [it, inserted] = ids_.try_emplace(std::move(text), static_cast<std::uint32_t>(terms_.size()));
    if (inserted) terms_.push_back(it->first);
    return it->second;
}

void KnowledgeGraph::Builder::add(const Triple& triple) {
    if (auto violation = triple_violation(triple)) throw UsageError(*violation);
    std::uint32_t temporal = 0;
    if (triple.temporal) {
        auto [it, inserted] = temporal_ids_.try_emplace(
            triple.temporal->canonical(), static_cast<std::uint32_t>(temporals_.size()) + 1);
        if (inserted) temporals_.push_back(*triple.temporal);
        temporal = it->second;
    }
    records_.push_back({intern(triple.subject), intern(triple.predicate),
                        intern(triple.object.canonical()), temporal});
}

void KnowledgeGraph::Builder::add(std::string_view subject, std::string_view predicate,
                                  const ObjectValue& object) {
    add(Triple{std::string(subject), std::string(predicate), object, std::nullopt});
}

KnowledgeGraph KnowledgeGraph::Builder::build(std::string domain_label) && {
    KnowledgeGraph kg;
    kg.domain_label_ = std::move(domain_label);

    std::vector<std::uint32_t> order(terms_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return terms_[a] < terms_[b]; });
    std::vector<std::uint32_t> remap(terms_.size());
    kg.terms_.reserve(terms_.size());
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
        remap[order[rank]] = rank;
        kg.terms_.push_back(std::move(terms_[order[rank]]));
    }
    terms_.clear();
    ids_.clear();

    std::vector<std::uint32_t> torder(temporals_.size());
    std::iota(torder.begin(), torder.end(), 0u);
    std::sort(torder.begin(), torder.end(), [&](std::uint32_t a, std::uint32_t b) {
        return temporals_[a].canonical() < temporals_[b].canonical();
    });
    std::vector<std::uint32_t> tremap(temporals_.size() + 1, 0);
    for (std::uint32_t rank = 0; rank < torder.size(); ++rank) {
        tremap[torder[rank] + 1] = rank + 1;
        kg.temporals_.push_back(temporals_[torder[rank]]);
    }

    kg.records_.reserve(records_.size());
    for (const auto& r : records_) {
        kg.records_.push_back({remap[r[0]], remap[r[1]], remap[r[2]], tremap[r[3]]});
    }
    records_.clear();
    records_.shrink_to_fit();

    auto key = [](const Record& r) { return std::tie(r.subject, r.predicate, r.object, r.temporal); };
    std::sort(kg.records_.begin(), kg.records_.end(),
              [&](const Record& a, const Record& b) { return key(a) < key(b); });
    kg.records_.erase(std::unique(kg.records_.begin(), kg.records_.end(),
                                  [&](const Record& a, const Record& b) { return key(a) == key(b); }),
                      kg.records_.end());

    kg.literal_.resize(kg.terms_.size());
    kg.term_ids_.reserve(kg.terms_.size());
    for (std::uint32_t id = 0; id < kg.terms_.size(); ++id) {
        const auto& term = kg.terms_[id];
        kg.literal_[id] = !term.empty() && term.front() == '"';
        kg.term_ids_.emplace(std::string_view(term), id);
    }

    std::vector<std::uint64_t> keys;
    keys.reserve(kg.records_.size());
    std::vector<std::uint8_t> is_predicate(kg.terms_.size(), 0);
    for (const auto& r : kg.records_) {
        keys.push_back(pack(r.subject, r.predicate));
        if (kg.subject_ids_.empty() || kg.subject_ids_.back() != r.subject) {
            kg.subject_ids_.push_back(r.subject);
        }
        is_predicate[r.predicate] = 1;
    }
    for (std::uint32_t id = 0; id < is_predicate.size(); ++id) {
        if (is_predicate[id]) kg.vocabulary_.insert(kg.vocabulary_.end(), kg.terms_[id]);
    }
    kg.index_ = SpoIndex(std::move(keys));
    return kg;
}

// --- Queries ---------------------------------------------------------------

std::optional<std::uint32_t> KnowledgeGraph::term_id(std::string_view text) const {
    auto it = term_ids_.find(text);
    if (it == term_ids_.end()) return std::nullopt;
    return it->second;
}

ObjectValue KnowledgeGraph::object_of(const Record& r) const {
    const auto& term = terms_[r.object];
    if (literal_[r.object]) return ObjectValue::literal(term.substr(1, term.size() - 2));
    return ObjectValue::entity(term);
}

Triple KnowledgeGraph::materialize(const Record& r) const {
    Triple t{terms_[r.subject], terms_[r.predicate], object_of(r), std::nullopt};
    if (r.temporal) t.temporal = temporals_[r.temporal - 1];
    return t;
}

std::vector<std::string> KnowledgeGraph::subjects() const {
    std::vector<std::string> out;
    out.reserve(subject_ids_.size());
    for (auto id : subject_ids_) out.push_back(terms_[id]);
    return out;
}

Lookup<ObjectValue> KnowledgeGraph::point_query(std::string_view entity,
                                                std::string_view predicate) const {
    auto start = Clock::now();
    Lookup<ObjectValue> out;
    auto s = term_id(entity);
    auto p = term_id(predicate);
    if (s && p) {
        std::uint64_t target = pack(*s, *p);
        std::size_t pos = index_.lower_bound(target, out.stats.comparisons);
        for (; pos < records_.size(); ++pos) {
            ++out.stats.comparisons;
            if (index_.key(pos) != target) break;
            out.values.push_back(object_of(records_[pos]));
        }
        // Temporal variants of the same (s, p, o) collapse to one value.
        out.values.erase(std::unique(out.values.begin(), out.values.end()), out.values.end());
    }
    out.stats.results = out.values.size();
    out.stats.elapsed = Clock::now() - start;
    return out;
}

Lookup<PredicateObject> KnowledgeGraph::star_query(std::string_view entity) const {
    auto start = Clock::now();
    Lookup<PredicateObject> out;
    if (auto s = term_id(entity)) {
        std::size_t pos = index_.lower_bound(pack(*s, 0), out.stats.comparisons);
        for (; pos < records_.size(); ++pos) {
            ++out.stats.comparisons;
            if ((index_.key(pos) >> 32) != *s) break;
            const auto& r = records_[pos];
            PredicateObject po{terms_[r.predicate], object_of(r)};
            if (!out.values.empty() && out.values.back() == po) continue;
            out.values.push_back(std::move(po));
        }
    }
    out.stats.results = out.values.size();
    out.stats.elapsed = Clock::now() - start;
    return out;
}

std::set<std::string> KnowledgeGraph::local_schema(std::string_view entity) const {
    std::set<std::string> out;
    for (auto& po : star_query(entity).values) out.insert(std::move(po.predicate));
    return out;
}

std::vector<Triple> KnowledgeGraph::triples_of(std::string_view entity) const {
    std::vector<Triple> out;
    auto s = term_id(entity);
    if (!s) return out;
    std::uint64_t comparisons = 0;
    for (std::size_t pos = index_.lower_bound(pack(*s, 0), comparisons);
         pos < records_.size() && records_[pos].subject == *s; ++pos) {
        out.push_back(materialize(records_[pos]));
    }
    return out;
}

std::vector<Triple> KnowledgeGraph::triples_of(std::string_view entity,
                                               std::string_view predicate) const {
    std::vector<Triple> out;
    auto s = term_id(entity);
    auto p = term_id(predicate);
    if (!s || !p) return out;
    std::uint64_t comparisons = 0;
    std::uint64_t target = pack(*s, *p);
    for (std::size_t pos = index_.lower_bound(target, comparisons);
         pos < records_.size() && index_.key(pos) == target; ++pos) {
        out.push_back(materialize(records_[pos]));
    }
    return out;
}

std::vector<Triple> KnowledgeGraph::triples() const {
    std::vector<Triple> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(materialize(r));
    return out;
}

void KnowledgeGraph::write_tsv(std::ostream& out) const {
    for (const auto& r : records_) out << materialize(r).canonical_line() << '\n';
}

// --- Loading ---------------------------------------------------------------

KnowledgeGraph load_triples(std::istream& source, std::string domain_label) {
    KnowledgeGraph::Builder builder;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4) {
            throw ParseError("expected 3 or 4 tab-separated fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        Triple triple;
        try {
            triple.subject = std::string(text::trim(fields[0]));
            triple.predicate = std::string(text::trim(fields[1]));
            triple.object = ObjectValue::parse(fields[2]);
            if (fields.size() == 4) triple.temporal = TimeRange::parse(fields[3]);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (auto violation = triple_violation(triple)) throw ParseError(*violation, line_no);
        builder.add(triple);
    }
    return std::move(builder).build(std::move(domain_label));
}

KnowledgeGraph load_triples_file(const std::string& path, std::string domain_label) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open triple file: " + path);
    return load_triples(in, std::move(domain_label));
}

}  // namespace cacherag
