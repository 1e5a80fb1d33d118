#include "cacherag/autogen.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/pipeline.hpp"
#include "cacherag/text.hpp"
#include "cacherag/trace.hpp"

namespace cacherag {

namespace {

bool is_na(std::string_view v) {
    auto lower = text::to_lower(text::trim(v));
    return lower.empty() || lower == "na" || lower == "n/a" || lower == "[na]";
}

std::string group_lines(const TripleGroup& group) {
    std::string out;
    for (const auto& t : group.triples) {
        out += t.subject + " | " + t.predicate + " | " + t.object.canonical() + "\n";
    }
    return out;
}

}  // namespace

StarSample sample_star_schemas(const KnowledgeGraph& kg, std::size_t count, std::uint64_t seed,
                               Trace* trace) {
    StarSample out;
    const std::size_t n = kg.subject_count();
    if (count > n) {
        out.exhausted = true;
        if (trace) trace->flag("sample_exhausted", {{"requested", count}, {"entities", n}});
        count = n;
    }
    // Partial Fisher-Yates over subject indexes.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
        const auto& entity = kg.subject_at(order[i]);
        out.groups.push_back({entity, kg.triples_of(entity)});
    }
    return out;
}

std::vector<SeedCandidate> parse_seed_candidates(std::string_view completion, const TripleGroup& group) {
    std::vector<SeedCandidate> out;
    std::optional<SeedCandidate> current;
    bool skip_block = false;
    auto finish = [&] {
        if (!current) return;
        if (!skip_block && !is_na(current->answer) && out.size() < kMaxSeedQuestions) {
            if (current->verdict == SeedVerdict::Pending && current->triples.empty()) {
                current->verdict = SeedVerdict::Rejected;
                current->reason = "no supporting triples";
            }
            current->id = out.size() + 1;
            out.push_back(std::move(*current));
        }
        current.reset();
        skip_block = false;
    };

    for (const auto& [key, value] : text::parse_keyed_lines(completion)) {
        if (key == "QUESTION") {
            finish();
            current = SeedCandidate{};
            current->question = text::strip_quotes(value);
            skip_block = is_na(current->question);
        } else if (!current) {
            continue;
        } else if (key == "TRIPLE") {
            auto parts = text::split(value, '|');
            if (parts.size() != 3) {
                current->verdict = SeedVerdict::Rejected;
                current->reason = "malformed triple: " + value;
                continue;
            }
            std::string s(text::trim(parts[0]));
            std::string p(text::trim(parts[1]));
            ObjectValue o;
            try {
                o = ObjectValue::parse(text::trim(parts[2]));
            } catch (const ParseError&) {
                current->verdict = SeedVerdict::Rejected;
                current->reason = "malformed object: " + value;
                continue;
            }
            auto it = std::find_if(group.triples.begin(), group.triples.end(), [&](const Triple& t) {
                return t.subject == s && t.predicate == p && t.object == o;
            });
            if (it == group.triples.end()) {
                current->verdict = SeedVerdict::Rejected;
                current->reason = "triple not in the sampled group: " + value;
            } else if (std::find(current->triples.begin(), current->triples.end(), *it) ==
                       current->triples.end()) {
                current->triples.push_back(*it);
            }
        } else if (key == "ANSWER") {
            current->answer = text::strip_quotes(value);
        }
    }
    finish();
    return out;
}

std::vector<SeedCandidate> synthesize(const TripleGroup& group, const LlmAdapter& llm, Trace* trace) {
    if (group.triples.empty()) return {};
    auto completion = llm.complete(TemplateId::AutogenQuestions, {{"triples", group_lines(group)}}, trace);
    auto candidates = parse_seed_candidates(completion.text, group);
    if (trace) {
        std::size_t rejected = 0;
        for (const auto& c : candidates) rejected += c.verdict == SeedVerdict::Rejected;
        trace->add("autogen_synthesize",
                   {{"entity", group.entity}, {"candidates", candidates.size()}, {"rejected", rejected}});
    }
    return candidates;
}

void filter(std::vector<SeedCandidate>& candidates, const LlmAdapter& llm, Trace* trace) {
    std::string listing;
    for (const auto& c : candidates) {
        if (c.verdict != SeedVerdict::Pending) continue;
        listing += "CANDIDATE " + std::to_string(c.id) + "\nQUESTION: " + c.question + "\nTRIPLES:\n";
        for (const auto& t : c.triples) {
            listing += t.subject + " | " + t.predicate + " | " + t.object.canonical() + "\n";
        }
        listing += "ANSWER: " + c.answer + "\n\n";
    }
    if (listing.empty()) return;

    auto completion = llm.complete(TemplateId::AutogenFilter, {{"candidates", listing}}, trace);
    std::map<std::size_t, bool> keep;
    for (const auto& [key, value] : text::parse_keyed_lines(completion.text)) {
        if (key != "VERDICT") continue;
        auto words = text::split(std::string(text::trim(value)), ' ');
        words.erase(std::remove(words.begin(), words.end(), std::string()), words.end());
        if (words.size() < 2) continue;
        auto id_text = text::strip_quotes(words[0]);
        if (!id_text.empty() && id_text.front() == '[') id_text = id_text.substr(1);
        if (!id_text.empty() && id_text.back() == ']') id_text.pop_back();
        std::size_t id = 0;
        try {
            id = std::stoul(id_text);
        } catch (const std::exception&) {
            continue;
        }
        auto word = text::to_lower(words[1]);
        if (!keep.count(id)) keep[id] = word == "keep";
    }
    for (auto& c : candidates) {
        if (c.verdict != SeedVerdict::Pending) continue;
        auto it = keep.find(c.id);
        c.verdict = it != keep.end() && it->second ? SeedVerdict::Kept : SeedVerdict::Rejected;
    }
}

QueryPlan compile_seed_plan(const std::vector<Triple>& triples) {
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& t : triples) pairs.emplace(t.subject, t.predicate);
    QueryPlan plan;
    for (const auto& [s, p] : pairs) plan.ops.push_back(PointQuery{s, p});
    return plan;
}

PrewarmReport prewarm(const KnowledgeGraph& kg, SemanticCache& cache, std::size_t count,
                      std::uint64_t seed, const LlmAdapter& llm, Trace* trace,
                      const AspectTable& aspects) {
    PrewarmReport report;
    if (kg.empty() || count == 0) return report;
    auto sample = sample_star_schemas(kg, count, seed, trace);
    report.sampled = sample.groups.size();
    const auto domain = cache_domain(kg);
    for (const auto& group : sample.groups) {
        auto candidates = synthesize(group, llm, trace);
        filter(candidates, llm, trace);
        report.candidates += candidates.size();
        for (const auto& c : candidates) {
            if (c.verdict != SeedVerdict::Kept) {
                ++report.rejected;
                continue;
            }
            ++report.kept;
            auto plan = compile_seed_plan(c.triples);
            if (cache.contains(domain, c.question, plan)) {
                ++report.duplicates;
                continue;
            }
            Isr isr;
            isr.raw_entity = group.entity;
            isr.constraints = {c.question};
            auto entry = cache.insert(domain, derive_aspect(isr, aspects), c.question, std::move(plan),
                                      c.answer, &kg.vocabulary());
            ++report.inserted;
            if (trace) {
                trace->add("cache_insert", {{"id", entry.id}, {"domain", entry.domain}, {"aspect", entry.aspect},
                                            {"source", "prewarm"}});
            }
        }
    }
    return report;
}

}  // namespace cacherag
