#include "cacherag/expansion.hpp"

#include <algorithm>

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/text.hpp"
#include "cacherag/trace.hpp"

namespace cacherag {

namespace {

bool is_absent(std::string_view v) {
    auto lower = text::to_lower(text::trim(v));
    return lower.empty() || lower == "none" || lower == "na" || lower == "n/a" || lower == "null";
}

std::vector<std::string> to_vector(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

}  // namespace

void ExpansionBounds::validate() const {
    if (k_depth == 0) throw UsageError("k_depth must be at least 1");
    if (k_degree == 0) throw UsageError("k_degree must be at least 1");
}

DispatcherVerdict parse_verdict(std::string_view completion) {
    DispatcherVerdict v;
    bool have_status = false;
    for (const auto& [key, value] : text::parse_keyed_lines(completion)) {
        if (key == "STATUS" && !have_status) {
            auto s = text::to_lower(text::strip_quotes(value));
            if (s == "complete") {
                v.status = CompletionStatus::Complete;
                have_status = true;
            } else if (s == "incomplete") {
                v.status = CompletionStatus::Incomplete;
                have_status = true;
            }
        } else if (key == "NEXT_RELATION" && !v.next_relation) {
            auto r = text::strip_quotes(value);
            if (!is_absent(r)) v.next_relation = r;
        } else if (key == "FRONTIER") {
            for (const auto& name : text::split(value, '|')) {
                auto n = text::strip_quotes(name);
                if (!is_absent(n)) v.frontier_hint.push_back(n);
            }
        }
    }
    if (!have_status) {
        DispatcherVerdict unparsed;
        unparsed.parsed = false;
        return unparsed;
    }
    if (v.complete()) {
        v.next_relation.reset();
        v.frontier_hint.clear();
    }
    return v;
}

DispatcherVerdict dispatch(const QueryContext& ctx, const Subgraph& subgraph,
                           std::span<const CacheEntry> examples, const LlmAdapter& llm,
                           Trace* trace) {
    DispatcherVerdict v;
    if (subgraph.empty()) {
        if (trace) trace->add("dispatch", {{"status", "INCOMPLETE"}, {"llm", false}, {"reason", "empty subgraph"}});
        return v;
    }
    auto completion = llm.complete(TemplateId::DispatchJudge,
                                   {{"question", ctx.question},
                                    {"time", ctx.time_iso()},
                                    {"subgraph", subgraph.serialize()},
                                    {"examples", format_examples(examples)}},
                                   trace);
    v = parse_verdict(completion.text);
    v.consulted_llm = true;
    if (trace) {
        if (!v.parsed) trace->flag("unparseable_verdict", {{"text", completion.text}});
        nlohmann::json d{{"status", v.complete() ? "COMPLETE" : "INCOMPLETE"}, {"llm", true}};
        if (v.next_relation) d["next_relation"] = *v.next_relation;
        if (!v.frontier_hint.empty()) d["frontier"] = v.frontier_hint;
        trace->add("dispatch", std::move(d));
    }
    return v;
}

std::vector<Triple> depth_expand(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                                 std::string_view relation, Exec exec) {
    if (!kg.has_predicate(relation)) {
        throw UsageError("depth expansion over unknown relation '" + std::string(relation) + "'");
    }
    return kernels::point_join(kg, frontier, relation, exec);
}

kernels::StarTopK breadth_expand(const KnowledgeGraph& kg, std::span<const std::string> frontier,
                                 const QueryContext& ctx, const PredicateRanker& ranker,
                                 std::size_t k_degree, Exec exec) {
    if (k_degree == 0) throw UsageError("k_degree must be at least 1");
    return kernels::star_topk(kg, frontier, ctx.question, ranker, k_degree, exec);
}

std::string_view termination_name(Termination t) {
    return t == Termination::Complete ? "COMPLETE" : "BOUND_HIT";
}

TraversalResult heuristic_traversal(const QueryContext& ctx, const KnowledgeGraph& kg,
                                    QueryPlan plan, Subgraph subgraph,
                                    std::span<const CacheEntry> examples,
                                    const ExpansionBounds& bounds, const LlmAdapter& llm,
                                    Trace* trace, const TraversalOptions& options) {
    bounds.validate();
    LexicalRanker lexical;
    const PredicateRanker& ranker = options.ranker ? *options.ranker : lexical;

    TraversalResult r;
    r.plan = std::move(plan);
    r.subgraph = std::move(subgraph);

    DispatcherVerdict verdict;
    if (options.initial_verdict) {
        verdict = *options.initial_verdict;
    } else {
        verdict = dispatch(ctx, r.subgraph, examples, llm, trace);
        r.dispatcher_calls += verdict.consulted_llm;
    }

    while (!verdict.complete()) {
        ++r.iterations;
        auto frontier = to_vector(r.subgraph.frontier);

        std::optional<std::string> relation = verdict.next_relation;
        if (relation && !kg.has_predicate(*relation)) {
            if (trace) trace->flag("unknown_relation", {{"relation", *relation}});
            relation.reset();
        }

        std::vector<Triple> depth;
        if (relation) depth = depth_expand(kg, frontier, *relation, options.exec);

        std::vector<std::string> targets;
        for (const auto& h : verdict.frontier_hint) {
            if (r.subgraph.frontier.count(h) || !kg.triples_of(h).empty()) targets.push_back(h);
        }
        if (targets.empty()) targets = to_vector(entity_objects(depth));
        if (targets.empty()) targets = frontier;
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

        auto breadth = breadth_expand(kg, targets, ctx, ranker, bounds.k_degree, options.exec);
        for (auto n : breadth.per_entity) r.max_breadth_per_entity = std::max(r.max_breadth_per_entity, n);

        if (relation) {
            for (const auto& e : frontier) r.plan.ops.push_back(PointQuery{e, *relation});
        } else {
            r.plan.ops.push_back(ApiCall{std::string(kBreadthStepCall), {}});
        }

        auto added = r.subgraph.merge(depth);
        auto added_breadth = r.subgraph.merge(breadth.triples);
        added.insert(added.end(), added_breadth.begin(), added_breadth.end());
        r.expansion_pairs += added.size();
        auto next = entity_objects(added);
        if (!next.empty()) r.subgraph.frontier = std::move(next);

        if (trace) {
            nlohmann::json d{{"iteration", r.iterations},
                             {"depth_triples", depth.size()},
                             {"breadth_targets", targets},
                             {"breadth_triples", breadth.triples.size()},
                             {"new_triples", added.size()},
                             {"frontier", to_vector(r.subgraph.frontier)}};
            if (relation) d["relation"] = *relation;
            trace->add("expansion", std::move(d));
        }

        if (r.iterations >= bounds.k_depth) {
            r.termination = Termination::BoundHit;
            return r;
        }
        verdict = dispatch(ctx, r.subgraph, examples, llm, trace);
        r.dispatcher_calls += verdict.consulted_llm;
    }
    r.termination = Termination::Complete;
    return r;
}

}  // namespace cacherag
