#include "cacherag/pipeline.hpp"

#include <algorithm>

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"

namespace cacherag {

namespace {

std::vector<std::uint64_t> ids_of(const std::vector<CacheEntry>& entries) {
    std::vector<std::uint64_t> ids;
    for (const auto& e : entries) ids.push_back(e.id);
    return ids;
}

void fall_back(AnswerRecord& rec, const QueryContext& ctx, const LlmAdapter& llm,
               std::string_view reason) {
    rec.status = AnswerStatus::Fallback;
    rec.trace.add("fallback", {{"reason", std::string(reason)}});
    try {
        rec.answer = direct_answer(ctx, llm, &rec.trace);
    } catch (const TransportError& e) {
        rec.error = e.what();
        rec.trace.add("fallback", {{"reason", "direct answer failed"}, {"error", e.what()}});
    }
}

void run(AnswerRecord& rec, const QueryContext& ctx, const KnowledgeGraph& kg, SemanticCache& cache,
         const LlmAdapter& llm, const PipelineOptions& opt) {
    Trace* trace = &rec.trace;

    try {
        rec.isr = extract_isr(ctx, llm, trace);
    } catch (const ParseError&) {
        rec.isr = Isr{};
        rec.isr.raw_entity = fallback_entity(ctx.question);
        rec.isr.entity_from_fallback = true;
        trace->flag("isr_fallback", {{"entity", rec.isr.raw_entity}});
        if (rec.isr.raw_entity.empty()) {
            fall_back(rec, ctx, llm, "no topic entity");
            return;
        }
    }
    auto leaks = schema_leaks(rec.isr, kg.vocabulary());
    if (!leaks.empty()) {
        std::erase_if(rec.isr.constraints, [&](const std::string& c) {
            return std::find(leaks.begin(), leaks.end(), c) != leaks.end();
        });
        trace->flag("schema_term_in_isr", {{"dropped", leaks}});
    }
    const AspectTable& aspects = opt.aspects ? *opt.aspects : AspectTable::defaults();
    rec.domain = cache_domain(kg);
    rec.aspect = derive_aspect(rec.isr, aspects);
    trace->add("isr", {{"entity", rec.isr.raw_entity},
                       {"constraints", rec.isr.constraints},
                       {"domain_hint", rec.isr.domain_hint},
                       {"aspect", rec.aspect}});

    auto retrieved = cache.retrieve(ctx.question, rec.domain, rec.aspect, opt.exec);
    rec.examples = ids_of(retrieved.selected);
    trace->add("cache_retrieve", {{"domain", rec.domain},
                                  {"aspect", rec.aspect},
                                  {"selected", rec.examples},
                                  {"relaxed", retrieved.stats.relaxed},
                                  {"pool", retrieved.stats.pool_size},
                                  {"similarity_evaluations", retrieved.stats.similarity_evaluations}});
    const auto& examples = retrieved.selected;

    QueryPlan plan;
    Subgraph g0;
    try {
        plan = compile(ctx, rec.isr, kg.local_schema(rec.isr.raw_entity), examples, llm, trace).plan;
        g0 = execute(plan, kg, opt.apis ? *opt.apis : ApiRegistry{}, rec.isr.raw_entity, trace);
    } catch (const CompileError& e) {
        trace->add("compile_failed", {{"error", e.what()}, {"breadth_fallback", e.breadth_fallback()}});
        plan = QueryPlan{};
        g0 = Subgraph{};
        g0.frontier.insert(rec.isr.raw_entity);
    }

    auto verdict = dispatch(ctx, g0, examples, llm, trace);
    QueryPlan final_plan = plan;
    Subgraph final_graph = std::move(g0);
    if (!verdict.complete()) {
        TraversalOptions topt;
        topt.ranker = opt.ranker;
        topt.exec = opt.exec;
        topt.initial_verdict = verdict;
        auto result = heuristic_traversal(ctx, kg, std::move(plan), std::move(final_graph), examples,
                                          opt.bounds, llm, trace, topt);
        rec.termination = result.termination;
        rec.expansion_iterations = result.iterations;
        final_plan = std::move(result.plan);
        final_graph = std::move(result.subgraph);
        if (result.termination == Termination::BoundHit) {
            rec.plan_used = std::move(final_plan);
            rec.subgraph = std::move(final_graph);
            fall_back(rec, ctx, llm, "expansion bound reached");
            return;
        }
        // The traversal only returns COMPLETE on a verdict for this exact
        // subgraph, so the re-check reuses it instead of asking again.
        trace->add("recheck", {{"status", "COMPLETE"}, {"llm", false}});
    }

    rec.answer = summarize(ctx, final_graph, llm, trace);
    rec.status = AnswerStatus::Answered;
    rec.plan_used = final_plan;
    rec.subgraph = std::move(final_graph);
    rec.inserted = cache.insert(rec.domain, rec.aspect, ctx.question, final_plan, rec.answer,
                                &kg.vocabulary());
    trace->add("cache_insert", {{"id", rec.inserted->id}, {"domain", rec.domain}, {"aspect", rec.aspect}});
}

}  // namespace

std::string_view status_name(AnswerStatus s) {
    return s == AnswerStatus::Answered ? "ANSWERED" : "FALLBACK";
}

std::string cache_domain(const KnowledgeGraph& kg) {
    return kg.domain_label().empty() ? std::string(kGlobalDomain) : kg.domain_label();
}

std::string summarize(const QueryContext& ctx, const Subgraph& subgraph, const LlmAdapter& llm,
                      Trace* trace) {
    if (subgraph.empty()) throw UsageError("summarize needs a non-empty subgraph");
    auto completion = llm.complete(TemplateId::Summarize,
                                   {{"question", ctx.question},
                                    {"time", ctx.time_iso()},
                                    {"subgraph", subgraph.serialize()}},
                                   trace);
    if (trace) trace->add("summarize", {{"triples", subgraph.size()}});
    return completion.text;
}

std::string direct_answer(const QueryContext& ctx, const LlmAdapter& llm, Trace* trace) {
    return llm.complete(TemplateId::DirectAnswer, {{"question", ctx.question}, {"time", ctx.time_iso()}},
                        trace)
        .text;
}

AnswerRecord answer(const QueryContext& ctx, const KnowledgeGraph& kg, SemanticCache& cache,
                    const LlmAdapter& llm, const PipelineOptions& options) {
    options.bounds.validate();
    AnswerRecord rec;
    rec.trace.add("question", {{"question", ctx.question}, {"time", ctx.time_iso()}});
    try {
        run(rec, ctx, kg, cache, llm, options);
    } catch (const TransportError& e) {
        rec.error = e.what();
        rec.trace.add("transport_error", {{"error", e.what()}});
        rec.inserted.reset();
        fall_back(rec, ctx, llm, "transport error");
    }
    return rec;
}

AnswerRecord answer_routed(const QueryContext& ctx, std::span<const KnowledgeGraph* const> graphs,
                           const DescriptionStore& descriptions, SemanticCache& cache,
                           const LlmAdapter& llm, const PipelineOptions& options) {
    if (graphs.empty()) throw UsageError("no knowledge graph loaded");
    if (graphs.size() == 1) return answer(ctx, *graphs.front(), cache, llm, options);

    Trace route_trace;
    std::vector<DomainDescription> candidates;
    auto all = descriptions.snapshot();
    for (const auto* kg : graphs) {
        auto name = cache_domain(*kg);
        auto it = std::find_if(all.begin(), all.end(), [&](const auto& d) { return d.domain == name; });
        candidates.push_back(it != all.end() ? *it : DomainDescription{name, name, 0});
    }
    auto decision = route_domain(ctx, candidates, llm, &route_trace);
    const KnowledgeGraph* chosen = graphs.front();
    for (const auto* kg : graphs) {
        if (cache_domain(*kg) == decision.domain) chosen = kg;
    }
    auto rec = answer(ctx, *chosen, cache, llm, options);
    // Keep routing records first so the trace stays in execution order.
    Trace merged;
    for (const auto& r : route_trace.records()) merged.add(r.stage, r.detail);
    for (const auto& r : rec.trace.records()) merged.add(r.stage, r.detail);
    rec.trace = std::move(merged);
    return rec;
}

}  // namespace cacherag
