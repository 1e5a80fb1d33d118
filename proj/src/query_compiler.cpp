#include "cacherag/query_compiler.hpp"

#include "cacherag/error.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/text.hpp"
#include "cacherag/trace.hpp"

namespace cacherag {

std::vector<Triple> Subgraph::merge(const std::vector<Triple>& more) {
    std::vector<Triple> added;
    for (const auto& t : more) {
        if (triples.insert(t).second) added.push_back(t);
    }
    return added;
}

std::string Subgraph::serialize() const {
    std::string out;
    for (const auto& t : triples) {
        out += t.canonical_line();
        out += '\n';
    }
    return out;
}

std::set<std::string> entity_objects(const std::vector<Triple>& triples) {
    std::set<std::string> out;
    for (const auto& t : triples) {
        if (t.object.is_entity()) out.insert(t.object.text);
    }
    return out;
}

void ApiRegistry::add(std::string name, ApiHandler handler) {
    handlers_[std::move(name)] = std::move(handler);
}

const ApiHandler* ApiRegistry::find(std::string_view name) const {
    auto it = handlers_.find(name);
    return it == handlers_.end() ? nullptr : &it->second;
}

std::string format_examples(std::span<const CacheEntry> examples) {
    if (examples.empty()) return "(none)\n";
    std::string out;
    for (const auto& e : examples) {
        out += "Q: " + e.question + "\n" + e.plan.serialize() + "\n\n";
    }
    return out;
}

CompileResult compile(const QueryContext& ctx, const Isr& isr, const std::set<std::string>& schema,
                      std::span<const CacheEntry> examples, const LlmAdapter& llm, Trace* trace) {
    std::string constraints;
    for (const auto& c : isr.constraints) constraints += "- " + c + "\n";
    if (constraints.empty()) constraints = "(none)\n";
    std::string schema_list;
    for (const auto& p : schema) schema_list += p + "\n";
    if (schema_list.empty()) schema_list = "(empty)\n";

    auto completion = llm.complete(TemplateId::QueryCompile,
                                   {{"question", ctx.question},
                                    {"entity", isr.raw_entity},
                                    {"constraints", constraints},
                                    {"schema", schema_list},
                                    {"examples", format_examples(examples)}},
                                   trace);
    auto scraped = scrape_ops(completion.text);
    CompileResult result;
    result.malformed = scraped.malformed;
    if (scraped.ops.empty()) {
        if (trace) trace->add("compile", {{"ops", 0}, {"malformed", scraped.malformed}});
        throw CompileError("compiler returned no executable operations", false);
    }
    for (auto& op : scraped.ops) {
        const auto* point = std::get_if<PointQuery>(&op);
        if (point && !schema.count(point->predicate)) {
            result.dropped.push_back(format_op(op));
            if (trace) trace->flag("dropped_op", {{"op", format_op(op)}});
            continue;
        }
        result.plan.ops.push_back(std::move(op));
    }
    if (trace) {
        trace->add("compile", {{"plan", result.plan.serialize()},
                               {"dropped", result.dropped},
                               {"malformed", result.malformed}});
    }
    if (result.plan.empty()) {
        throw CompileError("every compiled operation referenced a predicate outside the local schema",
                           true);
    }
    return result;
}

Subgraph execute(const QueryPlan& plan, const KnowledgeGraph& kg, const ApiRegistry& apis,
                 std::string_view topic, Trace* trace) {
    Subgraph g;
    std::vector<Triple> found;
    for (const auto& op : plan.ops) {
        if (const auto* p = std::get_if<PointQuery>(&op)) {
            auto rows = kg.triples_of(p->entity, p->predicate);
            found.insert(found.end(), rows.begin(), rows.end());
        } else if (const auto* s = std::get_if<StarQuery>(&op)) {
            auto rows = kg.triples_of(s->entity);
            found.insert(found.end(), rows.begin(), rows.end());
        } else {
            const auto& call = std::get<ApiCall>(op);
            if (call.name == kBreadthStepCall) continue;
            const auto* handler = apis.find(call.name);
            if (!handler) throw ExecutionError("no handler registered for API call '" + call.name + "'");
            auto rows = (*handler)(call, kg);
            found.insert(found.end(), rows.begin(), rows.end());
        }
    }
    g.merge(found);
    g.frontier = entity_objects(found);
    // Literal-only results: keep expanding from the subjects instead.
    if (g.frontier.empty()) {
        for (const auto& t : found) g.frontier.insert(t.subject);
    }
    if (g.empty()) {
        g.frontier.clear();
        std::string start(topic);
        if (start.empty() && !plan.empty()) {
            std::visit(
                [&](const auto& op) {
                    using T = std::decay_t<decltype(op)>;
                    if constexpr (std::is_same_v<T, ApiCall>) {
                        auto it = op.args.find("entity");
                        if (it != op.args.end()) start = it->second;
                    } else {
                        start = op.entity;
                    }
                },
                plan.ops.front());
        }
        if (!start.empty()) g.frontier.insert(start);
    }
    if (trace) {
        trace->add("execute", {{"triples", g.size()},
                               {"frontier", std::vector<std::string>(g.frontier.begin(), g.frontier.end())}});
    }
    return g;
}

}  // namespace cacherag
