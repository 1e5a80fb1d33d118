#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cacherag/autogen.hpp"
#include "cacherag/benchkit.hpp"
#include "cacherag/config.hpp"
#include "cacherag/error.hpp"
#include "cacherag/kg_store.hpp"
#include "cacherag/llm_adapter.hpp"
#include "cacherag/pipeline.hpp"
#include "cacherag/text.hpp"

namespace cacherag {

namespace {

namespace fs = std::filesystem;

struct Loaded {
    std::vector<std::unique_ptr<KnowledgeGraph>> graphs;

    std::vector<const KnowledgeGraph*> pointers() const {
        std::vector<const KnowledgeGraph*> out;
        for (const auto& g : graphs) out.push_back(g.get());
        return out;
    }
};

Loaded load_graphs(const Config& cfg) {
    if (cfg.kg.empty()) throw UsageError("no knowledge graph given (use --kg FILE)");
    Loaded loaded;
    for (const auto& path : cfg.kg) {
        std::string label = cfg.kg.size() == 1 ? cfg.domain : fs::path(path).stem().string();
        loaded.graphs.push_back(std::make_unique<KnowledgeGraph>(load_triples_file(path, label)));
    }
    return loaded;
}

std::shared_ptr<const LlmBackend> make_backend(const Config& cfg) {
    if (cfg.llm == "live") return std::make_shared<HttpBackend>(HttpBackendConfig::from_env());
    if (cfg.script.empty()) throw UsageError("the scripted backend needs --script FILE (or --llm live)");
    return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(cfg.script));
}

LlmAdapter make_adapter(const Config& cfg) {
    auto prompts = cfg.prompt_dir.empty() ? PromptLibrary::builtin() : PromptLibrary::from_directory(cfg.prompt_dir);
    return LlmAdapter(make_backend(cfg), std::move(prompts));
}

SemanticCache load_cache(const Config& cfg) {
    if (!cfg.cache_file.empty() && fs::exists(cfg.cache_file)) {
        std::ifstream in(cfg.cache_file);
        if (!in) throw UsageError("cannot read cache file " + cfg.cache_file);
        return SemanticCache::import_jsonl(in, cfg.cache);
    }
    return SemanticCache(cfg.cache);
}

void save_cache(const Config& cfg, const SemanticCache& cache) {
    if (cfg.cache_file.empty()) return;
    std::ofstream out(cfg.cache_file, std::ios::trunc);
    if (!out) throw UsageError("cannot write cache file " + cfg.cache_file);
    cache.export_jsonl(out);
}

AspectTable load_aspects(const Config& cfg) {
    return cfg.aspects.empty() ? AspectTable::defaults() : AspectTable::from_file(cfg.aspects);
}

DescriptionStore load_descriptions(const Config& cfg) {
    fs::path path = cfg.domains.empty() ? fs::path(CACHERAG_DATA_DIR) / "domains.txt" : fs::path(cfg.domains);
    if (!fs::exists(path)) return DescriptionStore{};
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return DescriptionStore(parse_descriptions(ss.str()));
}

void write_trace(const std::string& path, const Config& cfg, const Trace& trace) {
    if (path.empty()) return;
    Trace full;
    full.add("config", cfg.to_json());
    for (const auto& r : trace.records()) full.add(r.stage, r.detail);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UsageError("cannot write trace file " + path);
    full.write_jsonl(out);
}

void print_record(std::ostream& out, const AnswerRecord& rec, std::uint64_t llm_calls) {
    out << rec.answer << '\n';
    out << "# status=" << status_name(rec.status) << " iterations=" << rec.expansion_iterations
        << " examples=" << rec.examples.size() << " llm_calls=" << llm_calls;
    if (rec.inserted) out << " cache_insert=" << rec.inserted->id;
    if (!rec.error.empty()) out << " error=\"" << rec.error << '"';
    out << '\n';
}

AnswerRecord ask_once(const std::string& question, const std::string& time, const Loaded& loaded,
                      const DescriptionStore& descriptions, SemanticCache& cache,
                      const LlmAdapter& llm, const Config& cfg, const AspectTable& aspects) {
    QueryContext ctx{question};
    if (!time.empty()) ctx.query_time = QueryContext::parse_time(time);
    PipelineOptions opt;
    opt.bounds = cfg.bounds;
    opt.aspects = &aspects;
    auto graphs = loaded.pointers();
    return answer_routed(ctx, graphs, descriptions, cache, llm, opt);
}

void print_stats(std::ostream& out, const CacheStats& s) {
    out << "entries " << s.entries << '\n';
    for (const auto& [key, n] : s.buckets) out << "bucket " << key.first << '/' << key.second << ' ' << n << '\n';
    out << "hits " << s.hits << "\nmisses " << s.misses << "\ninserts " << s.inserts << "\nevictions "
        << s.evictions << "\nbytes " << s.bytes << '\n';
}

// key = value file; relative paths resolved against the file's directory.
std::map<std::string, std::string> read_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open scenario " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) continue;
        kv[std::string(text::trim(t.substr(0, eq)))] = std::string(text::trim(t.substr(eq + 1)));
    }
    for (const auto* key : {"kg", "script"}) {
        if (kv.count(key)) kv[key] = (path.parent_path() / kv[key]).lexically_normal().string();
    }
    return kv;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-graph question answering with a plan cache", "cacherag"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    std::string trace_file;
    std::vector<std::string> kg_flags;
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option*> override_opts;
    app.add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--kg", kg_flags, "triple file (repeatable)");
    app.add_option("--trace", trace_file, "write the execution trace as JSON lines");
    for (const auto& key : Config::keys()) {
        if (key == "kg") continue;
        std::string flag = "--" + key;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        if (key == "cache_file") flag += ",--cache";
        override_opts[key] = app.add_option(flag, overrides[key]);
    }

    // kg
    auto* kg_cmd = app.add_subcommand("kg", "load, synthesize or inspect triple files");
    kg_cmd->require_subcommand(1);
    std::vector<std::string> load_files;
    auto* kg_load = kg_cmd->add_subcommand("load", "parse and validate triple files");
    kg_load->add_option("files", load_files, "triple files");
    auto* kg_synth = kg_cmd->add_subcommand("synth", "write a synthetic power-law graph");
    SynthSpec synth;
    std::string synth_out;
    kg_synth->add_option("--triples", synth.n_triples, "target triple count")->required();
    kg_synth->add_option("--zipf", synth.zipf_exponent, "degree exponent");
    kg_synth->add_option("--predicates", synth.predicate_pool, "predicate pool size");
    kg_synth->add_option("--out", synth_out, "output TSV")->required();
    auto* kg_stats = kg_cmd->add_subcommand("stats", "summarize the graphs given with --kg");

    // cache
    auto* cache_cmd = app.add_subcommand("cache", "warm, inspect and move the plan cache");
    cache_cmd->require_subcommand(1);
    std::size_t warm_count = 10;
    auto* cache_warm = cache_cmd->add_subcommand("warm", "pre-warm from sampled star schemas");
    cache_warm->add_option("--count", warm_count, "entities to sample per graph");
    auto* cache_stats = cache_cmd->add_subcommand("stats", "print bucket counts and size");
    std::string export_out;
    auto* cache_export = cache_cmd->add_subcommand("export", "write the cache as JSON lines");
    cache_export->add_option("--out", export_out, "output file (default stdout)");
    std::string import_in;
    auto* cache_import = cache_cmd->add_subcommand("import", "replace the cache file with a JSONL dump");
    cache_import->add_option("file", import_in, "JSONL file")->required()->check(CLI::ExistingFile);

    // ask / repl
    std::string question;
    std::string time;
    auto* ask = app.add_subcommand("ask", "answer one question");
    ask->add_option("question", question, "question text")->required();
    ask->add_option("--time", time, "query time, ISO-8601");
    bool persist = false;
    auto* repl = app.add_subcommand("repl", "answer questions from stdin; :stats, :quit");
    repl->add_flag("--persist", persist, "write the cache back on exit");

    // bench
    auto* bench = app.add_subcommand("bench", "benchmarks");
    bench->require_subcommand(1);
    auto* scal = bench->add_subcommand("scalability", "lookup cost across graph sizes");
    std::string sizes = "40000x2^6";
    std::size_t queries = 50;
    std::string bench_out;
    ScalabilityOptions scal_opt;
    scal->add_option("--sizes", sizes, "BASEx2^N or a comma list");
    scal->add_option("--queries", queries, "queries per kind and size");
    scal->add_option("--out", bench_out, "CSV file (default stdout)");
    scal->add_option("--zipf", scal_opt.zipf_exponent, "degree exponent");

    // replay
    auto* replay = app.add_subcommand("replay", "replay a shipped scenario");
    replay->require_subcommand(1);
    std::string data_dir = CACHERAG_DATA_DIR;
    auto* golden = replay->add_subcommand("golden", "the Inception walkthrough");
    golden->add_option("--data-dir", data_dir, "directory holding golden/scenario.conf");

    std::vector<std::string> argv_store = {"cacherag"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        Config cfg;
        if (!config_file.empty()) cfg.load_file(config_file);
        cfg.apply_env();
        for (const auto& [key, opt] : override_opts) {
            if (opt->count()) cfg.set(key, overrides[key]);
        }
        if (!kg_flags.empty()) cfg.set("kg", text::join(kg_flags, ","));
        cfg.validate();
        synth.seed = cfg.seed;

        if (kg_load->parsed()) {
            auto files = load_files.empty() ? cfg.kg : load_files;
            if (files.empty()) throw UsageError("kg load needs at least one file");
            for (const auto& f : files) {
                auto kg = load_triples_file(f, "");
                out << f << ": " << kg.size() << " triples, " << kg.subject_count() << " subjects, "
                    << kg.vocabulary().size() << " predicates\n";
            }
        } else if (kg_synth->parsed()) {
            auto kg = synth_kg(synth);
            std::ofstream f(synth_out, std::ios::trunc);
            if (!f) throw UsageError("cannot write " + synth_out);
            kg.write_tsv(f);
            out << synth_out << ": " << kg.size() << " triples, " << kg.subject_count() << " subjects\n";
        } else if (kg_stats->parsed()) {
            auto loaded = load_graphs(cfg);
            for (std::size_t i = 0; i < loaded.graphs.size(); ++i) {
                const auto& kg = *loaded.graphs[i];
                std::size_t max_degree = 0;
                for (const auto& s : kg.subjects()) max_degree = std::max(max_degree, kg.triples_of(s).size());
                out << cfg.kg[i] << ": domain=" << cache_domain(kg) << " triples=" << kg.size()
                    << " subjects=" << kg.subject_count() << " predicates=" << kg.vocabulary().size()
                    << " max_out_degree=" << max_degree << " index_depth=" << kg.index_depth() << '\n';
            }
        } else if (cache_warm->parsed()) {
            auto loaded = load_graphs(cfg);
            auto llm = make_adapter(cfg);
            auto cache = load_cache(cfg);
            auto aspects = load_aspects(cfg);
            Trace trace;
            for (const auto* kg : loaded.pointers()) {
                auto r = prewarm(*kg, cache, warm_count, cfg.seed, llm, &trace, aspects);
                out << cache_domain(*kg) << ": sampled=" << r.sampled << " candidates=" << r.candidates
                    << " kept=" << r.kept << " rejected=" << r.rejected << " inserted=" << r.inserted
                    << " duplicates=" << r.duplicates << '\n';
            }
            if (cfg.cache_file.empty()) err << "note: no --cache file given; the warmed cache was not saved\n";
            save_cache(cfg, cache);
            write_trace(trace_file, cfg, trace);
        } else if (cache_stats->parsed()) {
            if (cfg.cache_file.empty()) throw UsageError("cache stats needs --cache FILE");
            print_stats(out, load_cache(cfg).stats());
        } else if (cache_export->parsed()) {
            if (cfg.cache_file.empty()) throw UsageError("cache export needs --cache FILE");
            auto cache = load_cache(cfg);
            if (export_out.empty()) {
                cache.export_jsonl(out);
            } else {
                std::ofstream f(export_out, std::ios::trunc);
                if (!f) throw UsageError("cannot write " + export_out);
                cache.export_jsonl(f);
            }
        } else if (cache_import->parsed()) {
            if (cfg.cache_file.empty()) throw UsageError("cache import needs --cache FILE");
            std::ifstream f(import_in);
            auto cache = SemanticCache::import_jsonl(f, cfg.cache);
            save_cache(cfg, cache);
            out << "imported " << cache.size() << " entries into " << cfg.cache_file << '\n';
        } else if (ask->parsed()) {
            auto loaded = load_graphs(cfg);
            auto llm = make_adapter(cfg);
            auto cache = load_cache(cfg);
            auto aspects = load_aspects(cfg);
            auto descriptions = load_descriptions(cfg);
            auto rec = ask_once(question, time, loaded, descriptions, cache, llm, cfg, aspects);
            print_record(out, rec, llm.calls());
            save_cache(cfg, cache);
            write_trace(trace_file, cfg, rec.trace);
        } else if (repl->parsed()) {
            auto loaded = load_graphs(cfg);
            auto llm = make_adapter(cfg);
            auto cache = load_cache(cfg);
            auto aspects = load_aspects(cfg);
            auto descriptions = load_descriptions(cfg);
            Trace session;
            std::string line;
            out << "> " << std::flush;
            while (std::getline(in, line)) {
                auto q = std::string(text::trim(line));
                if (q == ":quit" || q == ":q") break;
                if (q == ":stats") {
                    print_stats(out, cache.stats());
                } else if (!q.empty()) {
                    auto before = llm.calls();
                    auto rec = ask_once(q, "", loaded, descriptions, cache, llm, cfg, aspects);
                    print_record(out, rec, llm.calls() - before);
                    for (const auto& r : rec.trace.records()) session.add(r.stage, r.detail);
                }
                out << "> " << std::flush;
            }
            out << '\n';
            if (persist) save_cache(cfg, cache);
            write_trace(trace_file, cfg, session);
        } else if (scal->parsed()) {
            auto grid = parse_size_grid(sizes);
            auto report = run_scalability(grid, queries, cfg.seed, scal_opt);
            std::ostream* summary = &out;
            if (bench_out.empty()) {
                report.write_csv(out);
                summary = &err;
            } else {
                std::ofstream f(bench_out, std::ios::trunc);
                if (!f) throw UsageError("cannot write " + bench_out);
                report.write_csv(f);
            }
            if (grid.size() >= 2) {
                for (auto kind : {QueryKind::Point, QueryKind::Star}) {
                    std::vector<double> x, y;
                    for (const auto& r : report.of(kind)) {
                        x.push_back(static_cast<double>(r.n_triples));
                        y.push_back(r.mean_comparisons);
                    }
                    auto fit = fit_log2(x, y);
                    auto rows = report.of(kind);
                    *summary << query_kind_name(kind) << ": comparisons = " << fit.a << " + " << fit.b
                             << " * log2(n), R^2 = " << fit.r2 << "; latency largest/smallest = "
                             << rows.back().mean_elapsed_ns / rows.front().mean_elapsed_ns << "x warm, "
                             << rows.back().cold_elapsed_ns / rows.front().cold_elapsed_ns << "x cold\n";
                }
            }
        } else if (golden->parsed()) {
            auto scenario = read_scenario(fs::path(data_dir) / "golden" / "scenario.conf");
            for (const auto* key : {"kg", "script", "question"}) {
                if (!scenario.count(key)) throw UsageError(std::string("scenario is missing '") + key + "'");
            }
            auto kg = load_triples_file(scenario["kg"], scenario.count("domain") ? scenario["domain"] : "");
            LlmAdapter llm(std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(scenario["script"])));
            SemanticCache cache(cfg.cache);
            std::size_t count = scenario.count("prewarm_count") ? std::stoul(scenario["prewarm_count"]) : 3;
            std::uint64_t seed = scenario.count("seed") ? std::stoull(scenario["seed"]) : cfg.seed;
            auto warm = prewarm(kg, cache, count, seed, llm);
            out << "# prewarm: sampled=" << warm.sampled << " inserted=" << warm.inserted << '\n';

            QueryContext ctx{scenario["question"]};
            if (scenario.count("time")) ctx.query_time = QueryContext::parse_time(scenario["time"]);
            PipelineOptions opt;
            opt.bounds = cfg.bounds;
            auto before = llm.calls();
            auto size_before = cache.size();
            auto rec = answer(ctx, kg, cache, llm, opt);
            print_record(out, rec, llm.calls() - before);
            out << "# cache_entries_added=" << cache.size() - size_before << '\n';
            write_trace(trace_file, cfg, rec.trace);
            if (rec.status != AnswerStatus::Answered) return 2;
        }
        return 0;
    } catch (const UsageError& e) {
        const CLI::App* deepest = &app;
        while (!deepest->get_subcommands().empty()) deepest = deepest->get_subcommands().front();
        err << "error: " << e.what() << "\n\n" << deepest->help();
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace cacherag
