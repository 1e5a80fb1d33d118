#include "cacherag/benchkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "cacherag/error.hpp"
#include "cacherag/text.hpp"

namespace cacherag {

namespace {

constexpr std::size_t kMaxDegree = 100000;

// Small counter-based generator: one cheap independent stream per entity.
struct SplitMix64 {
    using result_type = std::uint64_t;
    std::uint64_t state;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    SplitMix64 g{a ^ (b * 0xD1B54A32D192ED03ULL)};
    g();
    return g();
}

double unit(SplitMix64& g) {
    return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;  // open interval (0, 1)
}

// Devroye's rejection sampler for the zeta distribution, truncated at kMaxDegree.
std::size_t zeta_draw(SplitMix64& g, double a) {
    const double b = std::pow(2.0, a - 1.0);
    while (true) {
        double u = unit(g);
        double v = unit(g);
        double x = std::floor(std::pow(u, -1.0 / (a - 1.0)));
        if (!(x >= 1.0) || x > static_cast<double>(kMaxDegree)) continue;
        double t = std::pow(1.0 + 1.0 / x, a - 1.0);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::size_t>(x);
    }
}

double truncated_zeta_mean(double a) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = kMaxDegree; k >= 1; --k) {  // small terms first
        double w = std::pow(static_cast<double>(k), -a);
        num += w * static_cast<double>(k);
        den += w;
    }
    return num / den;
}

struct EntityStreams {
    SplitMix64 degree;
    SplitMix64 predicates;
    SplitMix64 objects;
};

EntityStreams streams_for(const SynthSpec& spec, std::size_t entity) {
    auto base = mix(spec.seed, entity);
    return {SplitMix64{mix(base, 1)}, SplitMix64{mix(base, 2)}, SplitMix64{mix(base, 3)}};
}

std::string entity_name(std::uint64_t i) { return "Q" + std::to_string(i); }

// Number of subjects generated for a target size.
std::size_t subject_total(const SynthSpec& spec) {
    std::size_t produced = 0;
    std::size_t i = 0;
    while (produced < spec.n_triples) produced += synth_degree(spec, i++);
    return i;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_triples == 0) throw UsageError("n_triples must be at least 1");
    if (!(zipf_exponent > 1.0)) throw UsageError("zipf exponent must be greater than 1");
    if (predicate_pool == 0) throw UsageError("predicate pool must not be empty");
    if (!(literal_share >= 0.0 && literal_share <= 1.0)) throw UsageError("literal share must be in [0, 1]");
}

std::size_t synth_degree(const SynthSpec& spec, std::size_t entity) {
    auto s = streams_for(spec, entity);
    return zeta_draw(s.degree, spec.zipf_exponent);
}

KnowledgeGraph synth_kg(const SynthSpec& spec) {
    spec.validate();
    const double mean = truncated_zeta_mean(spec.zipf_exponent);
    const auto pool = static_cast<std::uint64_t>(
        std::max(1.0, std::ceil(static_cast<double>(spec.n_triples) / mean)));
    const auto literal_cut = static_cast<std::uint64_t>(spec.literal_share * 1e9);

    std::vector<std::string> predicate_names(spec.predicate_pool);
    for (std::size_t p = 0; p < spec.predicate_pool; ++p) predicate_names[p] = "P" + std::to_string(p);

    KnowledgeGraph::Builder builder;
    std::size_t produced = 0;
    for (std::size_t i = 0; produced < spec.n_triples; ++i) {
        auto s = streams_for(spec, i);
        std::size_t degree = std::min(zeta_draw(s.degree, spec.zipf_exponent), spec.n_triples - produced);
        const auto subject = entity_name(i);
        std::unordered_set<std::string> seen;
        for (std::size_t d = 0; d < degree; ++d) {
            const auto& predicate = predicate_names[s.predicates() % spec.predicate_pool];
            // Only the object is redrawn on a repeat so predicate sequences stay
            // identical across target sizes.
            while (true) {
                bool literal = s.objects() % 1000000000ULL < literal_cut;
                auto k = s.objects() % pool;
                auto object = literal ? ObjectValue::literal("L" + std::to_string(k))
                                      : ObjectValue::entity(entity_name(k));
                if (seen.insert(predicate + '\t' + object.canonical()).second) {
                    builder.add(subject, predicate, object);
                    break;
                }
            }
        }
        produced += degree;
    }
    return std::move(builder).build("synthetic");
}

std::string_view query_kind_name(QueryKind k) { return k == QueryKind::Point ? "point" : "star"; }

void ScalabilityReport::write_csv(std::ostream& out) const {
    out << "n_triples,query_kind,mean_comparisons,mean_elapsed,query_count\n";
    for (const auto& r : rows) {
        out << r.n_triples << ',' << query_kind_name(r.query_kind) << ',' << r.mean_comparisons << ','
            << r.mean_elapsed_ns << ',' << r.query_count << '\n';
    }
}

std::vector<ScalabilityRow> ScalabilityReport::of(QueryKind kind) const {
    std::vector<ScalabilityRow> out;
    for (const auto& r : rows) {
        if (r.query_kind == kind) out.push_back(r);
    }
    return out;
}

ScalabilityReport run_scalability(std::span<const std::size_t> sizes, std::size_t queries_per_kind,
                                  std::uint64_t seed, const ScalabilityOptions& options) {
    if (sizes.empty()) throw UsageError("no sizes given");
    if (queries_per_kind == 0) throw UsageError("queries per kind must be at least 1");
    if (!std::is_sorted(sizes.begin(), sizes.end())) throw UsageError("sizes must be ascending");

    SynthSpec base{sizes.front(), seed, options.zipf_exponent, options.predicate_pool};
    base.validate();
    // The last subject of a graph may be truncated, so stay below it.
    const std::size_t shared = std::max<std::size_t>(subject_total(base), 2) - 1;

    SplitMix64 pick{mix(seed, 0xB5)};
    std::vector<std::size_t> point_targets(queries_per_kind);
    std::vector<std::uint64_t> point_choice(queries_per_kind);
    std::vector<std::size_t> star_targets(queries_per_kind);
    for (std::size_t q = 0; q < queries_per_kind; ++q) {
        point_targets[q] = pick() % shared;
        point_choice[q] = pick();
        star_targets[q] = pick() % shared;
    }

    ScalabilityReport report;
    for (auto n : sizes) {
        SynthSpec spec = base;
        spec.n_triples = n;
        auto kg = synth_kg(spec);

        std::vector<std::string> point_entity(queries_per_kind);
        std::vector<std::string> point_predicate(queries_per_kind);
        for (std::size_t q = 0; q < queries_per_kind; ++q) {
            point_entity[q] = entity_name(point_targets[q]);
            auto schema = kg.local_schema(point_entity[q]);
            auto it = schema.begin();
            std::advance(it, static_cast<long>(point_choice[q] % schema.size()));
            point_predicate[q] = *it;
        }
        std::vector<std::string> star_entity;
        for (auto t : star_targets) star_entity.push_back(entity_name(t));

        ScalabilityRow point{kg.size(), QueryKind::Point, 0, 0, queries_per_kind, 0};
        ScalabilityRow star{kg.size(), QueryKind::Star, 0, 0, queries_per_kind, 0};
        const auto passes = 1 + options.timed_passes;
        for (std::size_t pass = 0; pass < passes; ++pass) {
            double point_ns = 0, star_ns = 0;
            for (std::size_t q = 0; q < queries_per_kind; ++q) {
                auto r = kg.point_query(point_entity[q], point_predicate[q]);
                if (pass == 0) point.mean_comparisons += static_cast<double>(r.stats.comparisons);
                point_ns += static_cast<double>(r.stats.elapsed.count());
            }
            for (const auto& e : star_entity) {
                auto r = kg.star_query(e);
                if (pass == 0) star.mean_comparisons += static_cast<double>(r.stats.comparisons);
                star_ns += static_cast<double>(r.stats.elapsed.count());
            }
            (pass == 0 ? point.cold_elapsed_ns : point.mean_elapsed_ns) += point_ns;
            (pass == 0 ? star.cold_elapsed_ns : star.mean_elapsed_ns) += star_ns;
        }
        const double q = static_cast<double>(queries_per_kind);
        const double timed = static_cast<double>(std::max<std::size_t>(options.timed_passes, 1));
        for (auto* row : {&point, &star}) {
            row->mean_comparisons /= q;
            row->cold_elapsed_ns /= q;
            row->mean_elapsed_ns = options.timed_passes ? row->mean_elapsed_ns / (q * timed) : row->cold_elapsed_ns;
            report.rows.push_back(*row);
        }
    }
    return report;
}

std::vector<std::size_t> parse_size_grid(std::string_view spec) {
    spec = text::trim(spec);
    std::vector<std::size_t> out;
    auto number = [](std::string_view s) {
        std::string t(text::trim(s));
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (t.empty() || used != t.size() || v == 0) throw UsageError("bad size '" + t + "'");
        return static_cast<std::size_t>(v);
    };
    auto x = spec.find("x2^");
    if (x != std::string_view::npos) {
        auto base = number(spec.substr(0, x));
        auto count = number(spec.substr(x + 3));
        if (count > 40) throw UsageError("size grid too large");
        for (std::size_t i = 0; i < count; ++i) out.push_back(base << i);
        return out;
    }
    for (const auto& part : text::split(spec, ',')) out.push_back(number(part));
    return out;
}

LogFit fit_log2(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw UsageError("fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    std::vector<double> lx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log2(x[i]);
        sx += lx[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0) throw UsageError("fit needs at least two distinct x values");
    LogFit fit;
    fit.b = sxy / sxx;
    fit.a = my - fit.b * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (fit.a + fit.b * lx[i]);
        ss_res += e * e;
    }
    fit.r2 = syy == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
    return fit;
}

double degree_histogram_slope(const KnowledgeGraph& kg, std::size_t min_count) {
    std::map<std::string, std::size_t> degree;
    for (const auto& t : kg.triples()) ++degree[t.subject];
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& [_, d] : degree) ++histogram[d];
    std::vector<double> lx, ly;
    for (const auto& [d, count] : histogram) {
        if (count < min_count) continue;
        lx.push_back(std::log(static_cast<double>(d)));
        ly.push_back(std::log(static_cast<double>(count)));
    }
    if (lx.size() < 2) throw UsageError("not enough populated degrees for a slope");
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    return sxy / sxx;
}

}  // namespace cacherag
