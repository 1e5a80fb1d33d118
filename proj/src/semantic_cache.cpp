#include "cacherag/semantic_cache.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <shared_mutex>

#include "cacherag/bm25.hpp"
#include "cacherag/error.hpp"
#include "json.hpp"

namespace cacherag {

namespace {

constexpr double kTieEpsilon = 1e-12;

struct Stored {
    std::uint64_t id = 0;
    std::string domain;
    std::string aspect;
    std::string question;
    QueryPlan plan;
    std::string serialized_plan;
    std::string answer;
    mutable std::atomic<std::uint64_t> last_used{0};

    CacheEntry snapshot() const {
        return {id, domain, aspect, question, plan, answer, last_used.load()};
    }

    std::size_t bytes() const {
        return sizeof(Stored) + domain.capacity() + aspect.capacity() + question.capacity() +
               serialized_plan.capacity() * 2 + answer.capacity();
    }
};

using Bucket = std::vector<std::unique_ptr<Stored>>;
using AspectMap = std::map<std::string, Bucket, std::less<>>;

}  // namespace

struct SemanticCache::State {
    CacheConfig config;
    mutable std::shared_mutex mutex;
    std::map<std::string, AspectMap, std::less<>> buckets;
    mutable std::atomic<std::uint64_t> clock{0};
    std::uint64_t next_id = 1;
    mutable std::atomic<std::uint64_t> hits{0};
    mutable std::atomic<std::uint64_t> misses{0};
    std::uint64_t inserts = 0;
    std::uint64_t evictions = 0;

    // Caller holds the exclusive lock.
    void place(std::unique_ptr<Stored> entry) {
        auto& bucket = buckets[entry->domain][entry->aspect];
        bucket.push_back(std::move(entry));
        ++inserts;
        if (config.capacity && bucket.size() > *config.capacity) {
            auto victim = std::min_element(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) {
                auto ta = a->last_used.load();
                auto tb = b->last_used.load();
                return ta != tb ? ta < tb : a->id < b->id;
            });
            bucket.erase(victim);
            ++evictions;
        }
    }
};

void CacheConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must be in [0, 1]");
    if (k == 0) throw UsageError("k must be at least 1");
    if (capacity && *capacity == 0) throw UsageError("capacity must be at least 1 when set");
    if (!(relevance_floor >= 0.0 && relevance_floor <= 1.0)) {
        throw UsageError("relevance floor must be in [0, 1]");
    }
}

SemanticCache::SemanticCache(CacheConfig config) : state_(std::make_unique<State>()) {
    config.validate();
    state_->config = config;
}

SemanticCache::~SemanticCache() = default;
SemanticCache::SemanticCache(SemanticCache&&) noexcept = default;
SemanticCache& SemanticCache::operator=(SemanticCache&&) noexcept = default;

const CacheConfig& SemanticCache::config() const { return state_->config; }

Retrieval SemanticCache::retrieve(std::string_view query, std::string_view domain,
                                  std::string_view aspect, Exec exec) const {
    std::shared_lock lock(state_->mutex);
    const auto& cfg = state_->config;
    Retrieval out;
    auto dom = state_->buckets.find(domain);
    if (dom == state_->buckets.end()) {
        out.stats.unknown_domain = true;
        ++state_->misses;
        return out;
    }

    std::vector<const Stored*> pool;
    auto own = dom->second.find(aspect);
    out.stats.bucket_size = own == dom->second.end() ? 0 : own->second.size();
    if (out.stats.bucket_size >= cfg.k) {
        for (const auto& e : own->second) pool.push_back(e.get());
    } else {
        out.stats.relaxed = true;
        for (const auto& [_, bucket] : dom->second) {
            for (const auto& e : bucket) pool.push_back(e.get());
        }
    }
    std::sort(pool.begin(), pool.end(), [](const Stored* a, const Stored* b) { return a->id < b->id; });
    out.stats.pool_size = pool.size();
    for (const auto* e : pool) out.stats.scored_outside_bucket += e->aspect != aspect;

    std::vector<std::string> docs;
    docs.reserve(pool.size());
    for (const auto* e : pool) docs.push_back(e->question);
    Bm25Corpus corpus(docs);
    auto raw = corpus.raw_scores(query);
    auto relevance = normalize_min_max(raw);

    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (relevance[i] >= cfg.relevance_floor) remaining.push_back(i);
    }
    out.stats.candidates = remaining.size();

    std::vector<double> max_sim(pool.size(), 0.0);
    std::vector<std::vector<double>> rows(pool.size());  // normalized, filled lazily
    auto ensure_rows = [&](const std::vector<std::size_t>& wanted) {
        std::vector<std::size_t> missing;
        for (auto i : wanted) {
            if (rows[i].empty() && !pool.empty()) missing.push_back(i);
        }
        if (missing.empty()) return;
        auto computed = kernels::bm25_rows(corpus, missing, exec);
        for (std::size_t m = 0; m < missing.size(); ++m) rows[missing[m]] = normalize_min_max(computed[m]);
        out.stats.bm25_rows += missing.size();
    };

    std::vector<std::size_t> picked;
    while (picked.size() < cfg.k && !remaining.empty()) {
        std::size_t best_pos = 0;
        double best = -INFINITY;
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            auto j = remaining[r];
            double objective = cfg.lambda * relevance[j] - (1.0 - cfg.lambda) * max_sim[j];
            if (objective > best + kTieEpsilon) {
                best = objective;
                best_pos = r;
            }
        }
        auto s = remaining[best_pos];
        picked.push_back(s);
        remaining.erase(remaining.begin() + static_cast<long>(best_pos));
        if (picked.size() == cfg.k || remaining.empty() || cfg.lambda == 1.0) continue;

        std::vector<std::size_t> wanted = remaining;
        wanted.push_back(s);
        ensure_rows(wanted);
        for (auto j : remaining) {
            double sim = 0.5 * (rows[j][s] + rows[s][j]);
            max_sim[j] = std::max(max_sim[j], sim);
            ++out.stats.similarity_evaluations;
        }
    }

    auto tick = ++state_->clock;
    for (auto i : picked) {
        pool[i]->last_used.store(tick);
        out.selected.push_back(pool[i]->snapshot());
        out.relevance.push_back(relevance[i]);
    }
    ++(out.selected.empty() ? state_->misses : state_->hits);
    return out;
}

CacheEntry SemanticCache::insert(std::string domain, std::string aspect, std::string question,
                                 QueryPlan plan, std::string answer,
                                 const std::set<std::string>* vocabulary) {
    if (plan.empty()) throw UsageError("cache insert needs a non-empty plan");
    if (vocabulary) {
        auto violations = validate(plan, *vocabulary);
        if (!violations.empty()) throw UsageError("cache insert: " + violations.front());
    }
    auto entry = std::make_unique<Stored>();
    entry->domain = std::move(domain);
    entry->aspect = std::move(aspect);
    entry->question = std::move(question);
    entry->serialized_plan = plan.serialize();
    entry->plan = std::move(plan);
    entry->answer = std::move(answer);

    std::unique_lock lock(state_->mutex);
    entry->id = state_->next_id++;
    entry->last_used.store(++state_->clock);
    auto result = entry->snapshot();
    state_->place(std::move(entry));
    return result;
}

bool SemanticCache::contains(std::string_view domain, std::string_view question,
                             const QueryPlan& plan) const {
    std::shared_lock lock(state_->mutex);
    auto dom = state_->buckets.find(domain);
    if (dom == state_->buckets.end()) return false;
    auto serialized = plan.serialize();
    for (const auto& [_, bucket] : dom->second) {
        for (const auto& e : bucket) {
            if (e->question == question && e->serialized_plan == serialized) return true;
        }
    }
    return false;
}

std::size_t SemanticCache::size() const {
    std::shared_lock lock(state_->mutex);
    std::size_t n = 0;
    for (const auto& [_, aspects] : state_->buckets) {
        for (const auto& [__, bucket] : aspects) n += bucket.size();
    }
    return n;
}

CacheStats SemanticCache::stats() const {
    std::shared_lock lock(state_->mutex);
    CacheStats s;
    for (const auto& [domain, aspects] : state_->buckets) {
        for (const auto& [aspect, bucket] : aspects) {
            if (bucket.empty()) continue;
            s.buckets[{domain, aspect}] = bucket.size();
            s.entries += bucket.size();
            for (const auto& e : bucket) s.bytes += e->bytes();
        }
    }
    s.hits = state_->hits.load();
    s.misses = state_->misses.load();
    s.inserts = state_->inserts;
    s.evictions = state_->evictions;
    return s;
}

std::vector<CacheEntry> SemanticCache::entries() const {
    std::shared_lock lock(state_->mutex);
    std::vector<CacheEntry> out;
    for (const auto& [_, aspects] : state_->buckets) {
        for (const auto& [__, bucket] : aspects) {
            for (const auto& e : bucket) out.push_back(e->snapshot());
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

void SemanticCache::export_jsonl(std::ostream& out) const {
    for (const auto& e : entries()) {
        nlohmann::ordered_json line{{"id", e.id},           {"domain", e.domain},
                                    {"aspect", e.aspect},   {"question", e.question},
                                    {"plan", e.plan.serialize()}, {"answer", e.answer},
                                    {"last_used", e.last_used}};
        out << line.dump() << '\n';
    }
}

SemanticCache SemanticCache::import_jsonl(std::istream& in, CacheConfig config) {
    SemanticCache cache(config);
    auto& st = *cache.state_;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::unique_ptr<Stored>> loaded;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto entry = std::make_unique<Stored>();
        try {
            auto j = nlohmann::json::parse(line);
            entry->id = j.at("id").get<std::uint64_t>();
            entry->domain = j.at("domain").get<std::string>();
            entry->aspect = j.at("aspect").get<std::string>();
            entry->question = j.at("question").get<std::string>();
            entry->plan = QueryPlan::parse(j.at("plan").get<std::string>());
            entry->answer = j.at("answer").get<std::string>();
            entry->last_used.store(j.at("last_used").get<std::uint64_t>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("cache record: ") + e.what(), line_no);
        } catch (const ParseError& e) {
            throw ParseError(std::string("cache record plan: ") + e.what(), line_no);
        }
        if (entry->plan.empty()) throw ParseError("cache record with empty plan", line_no);
        entry->serialized_plan = entry->plan.serialize();
        loaded.push_back(std::move(entry));
    }
    std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) { return a->id < b->id; });
    for (std::size_t i = 1; i < loaded.size(); ++i) {
        if (loaded[i]->id == loaded[i - 1]->id) {
            throw ParseError("duplicate cache id " + std::to_string(loaded[i]->id));
        }
    }
    std::uint64_t max_tick = 0;
    for (auto& e : loaded) {
        max_tick = std::max(max_tick, e->last_used.load());
        st.next_id = std::max(st.next_id, e->id + 1);
        st.place(std::move(e));
    }
    st.clock.store(max_tick);
    st.inserts = 0;
    st.evictions = 0;
    return cache;
}

}  // namespace cacherag
