#include "cacherag/plan.hpp"

#include <cctype>

#include "cacherag/error.hpp"
#include "cacherag/text.hpp"

namespace cacherag {

namespace {

bool needs_quotes(std::string_view v) {
    if (v.empty()) return true;
    for (char c : v) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\\') return true;
    }
    return false;
}

std::string quote(std::string_view v) {
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

// Parses `k=v k2="v w"`; nullopt on malformed input.
std::optional<std::map<std::string, std::string>> parse_args(std::string_view s) {
    std::map<std::string, std::string> args;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    };
    skip_ws();
    while (i < s.size()) {
        auto eq = s.find('=', i);
        if (eq == std::string_view::npos) return std::nullopt;
        std::string key(s.substr(i, eq - i));
        if (key.empty() || key.find_first_of(" \t\"") != std::string::npos) return std::nullopt;
        i = eq + 1;
        std::string value;
        if (i < s.size() && s[i] == '"') {
            ++i;
            bool closed = false;
            while (i < s.size()) {
                char c = s[i++];
                if (c == '\\' && i < s.size()) {
                    value += s[i++];
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    value += c;
                }
            }
            if (!closed) return std::nullopt;
        } else {
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) value += s[i++];
        }
        args[key] = value;
        skip_ws();
    }
    return args;
}

}  // namespace

std::string format_op(const PlanOp& op) {
    if (const auto* p = std::get_if<PointQuery>(&op)) return "POINT " + p->entity + " " + p->predicate;
    if (const auto* s = std::get_if<StarQuery>(&op)) return "STAR " + s->entity;
    const auto& api = std::get<ApiCall>(op);
    std::string out = "API " + api.name;
    for (const auto& [k, v] : api.args) out += " " + k + "=" + (needs_quotes(v) ? quote(v) : v);
    return out;
}

std::optional<PlanOp> parse_op(std::string_view body) {
    body = text::trim(body);
    auto sp = body.find_first_of(" \t");
    std::string kind = text::to_lower(body.substr(0, sp));
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : text::trim(body.substr(sp));
    if (rest.empty()) return std::nullopt;
    if (kind == "point") {
        auto last = rest.find_last_of(" \t");
        if (last == std::string_view::npos) return std::nullopt;
        std::string entity(text::trim(rest.substr(0, last)));
        std::string predicate(text::trim(rest.substr(last + 1)));
        if (entity.empty() || predicate.empty()) return std::nullopt;
        return PointQuery{std::move(entity), std::move(predicate)};
    }
    if (kind == "star") return StarQuery{std::string(rest)};
    if (kind == "api") {
        auto nsp = rest.find_first_of(" \t");
        std::string name(rest.substr(0, nsp));
        auto args = parse_args(nsp == std::string_view::npos ? std::string_view{} : rest.substr(nsp));
        if (!args) return std::nullopt;
        return ApiCall{std::move(name), std::move(*args)};
    }
    return std::nullopt;
}

std::string QueryPlan::serialize() const {
    std::string out;
    for (const auto& op : ops) {
        if (!out.empty()) out += '\n';
        out += "OP: " + format_op(op);
    }
    return out;
}

QueryPlan QueryPlan::parse(std::string_view source) {
    QueryPlan plan;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(source)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty()) continue;
        if (!text::starts_with_ci(line, "OP:")) throw ParseError("expected an OP: line", line_no);
        auto op = parse_op(line.substr(3));
        if (!op) throw ParseError("malformed plan op: " + std::string(line), line_no);
        plan.ops.push_back(std::move(*op));
    }
    return plan;
}

ScrapedOps scrape_ops(std::string_view completion) {
    ScrapedOps out;
    for (const auto& raw : text::split_lines(completion)) {
        auto line = text::trim(raw);
        while (!line.empty() && (line.front() == '-' || line.front() == '*')) line = text::trim(line.substr(1));
        if (!text::starts_with_ci(line, "OP:")) continue;
        if (auto op = parse_op(line.substr(3))) {
            out.ops.push_back(std::move(*op));
        } else {
            ++out.malformed;
        }
    }
    return out;
}

std::vector<std::string> validate(const QueryPlan& plan, const std::set<std::string>& vocabulary) {
    std::vector<std::string> violations;
    for (const auto& op : plan.ops) {
        if (const auto* p = std::get_if<PointQuery>(&op)) {
            if (!vocabulary.count(p->predicate)) {
                violations.push_back("predicate '" + p->predicate + "' is not in the vocabulary");
            }
        }
    }
    return violations;
}

}  // namespace cacherag
