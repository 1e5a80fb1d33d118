#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cacherag {

struct PointQuery {
    std::string entity;
    std::string predicate;

    friend auto operator<=>(const PointQuery&, const PointQuery&) = default;
};

struct StarQuery {
    std::string entity;

    friend auto operator<=>(const StarQuery&, const StarQuery&) = default;
};

struct ApiCall {
    std::string name;
    std::map<std::string, std::string> args;

    friend auto operator<=>(const ApiCall&, const ApiCall&) = default;
};

using PlanOp = std::variant<PointQuery, StarQuery, ApiCall>;

// Appended by a traversal step that had no relation to follow.
inline constexpr std::string_view kBreadthStepCall = "expand.breadth";

// Wire form without the "OP: " prefix:
//   POINT <entity> <predicate>      (predicate is the last token)
//   STAR <entity>
//   API <name> key=value key2="value with spaces"
std::string format_op(const PlanOp& op);
std::optional<PlanOp> parse_op(std::string_view body);

struct QueryPlan {
    std::vector<PlanOp> ops;

    bool empty() const { return ops.empty(); }
    std::size_t size() const { return ops.size(); }

    // One "OP: ..." line per op, joined by '\n', no trailing newline. This is
    // also the persisted form in cache files.
    std::string serialize() const;
    // Strict: every non-blank line must be a valid OP line.
    static QueryPlan parse(std::string_view text);

    friend bool operator==(const QueryPlan&, const QueryPlan&) = default;
};

// OP lines scraped from free-form model output; other lines are ignored.
struct ScrapedOps {
    std::vector<PlanOp> ops;
    std::size_t malformed = 0;  // lines starting with OP: that did not parse
};

ScrapedOps scrape_ops(std::string_view completion);

// One message per PointQuery whose predicate is outside the vocabulary.
std::vector<std::string> validate(const QueryPlan& plan, const std::set<std::string>& vocabulary);

}  // namespace cacherag
