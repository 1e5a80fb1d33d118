#include "cacherag/spo_index.hpp"

#include <algorithm>

namespace cacherag {

namespace {

// Largest position in [begin, end) whose key is below `key`, or begin when
// there is none. Branch-free halving: a node of length m always costs
// ceil(log2(m)) comparisons, whatever the key.
std::size_t last_below(const std::vector<std::uint64_t>& keys, std::size_t begin, std::size_t end,
                       std::uint64_t key, std::uint64_t& comparisons) {
    std::size_t base = begin;
    std::size_t len = end - begin;
    while (len > 1) {
        std::size_t half = len / 2;
        ++comparisons;
        base = keys[base + half] < key ? base + half : base;
        len -= half;
    }
    return base;
}

}  // namespace

SpoIndex::SpoIndex(std::vector<std::uint64_t> sorted_keys) {
    levels_.push_back(std::move(sorted_keys));
    while (levels_.back().size() > kFanout) {
        const auto& below = levels_.back();
        const std::size_t m = below.size();
        const std::size_t nodes = (m + kFanout - 1) / kFanout;
        std::vector<std::uint64_t> upper;
        upper.reserve(nodes);
        for (std::size_t j = 0; j < nodes; ++j) upper.push_back(below[node_begin(j, m, nodes)]);
        levels_.push_back(std::move(upper));
    }
}

std::size_t SpoIndex::lower_bound(std::uint64_t key, std::uint64_t& comparisons) const {
    if (levels_.empty() || levels_.front().empty()) return 0;
    std::size_t begin = 0;
    std::size_t end = levels_.back().size();
    for (std::size_t level = levels_.size() - 1;; --level) {
        const auto& keys = levels_[level];
        std::size_t pos = last_below(keys, begin, end, key, comparisons);
        if (level == 0) {
            ++comparisons;
            return keys[pos] < key ? pos + 1 : pos;
        }
        // Every later child starts at or above the target.
        const std::size_t m = levels_[level - 1].size();
        begin = node_begin(pos, m, keys.size());
        end = node_begin(pos + 1, m, keys.size());
    }
}

}  // namespace cacherag
