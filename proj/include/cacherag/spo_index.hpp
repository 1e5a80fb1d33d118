#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cacherag {

// Read-only B+-tree over sorted 64-bit keys. Level 0 holds every key; each
// upper level holds the first key of every node below it, up to a root of at
// most kFanout keys. Nodes on a level are filled evenly (sizes differ by at
// most one), so every lookup on a given tree walks nodes of the same length. Lookups count key comparisons so callers can
// check the logarithmic cost directly.
class SpoIndex {
public:
    static constexpr std::size_t kFanout = 16;

    SpoIndex() = default;
    explicit SpoIndex(std::vector<std::uint64_t> sorted_keys);

    // First position whose key is >= key (size() if none).
    std::size_t lower_bound(std::uint64_t key, std::uint64_t& comparisons) const;

    std::uint64_t key(std::size_t pos) const { return levels_.front()[pos]; }
    std::size_t size() const { return levels_.empty() ? 0 : levels_.front().size(); }
    std::size_t depth() const { return levels_.size(); }

private:
    // First child of node j when m children are split evenly over `nodes` nodes.
    static std::size_t node_begin(std::size_t j, std::size_t m, std::size_t nodes) {
        return j * m / nodes;
    }

    std::vector<std::vector<std::uint64_t>> levels_;
};

}  // namespace cacherag
