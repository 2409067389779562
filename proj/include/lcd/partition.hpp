#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "error.hpp"
#include "graph.hpp"

namespace lcd {

/// Total node and edge counts a score is evaluated against. These are the
/// actual graph totals, or formal totals when the graph size is a parameter.
struct GraphTotals {
    double nodes = 0.0;
    double edges = 0.0;
};

inline GraphTotals actual_totals(const Graph &g) noexcept {
    return {static_cast<double>(g.node_count()), static_cast<double>(g.edge_count())};
}

/// Totals for a formal graph size, keeping the average degree of g.
inline GraphTotals formal_n_totals(const Graph &g, std::uint64_t formal_n) {
    if (formal_n < 1)
        throw DomainError("formal N must be at least 1");
    if (g.node_count() == 0)
        throw DomainError("formal N requires a non-empty graph");
    const double mean_degree = 2.0 * static_cast<double>(g.edge_count()) / g.node_count();
    const auto n = static_cast<double>(formal_n);
    return {n, n * mean_degree / 2.0};
}

/// Hard partition of the nodes into communities 0..count-1.
class Partition {
public:
    Partition() = default;

    /// Relabels arbitrary community ids densely, in order of first appearance.
    static Partition from_assignment(std::span<const std::uint32_t> raw) {
        Partition p;
        p.assignment_.resize(raw.size());
        std::vector<std::uint32_t> remap;
        constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto c = raw[i];
            if (c >= remap.size())
                remap.resize(static_cast<std::size_t>(c) + 1, unset);
            if (remap[c] == unset) {
                remap[c] = static_cast<std::uint32_t>(p.sizes_.size());
                p.sizes_.push_back(0);
            }
            p.assignment_[i] = remap[c];
            ++p.sizes_[remap[c]];
        }
        return p;
    }

    static Partition singletons(node n) {
        std::vector<std::uint32_t> a(n);
        for (node i = 0; i < n; ++i)
            a[i] = i;
        return from_assignment(a);
    }

    static Partition single(node n) { return from_assignment(std::vector<std::uint32_t>(n, 0)); }

    /// Partition from explicit node sets; every node of a graph with `n`
    /// nodes must be covered exactly once.
    static Partition from_sets(node n, const std::vector<std::vector<node>> &sets) {
        constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
        std::vector<std::uint32_t> a(n, unset);
        for (std::size_t c = 0; c < sets.size(); ++c)
            for (node u : sets[c]) {
                if (u >= n || a[u] != unset)
                    throw DomainError("sets do not form a partition");
                a[u] = static_cast<std::uint32_t>(c);
            }
        if (std::find(a.begin(), a.end(), unset) != a.end())
            throw DomainError("partition does not cover node");
        return from_assignment(a);
    }

    std::size_t node_count() const noexcept { return assignment_.size(); }
    std::size_t community_count() const noexcept { return sizes_.size(); }
    std::uint32_t operator[](node u) const noexcept { return assignment_[u]; }
    std::span<const std::uint32_t> assignment() const noexcept { return assignment_; }
    std::span<const std::uint64_t> sizes() const noexcept { return sizes_; }

    std::vector<std::vector<node>> communities() const {
        std::vector<std::vector<node>> out(sizes_.size());
        for (std::size_t c = 0; c < sizes_.size(); ++c)
            out[c].reserve(sizes_[c]);
        for (node u = 0; u < assignment_.size(); ++u)
            out[assignment_[u]].push_back(u);
        return out;
    }

    bool operator==(const Partition &) const = default;

private:
    std::vector<std::uint32_t> assignment_;
    std::vector<std::uint64_t> sizes_;
};

inline void require_covers(const Graph &g, const Partition &p) {
    if (p.node_count() != g.node_count())
        throw DomainError("partition covers " + std::to_string(p.node_count()) + " nodes, graph has " +
                          std::to_string(g.node_count()));
}

} // namespace lcd
