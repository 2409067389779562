#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <lcd/lcd.hpp>

namespace fixtures {

using Edges = std::vector<std::pair<lcd::node, lcd::node>>;

inline void add_clique(Edges &e, lcd::node first, lcd::node size) {
    for (lcd::node i = 0; i < size; ++i)
        for (lcd::node j = i + 1; j < size; ++j)
            e.emplace_back(first + i, first + j);
}

inline lcd::Graph cliques(lcd::node count, lcd::node size) {
    Edges e;
    for (lcd::node c = 0; c < count; ++c)
        add_clique(e, c * size, size);
    return lcd::Graph::from_edges(count * size, e);
}

/// Two 4-cliques {0..3} and {4..7} joined by the edge 3-4.
inline lcd::Graph bridged_cliques() {
    Edges e;
    add_clique(e, 0, 4);
    add_clique(e, 4, 4);
    e.emplace_back(3, 4);
    return lcd::Graph::from_edges(8, e);
}

inline lcd::Graph random_graph(lcd::node n, double p, std::uint64_t seed) {
    lcd::Rng rng(seed);
    Edges e;
    for (lcd::node i = 0; i < n; ++i)
        for (lcd::node j = i + 1; j < n; ++j)
            if (rng.bernoulli(p))
                e.emplace_back(i, j);
    return lcd::Graph::from_edges(n, e);
}

inline lcd::Partition blocks(lcd::node count, lcd::node size) {
    std::vector<std::uint32_t> a(count * size);
    for (lcd::node i = 0; i < a.size(); ++i)
        a[i] = i / size;
    return lcd::Partition::from_assignment(a);
}

/// Calls f on every set partition of n nodes (restricted growth strings).
inline void for_each_partition(lcd::node n, const std::function<void(const std::vector<std::uint32_t> &)> &f) {
    std::vector<std::uint32_t> a(n, 0);
    std::function<void(lcd::node, std::uint32_t)> rec = [&](lcd::node i, std::uint32_t used) {
        if (i == n) {
            f(a);
            return;
        }
        for (std::uint32_t c = 0; c <= used; ++c) {
            a[i] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    a[0] = 0;
    rec(1, 1);
}

/// Best-scoring subset of `pool` that contains `seed`, found by enumeration.
template <typename Scorer>
std::vector<lcd::node> brute_force(const lcd::Graph &g, lcd::node seed, const std::vector<lcd::node> &pool, const Scorer &score) {
    std::vector<lcd::node> others;
    for (lcd::node u : pool)
        if (u != seed)
            others.push_back(u);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<lcd::node> arg;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << others.size()); ++mask) {
        std::vector<lcd::node> c{seed};
        for (std::size_t b = 0; b < others.size(); ++b)
            if (mask >> b & 1)
                c.push_back(others[b]);
        const double s = score(lcd::community_stats(g, std::span<const lcd::node>(c), score.shape_base()));
        if (s > best) {
            best = s;
            std::sort(c.begin(), c.end());
            arg = c;
        }
    }
    return arg;
}

inline std::vector<lcd::node> range(lcd::node from, lcd::node to) {
    std::vector<lcd::node> v(to - from);
    std::iota(v.begin(), v.end(), from);
    return v;
}

/// An m-clique on 0..m-1 next to a separate 30-node G(30, 0.2) component.
inline lcd::Graph clique_plus_noise(lcd::node m, std::uint64_t seed) {
    Edges e;
    add_clique(e, 0, m);
    lcd::Rng r(seed);
    for (lcd::node i = m; i < m + 30; ++i)
        for (lcd::node j = i + 1; j < m + 30; ++j)
            if (r.bernoulli(0.2))
                e.emplace_back(i, j);
    return lcd::Graph::from_edges(m + 30, e);
}

} // namespace fixtures
