#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace lcd {

using node = std::uint32_t;
using label_t = std::int64_t;

/**
 * Immutable undirected simple graph in compressed adjacency form.
 *
 * Nodes are dense indices 0..N-1. Each node keeps the external id it was
 * loaded with; external ids are sorted ascending with the dense index, so a
 * graph reloads to the same indexing regardless of edge order in the file.
 * Neighbor lists are sorted and free of duplicates and self-loops.
 */
class Graph {
public:
    Graph() = default;

    /// Builds a graph over nodes 0..n-1 with identity labels. Self-loops and
    /// duplicate edges are discarded; `dropped` receives their number.
    static Graph from_edges(node n, std::span<const std::pair<node, node>> edges, std::size_t *dropped = nullptr) {
        std::vector<label_t> labels(n);
        for (node i = 0; i < n; ++i)
            labels[i] = i;
        return build(std::move(labels), edges, nullptr, dropped);
    }

    /// Builds a graph whose dense index i carries external id labels[i]
    /// (labels must be strictly increasing).
    static Graph from_labelled_edges(std::vector<label_t> labels, std::span<const std::pair<node, node>> edges,
                                     std::size_t *self_loops = nullptr, std::size_t *duplicates = nullptr) {
        if (!std::is_sorted(labels.begin(), labels.end()) ||
            std::adjacent_find(labels.begin(), labels.end()) != labels.end())
            throw DomainError("node labels must be strictly increasing");
        std::size_t dup = 0;
        Graph g = build(std::move(labels), edges, self_loops, &dup);
        if (duplicates)
            *duplicates = dup;
        return g;
    }

    node node_count() const noexcept { return static_cast<node>(offsets_.empty() ? 0 : offsets_.size() - 1); }
    std::uint64_t edge_count() const noexcept { return targets_.size() / 2; }

    std::uint32_t degree(node u) const noexcept { return static_cast<std::uint32_t>(offsets_[u + 1] - offsets_[u]); }

    std::span<const node> neighbors(node u) const noexcept {
        return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
    }

    bool has_edge(node u, node v) const noexcept {
        auto nb = neighbors(u);
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    label_t label(node u) const noexcept { return labels_[u]; }
    std::span<const label_t> labels() const noexcept { return labels_; }

    std::optional<node> index_of(label_t external) const noexcept {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), external);
        if (it == labels_.end() || *it != external)
            return std::nullopt;
        return static_cast<node>(it - labels_.begin());
    }

    /// Calls f(u, v) once per edge with u < v.
    template <typename F>
    void for_edges(F &&f) const {
        for (node u = 0; u < node_count(); ++u)
            for (node v : neighbors(u))
                if (u < v)
                    f(u, v);
    }

private:
    static Graph build(std::vector<label_t> labels, std::span<const std::pair<node, node>> edges,
                       std::size_t *self_loops, std::size_t *duplicates) {
        const auto n = static_cast<node>(labels.size());
        std::vector<std::pair<node, node>> arcs;
        arcs.reserve(edges.size() * 2);
        std::size_t loops = 0;
        for (auto [u, v] : edges) {
            if (u >= n || v >= n)
                throw DomainError("edge endpoint out of range");
            if (u == v) {
                ++loops;
                continue;
            }
            arcs.emplace_back(u, v);
            arcs.emplace_back(v, u);
        }
        std::sort(arcs.begin(), arcs.end());
        const auto before = arcs.size();
        arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

        Graph g;
        g.labels_ = std::move(labels);
        g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (auto [u, v] : arcs)
            ++g.offsets_[u + 1];
        for (std::size_t i = 0; i < n; ++i)
            g.offsets_[i + 1] += g.offsets_[i];
        g.targets_.reserve(arcs.size());
        for (auto [u, v] : arcs)
            g.targets_.push_back(v);

        if (self_loops)
            *self_loops = loops;
        if (duplicates)
            *duplicates = (before - arcs.size()) / 2;
        return g;
    }

    std::vector<std::uint64_t> offsets_;
    std::vector<node> targets_;
    std::vector<label_t> labels_;
};

/// Counts of edges discarded while loading.
struct LoadReport {
    std::size_t lines = 0;
    std::size_t self_loops = 0;
    std::size_t duplicates = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Splits `line` on blanks and parses each token as a signed 64-bit id.
inline bool parse_ids(std::string_view line, std::vector<label_t> &out) {
    out.clear();
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
            ++pos;
        if (pos >= line.size())
            break;
        std::size_t end = pos;
        while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r')
            ++end;
        label_t value = 0;
        const char *first = line.data() + pos;
        const char *last = line.data() + end;
        if (*first == '+')
            ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last)
            return false;
        out.push_back(value);
        pos = end;
    }
    return true;
}

} // namespace detail

/**
 * Reads a whitespace-delimited edge list ("u v" per line, '#' comments).
 * External ids are compacted to dense indices in ascending id order.
 */
inline Graph load_edge_list(std::istream &in, LoadReport *report = nullptr) {
    std::vector<std::pair<label_t, label_t>> raw;
    std::vector<label_t> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#' || body.front() == '%')
            continue;
        if (!detail::parse_ids(body, ids) || ids.size() != 2)
            throw ParseError("expected two integer node ids, got '" + std::string(body) + "'", lineno);
        raw.emplace_back(ids[0], ids[1]);
    }
    if (raw.empty())
        throw ParseError("edge list is empty");

    std::vector<label_t> labels;
    labels.reserve(raw.size() * 2);
    for (auto [a, b] : raw) {
        labels.push_back(a);
        labels.push_back(b);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

    auto dense = [&](label_t x) {
        return static_cast<node>(std::lower_bound(labels.begin(), labels.end(), x) - labels.begin());
    };
    std::vector<std::pair<node, node>> edges;
    edges.reserve(raw.size());
    for (auto [a, b] : raw)
        edges.emplace_back(dense(a), dense(b));
    raw.clear();
    raw.shrink_to_fit();

    LoadReport local;
    local.lines = lineno;
    Graph g = Graph::from_labelled_edges(std::move(labels), edges, &local.self_loops, &local.duplicates);
    if (report)
        *report = local;
    return g;
}

/// Writes each edge once as "u v" using external ids.
inline void write_edge_list(std::ostream &out, const Graph &g) {
    g.for_edges([&](node u, node v) { out << g.label(u) << ' ' << g.label(v) << '\n'; });
}

enum class UnknownIds { Error, Drop };

/**
 * Reads one community per line (whitespace-separated external ids) and
 * translates members to dense indices. Communities with fewer than
 * `min_size` members are skipped. Members are returned sorted and unique.
 */
inline std::vector<std::vector<node>> load_communities(std::istream &in, const Graph &g, std::size_t min_size = 3,
                                                       UnknownIds unknown = UnknownIds::Error) {
    std::vector<std::vector<node>> out;
    std::vector<label_t> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#')
            continue;
        if (!detail::parse_ids(body, ids))
            throw ParseError("malformed community line", lineno);
        std::vector<node> members;
        members.reserve(ids.size());
        for (label_t id : ids) {
            auto idx = g.index_of(id);
            if (!idx) {
                if (unknown == UnknownIds::Drop)
                    continue;
                throw ParseError("node id " + std::to_string(id) + " is not in the graph", lineno);
            }
            members.push_back(*idx);
        }
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (members.size() >= min_size && !members.empty())
            out.push_back(std::move(members));
    }
    return out;
}

/// Writes one community per line using external ids.
inline void write_communities(std::ostream &out, const Graph &g, const std::vector<std::vector<node>> &communities) {
    for (const auto &c : communities) {
        for (std::size_t i = 0; i < c.size(); ++i)
            out << (i ? " " : "") << g.label(c[i]);
        out << '\n';
    }
}

/// 64-bit FNV-1a over the canonical (label-sorted) edge list.
inline std::uint64_t fingerprint(const Graph &g) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(g.node_count());
    g.for_edges([&](node u, node v) {
        mix(static_cast<std::uint64_t>(g.label(u)));
        mix(static_cast<std::uint64_t>(g.label(v)));
    });
    return h;
}

/**
 * Node set with O(1) membership and O(n) iteration: a bitset over all graph
 * nodes plus the member list in insertion order. clear() costs O(n), not O(N).
 */
class MemberSet {
public:
    MemberSet() = default;
    explicit MemberSet(node universe) : bits_((static_cast<std::size_t>(universe) + 63) / 64, 0) {}

    bool contains(node u) const noexcept { return (bits_[u >> 6] >> (u & 63)) & 1U; }

    /// Returns false if u was already present.
    bool insert(node u) {
        if (contains(u))
            return false;
        bits_[u >> 6] |= std::uint64_t{1} << (u & 63);
        list_.push_back(u);
        return true;
    }

    void clear() noexcept {
        for (node u : list_)
            bits_[u >> 6] &= ~(std::uint64_t{1} << (u & 63));
        list_.clear();
    }

    std::size_t size() const noexcept { return list_.size(); }
    bool empty() const noexcept { return list_.empty(); }
    std::span<const node> members() const noexcept { return list_; }

    std::vector<node> sorted() const {
        std::vector<node> out(list_);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<std::uint64_t> bits_;
    std::vector<node> list_;
};

/**
 * Sufficient statistics of a candidate community: node count, within edges
 * (each edge once), volume, and the sum of squared degree-shape parameters
 * sum_i (shape_base + deg(i))^2 used by the degree-corrected score.
 */
struct CommunityStats {
    std::uint64_t n = 0;
    std::uint64_t w = 0;
    std::uint64_t v = 0;
    double sumsq = 0.0;

    bool operator==(const CommunityStats &) const = default;
};

/// Statistics of `members` computed from scratch in O(vol).
inline CommunityStats community_stats(const Graph &g, const MemberSet &members, double shape_base) {
    if (members.empty())
        throw DomainError("community_stats: empty member set");
    CommunityStats s;
    std::uint64_t endpoints = 0;
    for (node u : members.members()) {
        const auto d = g.degree(u);
        s.n += 1;
        s.v += d;
        s.sumsq += (shape_base + d) * (shape_base + d);
        for (node x : g.neighbors(u))
            endpoints += members.contains(x);
    }
    s.w = endpoints / 2;
    return s;
}

inline CommunityStats community_stats(const Graph &g, std::span<const node> members, double shape_base) {
    MemberSet set(g.node_count());
    for (node u : members)
        set.insert(u);
    return community_stats(g, set, shape_base);
}

/// Number of neighbors of u inside `members`.
inline std::uint64_t edges_into(const Graph &g, node u, const MemberSet &members) noexcept {
    std::uint64_t k = 0;
    for (node x : g.neighbors(u))
        k += members.contains(x);
    return k;
}

/// Statistics of members ∪ {u}, in O(deg(u)).
inline CommunityStats add_node_delta(const CommunityStats &stats, const Graph &g, node u, const MemberSet &members,
                                     double shape_base) {
    if (members.contains(u))
        throw DomainError("add_node_delta: node " + std::to_string(g.label(u)) + " is already a member");
    const auto d = g.degree(u);
    CommunityStats s = stats;
    s.n += 1;
    s.w += edges_into(g, u, members);
    s.v += d;
    s.sumsq += (shape_base + d) * (shape_base + d);
    return s;
}

} // namespace lcd
