#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <sstream>

#include <lcd/graph.hpp>

#include "fixtures.hpp"

using namespace lcd;

namespace {

Graph parse(const std::string &text, LoadReport *rep = nullptr) {
    std::istringstream in(text);
    return load_edge_list(in, rep);
}

} // namespace

TEST(LoadEdgeList, PathGraph) {
    Graph g = parse("0 1\n1 2\n");
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(g.degree(0), 1u);
    EXPECT_EQ(g.degree(1), 2u);
    EXPECT_EQ(g.degree(2), 1u);
}

TEST(LoadEdgeList, DropsDuplicatesAndSelfLoops) {
    LoadReport rep;
    Graph g = parse("0 1\n1 0\n0 0\n", &rep);
    EXPECT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_EQ(rep.self_loops, 1u);
    EXPECT_EQ(rep.duplicates, 1u);
}

TEST(LoadEdgeList, CommentsAndSparseIds) {
    Graph g = parse("# header\n% other\n10 300\n\n300\t7\n");
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.label(0), 7);
    EXPECT_EQ(g.label(2), 300);
    EXPECT_EQ(*g.index_of(10), 1u);
    EXPECT_FALSE(g.index_of(11).has_value());
    EXPECT_TRUE(g.has_edge(*g.index_of(7), *g.index_of(300)));
}

TEST(LoadEdgeList, MalformedLineReportsLineNumber) {
    try {
        parse("0 1\n1 x\n");
        FAIL();
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse("0 1 2\n"), ParseError);
    EXPECT_THROW(parse("# nothing\n"), Error);
}

TEST(LoadEdgeList, RoundTrip) {
    Graph g = fixtures::random_graph(30, 0.2, 4);
    std::ostringstream out;
    write_edge_list(out, g);
    Graph h = parse(out.str());
    EXPECT_EQ(fingerprint(g), fingerprint(h));
}

TEST(GraphInvariants, SymmetricSimpleAndHandshake) {
    Graph g = fixtures::random_graph(60, 0.1, 8);
    std::uint64_t total = 0;
    for (node u = 0; u < g.node_count(); ++u) {
        std::set<node> seen;
        for (node x : g.neighbors(u)) {
            EXPECT_NE(x, u);
            EXPECT_TRUE(seen.insert(x).second);
            EXPECT_TRUE(g.has_edge(x, u));
        }
        total += g.degree(u);
    }
    EXPECT_EQ(total, 2 * g.edge_count());
}

TEST(LoadCommunities, SizesAndFilter) {
    Graph g = parse("1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n");
    std::istringstream a("1 2 3\n4 5 6 7\n");
    auto cs = load_communities(a, g, 3);
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[0].size(), 3u);
    EXPECT_EQ(cs[1].size(), 4u);

    std::istringstream b("1 2\n3 4 5\n");
    cs = load_communities(b, g, 3);
    ASSERT_EQ(cs.size(), 1u);
    std::vector<label_t> ids;
    for (node u : cs[0])
        ids.push_back(g.label(u));
    EXPECT_EQ(ids, (std::vector<label_t>{3, 4, 5}));
}

TEST(LoadCommunities, UnknownIds) {
    Graph g = parse("1 2\n2 3\n");
    std::istringstream a("1 2 99\n");
    EXPECT_THROW(load_communities(a, g, 1), ParseError);
    std::istringstream b("1 2 99\n");
    auto cs = load_communities(b, g, 1, UnknownIds::Drop);
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].size(), 2u);
}

TEST(CommunityStats, CliqueArithmetic) {
    Graph g = fixtures::cliques(2, 4);
    std::vector<node> c{0, 1, 2, 3};
    auto s = community_stats(g, std::span<const node>(c), 1.0);
    EXPECT_EQ(s.n, 4u);
    EXPECT_EQ(s.w, 6u);
    EXPECT_EQ(s.v, 12u);
    EXPECT_DOUBLE_EQ(s.sumsq, 4 * 16.0);
    auto z = community_stats(g, std::span<const node>(c), 0.0);
    EXPECT_DOUBLE_EQ(z.sumsq, 36.0);
}

TEST(CommunityStats, SingleNode) {
    fixtures::Edges e{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}};
    Graph g = Graph::from_edges(6, e);
    std::vector<node> c{0};
    auto s = community_stats(g, std::span<const node>(c), 0.0);
    EXPECT_EQ(s.n, 1u);
    EXPECT_EQ(s.w, 0u);
    EXPECT_EQ(s.v, 5u);
    EXPECT_DOUBLE_EQ(s.sumsq, 25.0);
}

TEST(CommunityStats, MatchesPairScan) {
    Graph g = fixtures::random_graph(80, 0.15, 21);
    Rng r(2);
    std::vector<node> all(80);
    std::iota(all.begin(), all.end(), 0);
    r.shuffle(std::span<node>(all));
    std::vector<node> c(all.begin(), all.begin() + 20);
    std::uint64_t w = 0, v = 0;
    double sq = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        v += g.degree(c[i]);
        sq += (1.0 + g.degree(c[i])) * (1.0 + g.degree(c[i]));
        for (std::size_t j = i + 1; j < c.size(); ++j)
            w += g.has_edge(c[i], c[j]);
    }
    auto s = community_stats(g, std::span<const node>(c), 1.0);
    EXPECT_EQ(s.n, 20u);
    EXPECT_EQ(s.w, w);
    EXPECT_EQ(s.v, v);
    EXPECT_DOUBLE_EQ(s.sumsq, sq);
    EXPECT_LE(2 * s.w, s.v);
}

TEST(AddNodeDelta, IsolatedAndCounted) {
    fixtures::Edges e{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {1, 2}};
    Graph g = Graph::from_edges(9, e);
    MemberSet m(9);
    m.insert(1);
    m.insert(2);
    m.insert(3);
    auto base = community_stats(g, m, 0.0);
    auto iso = add_node_delta(base, g, 8, m, 0.0);
    EXPECT_EQ(iso.w, base.w);
    EXPECT_EQ(iso.v, base.v);
    EXPECT_EQ(iso.n, base.n + 1);
    auto hub = add_node_delta(base, g, 0, m, 0.0);
    EXPECT_EQ(hub.w - base.w, 3u);
    EXPECT_EQ(hub.v - base.v, 7u);
    EXPECT_THROW(add_node_delta(base, g, 1, m, 0.0), DomainError);
}

TEST(AddNodeDelta, GrowthSequenceMatchesScratch) {
    Graph g = fixtures::random_graph(120, 0.08, 33);
    Rng r(4);
    std::vector<node> order(120);
    std::iota(order.begin(), order.end(), 0);
    r.shuffle(std::span<node>(order));
    MemberSet m(120);
    m.insert(order[0]);
    auto s = community_stats(g, m, 2.0);
    for (int i = 1; i <= 50; ++i) {
        s = add_node_delta(s, g, order[i], m, 2.0);
        m.insert(order[i]);
        ASSERT_EQ(s, community_stats(g, m, 2.0)) << "step " << i;
    }
}

TEST(CommunityStats, EmptyThrows) {
    Graph g = fixtures::cliques(1, 3);
    EXPECT_THROW(community_stats(g, std::span<const node>(), 0.0), DomainError);
}
