#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include <lcd/eval.hpp>
#include <lcd/generators.hpp>
#include <lcd/louvain.hpp>

#include "fixtures.hpp"

using namespace lcd;

namespace {

GlobalConfig gsbm() { return GlobalConfig{}; }
GlobalConfig gdcbm() {
    GlobalConfig c;
    c.objective = GlobalObjective::Gdcbm;
    return c;
}

} // namespace

TEST(Louvain, TwoDisjointCliquesMatchExhaustiveArgmax) {
    Graph g = fixtures::cliques(2, 4);
    double best = -INFINITY;
    std::vector<std::uint32_t> arg;
    std::size_t count = 0;
    fixtures::for_each_partition(8, [&](const std::vector<std::uint32_t> &a) {
        ++count;
        const double v = objective_value(g, Partition::from_assignment(a), gsbm());
        if (v > best) {
            best = v;
            arg = a;
        }
    });
    EXPECT_EQ(count, 4140u);
    EXPECT_EQ(Partition::from_assignment(arg).communities(), fixtures::blocks(2, 4).communities());
    for (const auto &cfg : {gsbm(), gdcbm()}) {
        Rng rng(3);
        LouvainResult r = louvain(g, cfg, rng);
        EXPECT_EQ(r.partition.communities(), fixtures::blocks(2, 4).communities());
    }
    Rng rng(3);
    EXPECT_NEAR(louvain(g, gsbm(), rng).objective, best, 1e-9);
}

TEST(Louvain, SingleCliqueMatchesExhaustiveArgmax) {
    // A complete graph is explained equally well as all-between, and
    // singletons carry no size penalty, so the argmax is not one community.
    Graph g = fixtures::cliques(1, 7);
    for (const auto &cfg : {gsbm(), gdcbm()}) {
        double best = -INFINITY;
        fixtures::for_each_partition(7, [&](const std::vector<std::uint32_t> &a) {
            best = std::max(best, objective_value(g, Partition::from_assignment(a), cfg));
        });
        Rng rng(1);
        LouvainResult r = louvain(g, cfg, rng);
        EXPECT_NEAR(objective_value(g, r.partition, cfg), best, 1e-6 * std::abs(best));
        EXPECT_GT(best, objective_value(g, Partition::single(7), cfg));
    }
    EXPECT_NEAR(objective_value(g, Partition::singletons(7), gsbm()), -std::log(22.0), 1e-12);
    EXPECT_NEAR(objective_value(g, Partition::single(7), gsbm()), -std::log(22.0) - 2 * std::log(7.0), 1e-12);
}

TEST(Louvain, PlantedSbm) {
    PlantedSpec spec{PlantedModel::Sbm, 5, 20, 0.4, 0.01};
    double total = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        Rng gen(s);
        PlantedGraph pg = sample_planted(spec, gen);
        Rng rng(0);
        total += partition_f1(louvain(pg.graph, gsbm(), rng).partition.communities(), pg.truth);
    }
    EXPECT_GE(total / 5, 0.95);
}

TEST(Louvain, ObjectiveMatchesTrackedValue) {
    Graph g = fixtures::random_graph(40, 0.12, 6);
    Rng rng(2);
    LouvainResult r = louvain(g, gsbm(), rng);
    EXPECT_NEAR(r.objective, objective_value(g, r.partition, gsbm()), 1e-9 * std::abs(r.objective));
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        EXPECT_GE(r.trace[i], r.trace[i - 1] - 1e-9 * std::abs(r.trace[i]));
}

TEST(Louvain, GdcbmNeverBelowStart) {
    Graph g = fixtures::random_graph(40, 0.12, 7);
    Rng rng(2);
    LouvainResult r = louvain(g, gdcbm(), rng);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        EXPECT_GT(r.trace[i], r.trace[i - 1]);
    EXPECT_GE(r.objective, objective_value(g, Partition::singletons(40), gdcbm()) - 1e-6);
}

TEST(Louvain, Deterministic) {
    Graph g = fixtures::random_graph(60, 0.1, 8);
    for (const auto &cfg : {gsbm(), gdcbm()}) {
        Rng a(5), b(5);
        EXPECT_EQ(louvain(g, cfg, a).partition.communities(), louvain(g, cfg, b).partition.communities());
    }
}

TEST(ObjectiveValue, EmptyGraphAllInOne) {
    const node n = 6;
    Graph g = Graph::from_edges(n, {});
    const double pairs = n * (n - 1) / 2.0;
    const double expected = log_beta(1, pairs + 1) - 2 * std::log(static_cast<double>(n));
    EXPECT_NEAR(objective_value(g, Partition::single(n), gsbm()), expected, 1e-12);
    EXPECT_NEAR(expected, -std::log(pairs + 1) - 2 * std::log(6.0), 1e-12);
    Rng rng(0);
    LouvainResult a = louvain(g, gsbm(), rng);
    Rng rng2(0);
    EXPECT_EQ(a.partition.communities(), louvain(g, gsbm(), rng2).partition.communities());
}

TEST(SbmMoves, DeltaMatchesScratch) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Graph g = fixtures::random_graph(12, 0.3, seed);
        Rng r(seed);
        std::vector<std::uint32_t> comm(12);
        for (auto &c : comm)
            c = static_cast<std::uint32_t>(r.below(4));
        const auto lv = detail::LevelGraph::from(g);
        detail::SbmMoves moves(g, SbmPriors{}, 12);
        moves.init(lv, comm);
        EXPECT_NEAR(moves.value(), objective_value(g, Partition::from_assignment(comm), gsbm()), 1e-9);
        const auto u = static_cast<std::uint32_t>(r.below(12));
        const auto target = static_cast<std::uint32_t>(r.below(5));
        auto links = [&](std::uint32_t c) {
            std::uint64_t k = 0;
            for (node x : g.neighbors(u))
                k += x != u && comm[x] == c;
            return k;
        };
        moves.remove(lv, u, comm[u], links(comm[u]));
        const double predicted = moves.value_if_inserted(lv, u, target, links(target), 0.0);
        auto moved = comm;
        moved[u] = target;
        EXPECT_NEAR(predicted, objective_value(g, Partition::from_assignment(moved), gsbm()), 1e-9) << seed;
    }
}

TEST(DcbmMoves, ValueMatchesCollapsedBoundWithFrozenNodes) {
    // With node factors fixed and the block rates at their optimum, the
    // move value equals the refreshed bound up to a partition-free constant.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Graph g = fixtures::random_graph(14, 0.3, seed);
        Rng r(seed);
        std::vector<std::uint32_t> a(14), b(14);
        for (node i = 0; i < 14; ++i) {
            a[i] = static_cast<std::uint32_t>(r.below(3));
            b[i] = static_cast<std::uint32_t>(r.below(3));
        }
        DcbmPriors pr;
        VariationalState q = vb_fit(g, Partition::from_assignment(a), pr).state;
        auto with_optimal_rates = [&](const std::vector<std::uint32_t> &c) {
            VariationalState s = q;
            Partition p = Partition::from_assignment(c);
            detail::BlockSums bs = detail::block_sums(p, s);
            const auto w = static_cast<double>(detail::within_edges(g, p));
            s.lambda_in = {pr.alpha + w, 1.0 / (1.0 / pr.theta + bs.within_pairs())};
            s.lambda_out = {pr.alpha + (g.edge_count() - w), 1.0 / (1.0 / pr.theta + bs.between_pairs())};
            return vb_bound(g, p, s, pr) + log_partition_prior(p.sizes(), pr.gamma_exp);
        };
        const auto lv = detail::LevelGraph::from(g);
        std::vector<double> weight(14);
        for (node i = 0; i < 14; ++i)
            weight[i] = q.shape_d[i] * q.scale_d[i];
        detail::DcbmMoves ma(g, pr, 14), mb(g, pr, 14);
        ma.freeze(q);
        mb.freeze(q);
        ma.init(lv, a, weight);
        mb.init(lv, b, weight);
        EXPECT_NEAR(ma.value() - mb.value(), with_optimal_rates(a) - with_optimal_rates(b), 1e-8) << seed;
    }
}

TEST(ConnectedComponents, Basic) {
    fixtures::Edges e{{0, 1}, {2, 3}, {3, 4}};
    Graph g = Graph::from_edges(6, e);
    Partition p = connected_components(g);
    EXPECT_EQ(p.community_count(), 3u);
    EXPECT_EQ(p[0], p[1]);
    EXPECT_EQ(p[2], p[4]);
    EXPECT_NE(p[0], p[5]);
}
