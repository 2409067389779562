#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dcbm.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "sbm.hpp"

namespace lcd {

/// Scores a candidate community from its statistics alone.
template <typename S>
concept CommunityScorer = requires(const S &s, const CommunityStats &stats) {
    { s(stats) } -> std::convertible_to<double>;
    { s.shape_base() } -> std::convertible_to<double>;
};

struct AsbmScorer {
    GraphTotals totals;
    SbmPriors priors;

    double shape_base() const noexcept { return 0.0; }
    double operator()(const CommunityStats &s) const {
        if (static_cast<double>(s.n) > totals.nodes || static_cast<double>(s.w) > totals.edges)
            return -std::numeric_limits<double>::infinity();
        return asbm_log_score(s, totals, priors);
    }
};

struct AdcbmScorer {
    GraphTotals totals;
    DcbmPriors priors;
    LocalFitConfig fit;

    double shape_base() const noexcept { return priors.shape_base(); }
    double operator()(const CommunityStats &s) const { return adcbm_log_score(s, totals, priors, fit); }
};

/// Records every node whose adjacency or membership is read during a search.
struct TouchLog {
    std::vector<node> touched;
    void touch(node u) { touched.push_back(u); }
};

struct DetectionResult {
    std::vector<node> members; // sorted, contains the seed
    double log_score = -std::numeric_limits<double>::infinity();
    CommunityStats stats;
    int restart_index = 0;
    int passes = 0;
    double elapsed = 0.0; // seconds
    bool isolated_seed = false;
    bool pass_limit_reached = false;
};

/**
 * Greedy expansion from {seed}.
 *
 * Each pass shuffles the current frontier (non-member neighbors of members)
 * and adds a node whenever doing so strictly increases the score. Stops when
 * a pass adds nothing or after max_passes. Work is proportional to the
 * volume of the community and its frontier; no step scans all N nodes.
 */
template <CommunityScorer Scorer>
DetectionResult greedy_expand(const Graph &g, node seed, const Scorer &score, Rng &rng, int max_passes = 100,
                              TouchLog *log = nullptr) {
    if (seed >= g.node_count())
        throw DomainError("seed index out of range");
    const auto start = std::chrono::steady_clock::now();
    const double base = score.shape_base();

    MemberSet members(g.node_count());
    MemberSet frontier(g.node_count());
    members.insert(seed);
    if (log)
        log->touch(seed);

    DetectionResult r;
    r.stats = community_stats(g, members, base);
    r.log_score = score(r.stats);
    r.isolated_seed = g.degree(seed) == 0;

    std::vector<node> order;
    while (!r.isolated_seed && r.passes < max_passes) {
        ++r.passes;
        frontier.clear();
        for (node u : members.members())
            for (node x : g.neighbors(u)) {
                if (log)
                    log->touch(x);
                if (!members.contains(x))
                    frontier.insert(x);
            }
        order.assign(frontier.members().begin(), frontier.members().end());
        std::sort(order.begin(), order.end());
        rng.shuffle(std::span<node>(order));

        bool added = false;
        for (node u : order) {
            if (log) {
                log->touch(u);
                for (node x : g.neighbors(u))
                    log->touch(x);
            }
            const CommunityStats next = add_node_delta(r.stats, g, u, members, base);
            const double s = score(next);
            if (s > r.log_score) {
                members.insert(u);
                r.stats = next;
                r.log_score = s;
                added = true;
            }
        }
        if (!added)
            break;
        if (r.passes == max_passes)
            r.pass_limit_reached = true;
    }
    r.members = members.sorted();
    r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Best of `restarts` greedy runs; restart i uses Rng::stream(rng_seed, i).
/// Ties go to the lowest restart index.
template <CommunityScorer Scorer>
DetectionResult best_of_restarts(const Graph &g, node seed, const Scorer &score, int restarts, std::uint64_t rng_seed,
                                 int max_passes = 100) {
    if (restarts < 1)
        throw DomainError("restarts must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    DetectionResult best;
    for (int i = 0; i < restarts; ++i) {
        Rng rng = Rng::stream(rng_seed, static_cast<std::uint64_t>(i));
        DetectionResult r = greedy_expand(g, seed, score, rng, max_passes);
        r.restart_index = i;
        if (i == 0 || r.log_score > best.log_score)
            best = std::move(r);
    }
    best.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return best;
}

enum class LocalMethod { Asbm, Adcbm };

struct SearchConfig {
    LocalMethod method = LocalMethod::Adcbm;
    int restarts = 10;
    std::uint64_t rng_seed = 0;
    std::optional<std::uint64_t> formal_n;
    int max_passes = 100;
    SbmPriors sbm;
    DcbmPriors dcbm{.shape_rule = ShapeRule::Mode};
    LocalFitConfig fit;

    void validate() const {
        if (restarts < 1)
            throw DomainError("restarts must be at least 1");
        if (formal_n && *formal_n < 1)
            throw DomainError("formal N must be at least 1");
        if (max_passes < 1)
            throw DomainError("max_passes must be at least 1");
        sbm.validate();
        dcbm.validate();
    }

    GraphTotals totals(const Graph &g) const { return formal_n ? formal_n_totals(g, *formal_n) : actual_totals(g); }
};

/// The community of `seed` under the configured approximate model.
inline DetectionResult detect(const Graph &g, node seed, const SearchConfig &cfg) {
    cfg.validate();
    const GraphTotals totals = cfg.totals(g);
    if (cfg.method == LocalMethod::Asbm)
        return best_of_restarts(g, seed, AsbmScorer{totals, cfg.sbm}, cfg.restarts, cfg.rng_seed, cfg.max_passes);
    return best_of_restarts(g, seed, AdcbmScorer{totals, cfg.dcbm, cfg.fit}, cfg.restarts, cfg.rng_seed,
                            cfg.max_passes);
}

} // namespace lcd
