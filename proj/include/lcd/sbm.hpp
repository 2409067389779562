#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "error.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "special.hpp"

namespace lcd {

/// Beta(alpha_plus, alpha_minus) prior on both edge probabilities and the
/// power-law exponent of the community-size prior.
struct SbmPriors {
    double alpha_plus = 1.0;
    double alpha_minus = 1.0;
    double gamma_exp = 2.0;

    void validate() const {
        if (!(alpha_plus > 0.0) || !(alpha_minus > 0.0) || !std::isfinite(alpha_plus) ||
            !std::isfinite(alpha_minus))
            throw DomainError("SBM Beta prior parameters must be positive");
        if (!(gamma_exp > 1.0) || !std::isfinite(gamma_exp))
            throw DomainError("power-law exponent must exceed 1");
    }
};

/// Within/between edge and non-edge counts. Exact counts are integral;
/// locally approximated counts are real-valued.
struct EdgeCounts {
    double ai_plus = 0.0;
    double ai_minus = 0.0;
    double ab_plus = 0.0;
    double ab_minus = 0.0;

    bool operator==(const EdgeCounts &) const = default;
};

/// Counts of a full partition in O(N + M).
inline EdgeCounts exact_edge_counts(const Graph &g, const Partition &p) {
    require_covers(g, p);
    std::uint64_t within = 0;
    g.for_edges([&](node u, node v) { within += p[u] == p[v]; });
    std::uint64_t within_pairs = 0;
    for (auto s : p.sizes())
        within_pairs += s * (s - 1) / 2;
    const std::uint64_t n = g.node_count();
    const std::uint64_t pairs = n * (n - 1) / 2;
    const std::uint64_t m = g.edge_count();
    EdgeCounts c;
    c.ai_plus = static_cast<double>(within);
    c.ai_minus = static_cast<double>(within_pairs - within);
    c.ab_plus = static_cast<double>(m - within);
    c.ab_minus = static_cast<double>(pairs - within_pairs - (m - within));
    return c;
}

/// log P(A | C) with both edge probabilities integrated out.
inline double sbm_log_likelihood(const EdgeCounts &c, const SbmPriors &priors) {
    const double a = priors.alpha_plus;
    const double b = priors.alpha_minus;
    return log_beta(a + c.ai_plus, b + c.ai_minus) + log_beta(a + c.ab_plus, b + c.ab_minus) - 2.0 * log_beta(a, b);
}

/// Unnormalized log prior of a partition: each community of size s
/// contributes log(gamma - 1) - gamma log s.
inline double log_partition_prior(std::span<const std::uint64_t> sizes, double gamma_exp) {
    if (!(gamma_exp > 1.0))
        throw DomainError("power-law exponent must exceed 1");
    const double lg = std::log(gamma_exp - 1.0);
    double total = 0.0;
    for (auto s : sizes) {
        if (s == 0)
            throw DomainError("community of size 0 in partition prior");
        total += lg - gamma_exp * std::log(static_cast<double>(s));
    }
    return total;
}

struct TildeCounts {
    EdgeCounts counts;
    double k = 0.0;
    bool degenerate = false;
};

/**
 * Counts of the whole graph extrapolated from one community, assuming the
 * graph consists of k = N/n communities that all look like it.
 */
inline TildeCounts asbm_tilde_counts(const CommunityStats &s, GraphTotals totals) {
    const double n = static_cast<double>(s.n);
    const double w = static_cast<double>(s.w);
    const double N = totals.nodes;
    const double M = totals.edges;
    if (s.n < 1)
        throw DomainError("community must contain at least one node");
    if (n > N)
        throw DomainError("community has more nodes than the graph");
    if (w > M)
        throw DomainError("community has more within edges than the graph");

    TildeCounts t;
    t.k = N / n;
    EdgeCounts &c = t.counts;
    c.ai_plus = t.k * w;
    c.ai_minus = t.k * n * (n - 1.0) / 2.0 - c.ai_plus;
    c.ab_plus = M - c.ai_plus;
    c.ab_minus = N * (N - 1.0) / 2.0 - c.ai_plus - c.ai_minus - c.ab_plus;
    for (double *x : {&c.ai_plus, &c.ai_minus, &c.ab_plus, &c.ab_minus}) {
        if (*x < 0.0) {
            *x = 0.0;
            t.degenerate = true;
        }
    }
    return t;
}

/// Approximate log posterior of the community (aSBM). Communities that the
/// uniformity assumption cannot accommodate score -inf.
inline double asbm_log_score(const CommunityStats &s, GraphTotals totals, const SbmPriors &priors) {
    const TildeCounts t = asbm_tilde_counts(s, totals);
    if (t.degenerate)
        return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(s.n);
    return t.k * std::log(priors.gamma_exp - 1.0) - t.k * priors.gamma_exp * std::log(n) +
           sbm_log_likelihood(t.counts, priors);
}

} // namespace lcd
