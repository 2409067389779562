#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "special.hpp"

namespace lcd {

/**
 * Rule for the shape parameters of the Gamma factors of Q.
 *
 * Conjugate: shape = alpha + count, the exact coordinate-ascent update of the
 * variational bound. Mode: shape = alpha - 1 + count, the mode-matching form
 * (with uninformative priors it yields shape 0 for zero counts, which is
 * clamped to kShapeFloor). Only Conjugate guarantees that the bound never
 * decreases under vb_update.
 */
enum class ShapeRule { Conjugate, Mode };

inline constexpr double kShapeFloor = 1e-9;

/// Gamma(alpha, theta) prior on node propensities and both block rates.
struct DcbmPriors {
    double alpha = 1.0;
    double theta = 1.0;
    double gamma_exp = 2.0;
    ShapeRule shape_rule = ShapeRule::Conjugate;

    /// Shape of a factor whose count is c is shape_base() + c.
    double shape_base() const noexcept { return shape_rule == ShapeRule::Mode ? alpha - 1.0 : alpha; }
    GammaParams prior() const noexcept { return {alpha, theta}; }

    void validate() const {
        if (!(alpha > 0.0) || !(theta > 0.0) || !std::isfinite(alpha) || !std::isfinite(theta))
            throw DomainError("DC-SBM Gamma prior parameters must be positive");
        if (!(gamma_exp > 1.0) || !std::isfinite(gamma_exp))
            throw DomainError("power-law exponent must exceed 1");
    }
};

namespace detail {

inline double floored_shape(double x, bool *clamped = nullptr) noexcept {
    if (x < kShapeFloor) {
        if (clamped)
            *clamped = true;
        return kShapeFloor;
    }
    return x;
}

inline void require_valid(const GammaParams &p, const char *what, std::size_t index = SIZE_MAX) {
    if (!p.valid()) {
        std::ostringstream msg;
        msg << "variational update produced invalid " << what;
        if (index != SIZE_MAX)
            msg << " at node " << index;
        msg << ": shape=" << p.shape << " scale=" << p.scale;
        throw NumericalError(msg.str());
    }
}

} // namespace detail

/// Factorized Gamma surrogate Q over node propensities and block rates.
struct VariationalState {
    std::vector<double> shape_d;
    std::vector<double> scale_d;
    GammaParams lambda_in;
    GammaParams lambda_out;

    /// Every factor set to the prior.
    static VariationalState from_priors(std::size_t n, const DcbmPriors &priors) {
        VariationalState s;
        s.shape_d.assign(n, priors.alpha);
        s.scale_d.assign(n, priors.theta);
        s.lambda_in = priors.prior();
        s.lambda_out = priors.prior();
        return s;
    }

    GammaParams node(std::size_t i) const noexcept { return {shape_d[i], scale_d[i]}; }
};

namespace detail {

struct BlockSums {
    std::vector<double> sum;   // S_c = Σ_{i∈c} E[d_i]
    std::vector<double> sumsq; // Σ_{i∈c} E[d_i]^2
    double total = 0.0;

    /// Σ over within-community pairs i<j of E[d_i]E[d_j].
    double within_pairs() const noexcept {
        double t = 0.0;
        for (std::size_t c = 0; c < sum.size(); ++c)
            t += std::max(0.0, sum[c] * sum[c] - sumsq[c]) / 2.0;
        return t;
    }
    /// Σ over between-community pairs i<j of E[d_i]E[d_j].
    double between_pairs() const noexcept {
        double sq = 0.0;
        for (double s : sum)
            sq += s * s;
        return std::max(0.0, total * total - sq) / 2.0;
    }
};

inline BlockSums block_sums(const Partition &p, const VariationalState &s) {
    BlockSums b;
    b.sum.assign(p.community_count(), 0.0);
    b.sumsq.assign(p.community_count(), 0.0);
    for (std::size_t i = 0; i < p.node_count(); ++i) {
        const double e = s.shape_d[i] * s.scale_d[i];
        b.sum[p[static_cast<node>(i)]] += e;
        b.sumsq[p[static_cast<node>(i)]] += e * e;
        b.total += e;
    }
    return b;
}

inline std::uint64_t within_edges(const Graph &g, const Partition &p) {
    std::uint64_t w = 0;
    g.for_edges([&](node u, node v) { w += p[u] == p[v]; });
    return w;
}

} // namespace detail

/**
 * One coordinate-ascent sweep over Q in O(N + M).
 *
 * Node factors are updated one at a time (shape, then scale from the current
 * community aggregates), followed by both block-rate factors. With
 * ShapeRule::Conjugate each step maximizes the bound over its factor.
 */
inline void vb_update(const Graph &g, const Partition &p, VariationalState &s, const DcbmPriors &priors) {
    require_covers(g, p);
    const double base = priors.shape_base();
    const double inv_theta = 1.0 / priors.theta;
    const double mu_in = s.lambda_in.mean();
    const double mu_out = s.lambda_out.mean();

    detail::BlockSums b = detail::block_sums(p, s);
    for (node i = 0; i < g.node_count(); ++i) {
        const auto c = p[i];
        const double old_mean = s.shape_d[i] * s.scale_d[i];
        const double own = b.sum[c] - old_mean;
        const double rest = mu_in * own + mu_out * (b.total - b.sum[c]);
        s.shape_d[i] = detail::floored_shape(base + g.degree(i));
        s.scale_d[i] = 1.0 / (inv_theta + std::max(0.0, rest));
        detail::require_valid(s.node(i), "node factor", i);
        const double e = s.shape_d[i] * s.scale_d[i];
        b.sum[c] += e - old_mean;
        b.sumsq[c] += e * e - old_mean * old_mean;
        b.total += e - old_mean;
    }
    // Recompute aggregates exactly to avoid drift from the incremental updates.
    b = detail::block_sums(p, s);

    const auto w = static_cast<double>(detail::within_edges(g, p));
    const auto m = static_cast<double>(g.edge_count());
    s.lambda_in = {detail::floored_shape(base + w), 1.0 / (inv_theta + b.within_pairs())};
    s.lambda_out = {detail::floored_shape(base + (m - w)), 1.0 / (inv_theta + b.between_pairs())};
    detail::require_valid(s.lambda_in, "within-rate factor");
    detail::require_valid(s.lambda_out, "between-rate factor");
}

/// Components of the variational lower bound, exposed for diagnostics.
struct BoundTerms {
    double edges = 0.0;     // Σ_{i<j} a_ij E[log d_i d_j λ]
    double rates = 0.0;     // Σ_{i<j} E[d_i] E[d_j] E[λ]
    double kl_nodes = 0.0;  // Σ_i KL(Q_{d_i} || prior)
    double kl_in = 0.0;
    double kl_out = 0.0;

    double value() const noexcept { return edges - rates - kl_nodes - kl_in - kl_out; }
};

inline BoundTerms vb_bound_terms(const Graph &g, const Partition &p, const VariationalState &s,
                                 const DcbmPriors &priors) {
    require_covers(g, p);
    const GammaParams prior = priors.prior();
    BoundTerms t;
    for (node i = 0; i < g.node_count(); ++i) {
        const GammaParams q = s.node(i);
        t.edges += g.degree(i) * expected_log(q);
        t.kl_nodes += gamma_kl(q, prior);
    }
    const auto w = static_cast<double>(detail::within_edges(g, p));
    const auto m = static_cast<double>(g.edge_count());
    t.edges += w * expected_log(s.lambda_in) + (m - w) * expected_log(s.lambda_out);
    const detail::BlockSums b = detail::block_sums(p, s);
    t.rates = s.lambda_in.mean() * b.within_pairs() + s.lambda_out.mean() * b.between_pairs();
    t.kl_in = gamma_kl(s.lambda_in, prior);
    t.kl_out = gamma_kl(s.lambda_out, prior);
    return t;
}

/// Variational lower bound on log P(A | C).
inline double vb_bound(const Graph &g, const Partition &p, const VariationalState &s, const DcbmPriors &priors) {
    return vb_bound_terms(g, p, s, priors).value();
}

struct VbFit {
    VariationalState state;
    double bound = 0.0;
    int sweeps = 0;
    bool converged = false;
};

/// Runs vb_update until the bound changes by less than tol (relative).
inline VbFit vb_fit(const Graph &g, const Partition &p, const DcbmPriors &priors, VariationalState start,
                    double tol = 1e-8, int max_sweeps = 200) {
    VbFit fit{std::move(start), 0.0, 0, false};
    fit.bound = vb_bound(g, p, fit.state, priors);
    while (fit.sweeps < max_sweeps) {
        vb_update(g, p, fit.state, priors);
        ++fit.sweeps;
        const double next = vb_bound(g, p, fit.state, priors);
        const double change = std::abs(next - fit.bound);
        fit.bound = next;
        if (change <= tol * std::max(1.0, std::abs(next))) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

inline VbFit vb_fit(const Graph &g, const Partition &p, const DcbmPriors &priors, double tol = 1e-8,
                    int max_sweeps = 200) {
    return vb_fit(g, p, priors, VariationalState::from_priors(g.node_count(), priors), tol, max_sweeps);
}

// ---------------------------------------------------------------------------
// Local approximation

/**
 * Positive root of c x^2 + x / theta - 1 = 0 with
 * c = mean_in * v_hat + mean_out * (m_hat - v_hat), i.e. the fixed point of
 * x = (1/theta + x mean_in v_hat + x mean_out (m_hat - v_hat))^-1.
 */
inline double solve_theta_d(double v_hat, double m_hat, double mean_in, double mean_out, double theta) {
    if (!(theta > 0.0))
        throw DomainError("solve_theta_d: theta must be positive");
    const double c = mean_in * v_hat + mean_out * (m_hat - v_hat);
    const double b = 1.0 / theta;
    if (!(c > 0.0))
        return theta;
    // 2 / (b + sqrt(b^2 + 4c)) is the cancellation-free form of the root.
    return 2.0 / (b + std::sqrt(b * b + 4.0 * c));
}

struct LocalFitConfig {
    int max_iter = 50;
    double tol = 1e-10;
};

/// Converged parameters of the locally approximated DC-SBM.
struct LocalDcbmState {
    double v_hat = 0.0;
    double m_hat = 0.0;
    double k_hat_sq = 0.0;
    double theta_d = 0.0;
    double k = 0.0;
    GammaParams lambda_in;
    GammaParams lambda_out;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;
    bool clamped = false;
};

/**
 * Fits the local approximation for one community, assuming k = 2M/v copies
 * of it make up the graph. `stats.sumsq` must have been computed with
 * priors.shape_base().
 */
inline LocalDcbmState adcbm_local_fit(const CommunityStats &stats, GraphTotals totals, const DcbmPriors &priors,
                                      const LocalFitConfig &cfg = {}) {
    if (stats.n < 1)
        throw DomainError("community must contain at least one node");
    const double n = static_cast<double>(stats.n);
    const double w = static_cast<double>(stats.w);
    const double v = static_cast<double>(stats.v);
    const double N = totals.nodes;
    const double M = totals.edges;
    const double base = priors.shape_base();
    const double inv_theta = 1.0 / priors.theta;

    LocalDcbmState st;
    st.v_hat = v + n * base;
    st.m_hat = 2.0 * M + N * base;
    st.k_hat_sq = stats.sumsq;
    st.lambda_in = priors.prior();
    st.lambda_out = priors.prior();
    st.theta_d = priors.theta;
    if (!(v > 0.0)) {
        st.degenerate = true;
        return st;
    }
    st.k = 2.0 * M / v;
    const double in_pairs = st.k * (st.v_hat * st.v_hat - st.k_hat_sq) / 2.0;
    const double out_pairs = (st.m_hat * st.m_hat - st.k * st.v_hat * st.v_hat) / 2.0;
    if (st.k < 1.0 || out_pairs < 0.0 || st.v_hat > st.m_hat) {
        st.degenerate = true;
        return st;
    }

    const double in_shape = detail::floored_shape(base + st.k * w, &st.clamped);
    const double out_shape = detail::floored_shape(base + (M - st.k * w), &st.clamped);
    double mu_in = st.lambda_in.mean();
    double mu_out = st.lambda_out.mean();
    for (st.iterations = 1; st.iterations <= cfg.max_iter; ++st.iterations) {
        const double td = solve_theta_d(st.v_hat, st.m_hat, mu_in, mu_out, priors.theta);
        st.lambda_in = {in_shape, 1.0 / (inv_theta + std::max(0.0, in_pairs) * td * td)};
        st.lambda_out = {out_shape, 1.0 / (inv_theta + out_pairs * td * td)};
        const double next_in = st.lambda_in.mean();
        const double next_out = st.lambda_out.mean();
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
        const double change = std::max({rel(td, st.theta_d), rel(next_in, mu_in), rel(next_out, mu_out)});
        st.theta_d = td;
        mu_in = next_in;
        mu_out = next_out;
        if (change < cfg.tol) {
            st.converged = true;
            break;
        }
    }
    st.iterations = std::min(st.iterations, cfg.max_iter);
    return st;
}

/// Approximate variational bound evaluated at a local state, up to a
/// community-independent constant.
inline double adcbm_log_likelihood(const CommunityStats &stats, GraphTotals totals, const LocalDcbmState &st,
                                   const DcbmPriors &priors) {
    const double w = static_cast<double>(stats.w);
    const double N = totals.nodes;
    const double M = totals.edges;
    const double kw = st.k * w;
    const double td = st.theta_d;
    const double in_pairs = st.k * (st.v_hat * st.v_hat - st.k_hat_sq) / 2.0;
    const double out_pairs = (st.m_hat * st.m_hat - st.k * st.v_hat * st.v_hat) / 2.0;
    const GammaParams prior = priors.prior();
    return 2.0 * M * std::log(td) + kw * expected_log(st.lambda_in) + (M - kw) * expected_log(st.lambda_out) -
           in_pairs * td * td * st.lambda_in.mean() - out_pairs * td * td * st.lambda_out.mean() +
           N * priors.alpha * std::log(td) - st.m_hat * td / priors.theta - gamma_kl(st.lambda_in, prior) -
           gamma_kl(st.lambda_out, prior);
}

/// Approximate log posterior of the community (aDCBM).
inline double adcbm_log_score(const CommunityStats &stats, GraphTotals totals, const DcbmPriors &priors,
                              const LocalFitConfig &cfg = {}) {
    const LocalDcbmState st = adcbm_local_fit(stats, totals, priors, cfg);
    if (st.degenerate)
        return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(stats.n);
    const double score = adcbm_log_likelihood(stats, totals, st, priors) + st.k * std::log(priors.gamma_exp - 1.0) -
                         st.k * priors.gamma_exp * std::log(n);
    return std::isfinite(score) ? score : -std::numeric_limits<double>::infinity();
}

} // namespace lcd
