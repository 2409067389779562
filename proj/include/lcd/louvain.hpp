#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "dcbm.hpp"
#include "graph.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "sbm.hpp"

namespace lcd {

enum class GlobalObjective { Gsbm, Gdcbm };

struct GlobalConfig {
    GlobalObjective objective = GlobalObjective::Gsbm;
    SbmPriors sbm;
    DcbmPriors dcbm;
    int max_levels = 32;
    int max_sweeps = 100;
    double vb_tol = 1e-8;
    int vb_max_sweeps = 200;
};

/// log P(C) + log P(A | C) for gSBM, or log P(C) + the converged variational
/// bound (fitted from the prior) for gDCBM.
inline double objective_value(const Graph &g, const Partition &p, const GlobalConfig &cfg) {
    require_covers(g, p);
    if (cfg.objective == GlobalObjective::Gsbm)
        return sbm_log_likelihood(exact_edge_counts(g, p), cfg.sbm) + log_partition_prior(p.sizes(), cfg.sbm.gamma_exp);
    const VbFit fit = vb_fit(g, p, cfg.dcbm, cfg.vb_tol, cfg.vb_max_sweeps);
    return fit.bound + log_partition_prior(p.sizes(), cfg.dcbm.gamma_exp);
}

namespace detail {

inline double prior_term(std::uint64_t size, double gamma_exp) noexcept {
    return size == 0 ? 0.0 : std::log(gamma_exp - 1.0) - gamma_exp * std::log(static_cast<double>(size));
}

/// Aggregated graph of one Louvain level. Node u stands for `size[u]`
/// original nodes with `self[u]` edges among them.
struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint64_t>>> adj;
    std::vector<std::uint64_t> self;
    std::vector<std::uint64_t> size;

    std::size_t count() const noexcept { return adj.size(); }

    static LevelGraph from(const Graph &g) {
        LevelGraph lv;
        lv.adj.resize(g.node_count());
        lv.self.assign(g.node_count(), 0);
        lv.size.assign(g.node_count(), 1);
        for (node u = 0; u < g.node_count(); ++u)
            for (node v : g.neighbors(u))
                lv.adj[u].emplace_back(v, 1);
        return lv;
    }

    /// Collapses communities (dense ids 0..k-1 in `comm`) into nodes.
    LevelGraph aggregate(const std::vector<std::uint32_t> &comm, std::size_t k) const {
        LevelGraph out;
        out.adj.resize(k);
        out.self.assign(k, 0);
        out.size.assign(k, 0);
        std::vector<std::uint64_t> weight(k, 0);
        std::vector<std::uint32_t> seen;
        std::vector<std::uint64_t> cross_twice(k, 0);
        std::vector<std::vector<std::uint32_t>> members(k);
        for (std::uint32_t u = 0; u < count(); ++u)
            members[comm[u]].push_back(u);
        for (std::uint32_t c = 0; c < k; ++c) {
            std::uint64_t inner_twice = 0;
            for (std::uint32_t u : members[c]) {
                out.size[c] += size[u];
                out.self[c] += self[u];
                for (auto [v, m] : adj[u]) {
                    const auto d = comm[v];
                    if (d == c) {
                        inner_twice += m;
                    } else {
                        if (weight[d] == 0)
                            seen.push_back(d);
                        weight[d] += m;
                    }
                }
            }
            out.self[c] += inner_twice / 2;
            for (auto d : seen) {
                out.adj[c].emplace_back(d, weight[d]);
                weight[d] = 0;
            }
            seen.clear();
        }
        return out;
    }
};

/// Exact gSBM bookkeeping: within edges W and within pairs P as integers.
class SbmMoves {
public:
    SbmMoves(const Graph &g, const SbmPriors &priors, std::size_t communities)
        : priors_(priors), m_(g.edge_count()), n_(g.node_count()), sizes_(communities, 0) {}

    void init(const LevelGraph &lv, const std::vector<std::uint32_t> &comm) {
        std::fill(sizes_.begin(), sizes_.end(), 0);
        within_ = 0;
        prior_ = 0.0;
        for (std::uint32_t u = 0; u < lv.count(); ++u) {
            within_ += lv.self[u];
            for (auto [v, m] : lv.adj[u])
                if (u < v && comm[u] == comm[v])
                    within_ += m;
            sizes_[comm[u]] += lv.size[u];
        }
        pairs_ = 0;
        for (auto s : sizes_) {
            pairs_ += s * (s - (s > 0)) / 2;
            prior_ += prior_term(s, priors_.gamma_exp);
        }
    }

    void remove(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c) {
        const auto s = lv.size[u];
        within_ -= lv.self[u] + edges_to_c;
        pairs_ -= s * (s - 1) / 2 + s * (sizes_[c] - s);
        prior_ += prior_term(sizes_[c] - s, priors_.gamma_exp) - prior_term(sizes_[c], priors_.gamma_exp);
        sizes_[c] -= s;
    }

    void insert(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c) {
        const auto s = lv.size[u];
        within_ += lv.self[u] + edges_to_c;
        pairs_ += s * (s - 1) / 2 + s * sizes_[c];
        prior_ += prior_term(sizes_[c] + s, priors_.gamma_exp) - prior_term(sizes_[c], priors_.gamma_exp);
        sizes_[c] += s;
    }

    /// Objective if u (currently removed) were inserted into c.
    double value_if_inserted(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c,
                             double /*weight_to_c*/) const {
        const auto s = lv.size[u];
        const std::uint64_t w = within_ + lv.self[u] + edges_to_c;
        const std::uint64_t p = pairs_ + s * (s - 1) / 2 + s * sizes_[c];
        return likelihood(w, p) + prior_ + prior_term(sizes_[c] + s, priors_.gamma_exp) -
               prior_term(sizes_[c], priors_.gamma_exp);
    }

    double value() const { return likelihood(within_, pairs_) + prior_; }

    std::uint64_t within_edges() const noexcept { return within_; }
    std::uint64_t within_pairs() const noexcept { return pairs_; }

private:
    double likelihood(std::uint64_t w, std::uint64_t p) const {
        const std::uint64_t total_pairs = n_ * (n_ - 1) / 2;
        EdgeCounts c;
        c.ai_plus = static_cast<double>(w);
        c.ai_minus = static_cast<double>(p - w);
        c.ab_plus = static_cast<double>(m_ - w);
        c.ab_minus = static_cast<double>(total_pairs - p - (m_ - w));
        return sbm_log_likelihood(c, priors_);
    }

    SbmPriors priors_;
    std::uint64_t m_;
    std::uint64_t n_;
    std::vector<std::uint64_t> sizes_;
    std::uint64_t within_ = 0;
    std::uint64_t pairs_ = 0;
    double prior_ = 0.0;
};

/**
 * gDCBM moves with the node factors frozen. For fixed E[d_i] the block-rate
 * factors have a closed-form optimum, so each candidate is scored by
 *   F(W, R_in) + F(M - W, R_out) + log prior,   F(c, R) = lnΓ(α+c) - (α+c) ln(1/θ + R),
 * with R_in = (Σ_c S_c² - Σ_i E[d_i]²)/2, R_out = (S² - Σ_c S_c²)/2 and
 * S_c = Σ_{i∈c} E[d_i]. Only W and Σ_c S_c² change with a move.
 */
class DcbmMoves {
public:
    DcbmMoves(const Graph &g, const DcbmPriors &priors, std::size_t communities)
        : priors_(priors), m_(g.edge_count()), sizes_(communities, 0), sums_(communities, 0.0) {}

    void freeze(const VariationalState &s) {
        total_ = 0.0;
        squares_ = 0.0;
        for (std::size_t i = 0; i < s.shape_d.size(); ++i) {
            const double e = s.shape_d[i] * s.scale_d[i];
            total_ += e;
            squares_ += e * e;
        }
    }

    void init(const LevelGraph &lv, const std::vector<std::uint32_t> &comm, const std::vector<double> &weight) {
        std::fill(sizes_.begin(), sizes_.end(), 0);
        std::fill(sums_.begin(), sums_.end(), 0.0);
        within_ = 0;
        prior_ = 0.0;
        for (std::uint32_t u = 0; u < lv.count(); ++u) {
            sizes_[comm[u]] += lv.size[u];
            sums_[comm[u]] += weight[u];
            within_ += lv.self[u];
            for (auto [v, m] : lv.adj[u])
                if (u < v && comm[u] == comm[v])
                    within_ += m;
        }
        sq_sums_ = 0.0;
        for (std::size_t c = 0; c < sums_.size(); ++c) {
            sq_sums_ += sums_[c] * sums_[c];
            prior_ += prior_term(sizes_[c], priors_.gamma_exp);
        }
        weight_ = &weight;
    }

    void remove(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c) {
        const double e = (*weight_)[u];
        within_ -= lv.self[u] + edges_to_c;
        sq_sums_ += (sums_[c] - e) * (sums_[c] - e) - sums_[c] * sums_[c];
        prior_ += prior_term(sizes_[c] - lv.size[u], priors_.gamma_exp) - prior_term(sizes_[c], priors_.gamma_exp);
        sizes_[c] -= lv.size[u];
        sums_[c] -= e;
    }

    void insert(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c) {
        const double e = (*weight_)[u];
        within_ += lv.self[u] + edges_to_c;
        sq_sums_ += (sums_[c] + e) * (sums_[c] + e) - sums_[c] * sums_[c];
        prior_ += prior_term(sizes_[c] + lv.size[u], priors_.gamma_exp) - prior_term(sizes_[c], priors_.gamma_exp);
        sizes_[c] += lv.size[u];
        sums_[c] += e;
    }

    /// Objective (up to a constant) if u, currently removed, joined c.
    double value_if_inserted(const LevelGraph &lv, std::uint32_t u, std::uint32_t c, std::uint64_t edges_to_c,
                             double) const {
        const double e = (*weight_)[u];
        const std::uint64_t w = within_ + lv.self[u] + edges_to_c;
        const double sq = sq_sums_ + 2.0 * e * sums_[c] + e * e;
        return collapsed(w, sq) + prior_ + prior_term(sizes_[c] + lv.size[u], priors_.gamma_exp) -
               prior_term(sizes_[c], priors_.gamma_exp);
    }

    double value() const { return collapsed(within_, sq_sums_) + prior_; }

private:
    double rate_term(double count, double pairs) const {
        const double a = priors_.alpha + count;
        return log_gamma(a) - a * std::log(1.0 / priors_.theta + std::max(0.0, pairs));
    }

    double collapsed(std::uint64_t w, double sq) const {
        const double in_pairs = (sq - squares_) / 2.0;
        const double out_pairs = (total_ * total_ - sq) / 2.0;
        return rate_term(static_cast<double>(w), in_pairs) + rate_term(static_cast<double>(m_ - w), out_pairs);
    }

    DcbmPriors priors_;
    std::uint64_t m_;
    std::vector<std::uint64_t> sizes_;
    std::vector<double> sums_;
    const std::vector<double> *weight_ = nullptr;
    std::uint64_t within_ = 0;
    double sq_sums_ = 0.0;
    double total_ = 0.0;
    double squares_ = 0.0;
    double prior_ = 0.0;
};

/// One local-moving sweep over the level in random order. Returns the
/// number of nodes that changed community.
template <typename Moves>
std::size_t moving_sweep(const LevelGraph &lv, std::vector<std::uint32_t> &comm, std::vector<std::uint32_t> &empty,
                         std::vector<std::uint64_t> &csize, Moves &moves, Rng &rng) {
    std::vector<std::uint32_t> order(lv.count());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::uint32_t>(order));

    std::vector<std::uint64_t> links(comm.size(), 0);
    std::vector<std::uint32_t> touched;
    std::size_t moved = 0;
    for (std::uint32_t u : order) {
        const auto home = comm[u];
        for (auto [v, m] : lv.adj[u]) {
            const auto c = comm[v];
            if (links[c] == 0)
                touched.push_back(c);
            links[c] += m;
        }
        moves.remove(lv, u, home, links[home]);
        csize[home] -= 1;

        double best_value = moves.value_if_inserted(lv, u, home, links[home], 0.0);
        const double stay = best_value;
        auto best = home;
        for (auto c : touched) {
            if (c == home)
                continue;
            const double val = moves.value_if_inserted(lv, u, c, links[c], 0.0);
            if (val > best_value) {
                best_value = val;
                best = c;
            }
        }
        if (csize[home] > 0 && !empty.empty()) {
            const auto fresh = empty.back();
            const double val = moves.value_if_inserted(lv, u, fresh, 0, 0.0);
            if (val > best_value) {
                best_value = val;
                best = fresh;
            }
        }
        const double eps = 1e-10 * std::max(1.0, std::abs(stay));
        if (best != home && best_value > stay + eps) {
            if (!empty.empty() && best == empty.back())
                empty.pop_back();
            if (csize[home] == 0)
                empty.push_back(home);
            comm[u] = best;
            ++moved;
        } else {
            best = home;
        }
        moves.insert(lv, u, best, links[best]);
        csize[best] += 1;
        for (auto c : touched)
            links[c] = 0;
        touched.clear();
    }
    return moved;
}

/// Renumbers community ids densely; returns the number of communities.
inline std::size_t compact(std::vector<std::uint32_t> &comm) {
    std::vector<std::uint32_t> remap(comm.size(), std::numeric_limits<std::uint32_t>::max());
    std::uint32_t next = 0;
    for (auto &c : comm) {
        if (remap[c] == std::numeric_limits<std::uint32_t>::max())
            remap[c] = next++;
        c = remap[c];
    }
    return next;
}

} // namespace detail

struct LouvainResult {
    Partition partition;
    double objective = 0.0;         // value tracked by the optimizer
    std::vector<double> trace;      // objective after every accepted sweep
    int levels = 0;
};

/**
 * Two-phase Louvain optimization of the gSBM posterior or the gDCBM bound.
 *
 * gSBM moves are exact. gDCBM moves are evaluated with the node factors
 * frozen and the block-rate factors at their optimum; after every sweep Q is
 * refitted on the flattened partition (warm start) and a sweep that lowered
 * the refitted objective is rolled back.
 */
inline LouvainResult louvain_from(const Graph &g, const GlobalConfig &cfg, const Partition &start, Rng &rng) {
    cfg.sbm.validate();
    cfg.dcbm.validate();
    require_covers(g, start);
    const node n = g.node_count();
    std::vector<std::uint32_t> node_to_super(n);
    std::iota(node_to_super.begin(), node_to_super.end(), 0);
    detail::LevelGraph lv = detail::LevelGraph::from(g);

    auto flatten = [&](const std::vector<std::uint32_t> &comm) {
        std::vector<std::uint32_t> a(n);
        for (node i = 0; i < n; ++i)
            a[i] = comm[node_to_super[i]];
        return Partition::from_assignment(a);
    };

    LouvainResult result;
    const bool dc = cfg.objective == GlobalObjective::Gdcbm;
    VariationalState q;
    double current = 0.0;
    Partition flat = start;
    if (dc) {
        VbFit fit = vb_fit(g, flat, cfg.dcbm, cfg.vb_tol, cfg.vb_max_sweeps);
        q = std::move(fit.state);
        current = fit.bound + log_partition_prior(flat.sizes(), cfg.dcbm.gamma_exp);
    } else {
        current = objective_value(g, flat, cfg);
    }
    result.trace.push_back(current);

    for (int level = 0; level < cfg.max_levels && lv.count() > 0; ++level) {
        std::vector<std::uint32_t> comm(lv.count());
        std::iota(comm.begin(), comm.end(), 0);
        if (level == 0)
            std::copy(start.assignment().begin(), start.assignment().end(), comm.begin());
        std::vector<std::uint64_t> csize(lv.count(), 0);
        for (auto c : comm)
            ++csize[c];
        std::vector<std::uint32_t> empty;
        for (std::uint32_t c = static_cast<std::uint32_t>(lv.count()); c-- > 0;)
            if (csize[c] == 0)
                empty.push_back(c);
        std::size_t level_moves = 0;

        if (!dc) {
            detail::SbmMoves moves(g, cfg.sbm, lv.count());
            moves.init(lv, comm);
            for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
                const std::size_t moved = detail::moving_sweep(lv, comm, empty, csize, moves, rng);
                if (moved == 0)
                    break;
                level_moves += moved;
                current = moves.value();
                result.trace.push_back(current);
            }
        } else {
            std::vector<double> weight(lv.count(), 0.0);
            detail::DcbmMoves moves(g, cfg.dcbm, lv.count());
            auto refresh_weights = [&] {
                std::fill(weight.begin(), weight.end(), 0.0);
                for (node i = 0; i < n; ++i)
                    weight[node_to_super[i]] += q.shape_d[i] * q.scale_d[i];
            };
            refresh_weights();
            moves.freeze(q);
            moves.init(lv, comm, weight);
            for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
                const auto saved_comm = comm;
                const auto saved_size = csize;
                const auto saved_empty = empty;
                const std::size_t moved = detail::moving_sweep(lv, comm, empty, csize, moves, rng);
                if (moved == 0)
                    break;
                const Partition candidate = flatten(comm);
                VbFit fit = vb_fit(g, candidate, cfg.dcbm, q, cfg.vb_tol, cfg.vb_max_sweeps);
                const double value = fit.bound + log_partition_prior(candidate.sizes(), cfg.dcbm.gamma_exp);
                if (!(value > current)) {
                    comm = saved_comm;
                    csize = saved_size;
                    empty = saved_empty;
                    break;
                }
                level_moves += moved;
                current = value;
                result.trace.push_back(current);
                q = std::move(fit.state);
                refresh_weights();
                moves.freeze(q);
                moves.init(lv, comm, weight);
            }
        }

        const std::size_t k = detail::compact(comm);
        for (node i = 0; i < n; ++i)
            node_to_super[i] = comm[node_to_super[i]];
        ++result.levels;
        if (level_moves == 0)
            break;
        lv = lv.aggregate(comm, k);
    }

    std::vector<std::uint32_t> identity(lv.count());
    std::iota(identity.begin(), identity.end(), 0);
    result.partition = flatten(identity);
    result.objective = current;
    return result;
}

/// Connected components as a partition (component ids in order of lowest node).
inline Partition connected_components(const Graph &g) {
    constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> comp(g.node_count(), unset);
    std::vector<node> stack;
    std::uint32_t next = 0;
    for (node s = 0; s < g.node_count(); ++s) {
        if (comp[s] != unset)
            continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            const node u = stack.back();
            stack.pop_back();
            for (node v : g.neighbors(u))
                if (comp[v] == unset) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return Partition::from_assignment(comp);
}

/**
 * Louvain from two starts, singletons and connected components, keeping the
 * higher objective (singletons on ties). The size prior penalizes the first
 * merge of two singletons, which can trap the singleton start on small
 * graphs; the component start cannot be trapped that way.
 */
inline LouvainResult louvain(const Graph &g, const GlobalConfig &cfg, Rng &rng) {
    LouvainResult best = louvain_from(g, cfg, Partition::singletons(g.node_count()), rng);
    const Partition comps = connected_components(g);
    if (comps.community_count() == g.node_count())
        return best;
    LouvainResult alt = louvain_from(g, cfg, comps, rng);
    if (alt.objective > best.objective)
        return alt;
    return best;
}

} // namespace lcd
