#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace lcd {

enum class PlantedModel { Sbm, Dcbm };

/// k equal-sized planted communities. For Sbm the lambdas are edge
/// probabilities; for Dcbm they are Poisson rate multipliers and node
/// propensities are drawn from Gamma(dcbm_alpha, dcbm_theta).
struct PlantedSpec {
    PlantedModel model = PlantedModel::Sbm;
    std::uint32_t communities = 1;
    std::uint32_t size = 1;
    double lambda_in = 0.0;
    double lambda_out = 0.0;
    double dcbm_alpha = 1.0;
    double dcbm_theta = 1.0;

    void validate() const {
        if (communities < 1 || size < 1)
            throw DomainError("planted spec needs at least one community of at least one node");
        if (static_cast<std::uint64_t>(communities) * size > std::uint64_t{1} << 31)
            throw DomainError("planted graph too large");
        if (!std::isfinite(lambda_in) || !std::isfinite(lambda_out) || lambda_in < 0.0 || lambda_out < 0.0)
            throw DomainError("planted edge parameters must be finite and non-negative");
        if (model == PlantedModel::Sbm && (lambda_in > 1.0 || lambda_out > 1.0))
            throw DomainError("SBM edge probabilities must lie in [0, 1]");
        if (model == PlantedModel::Dcbm && (!(dcbm_alpha > 0.0) || !(dcbm_theta > 0.0)))
            throw DomainError("DC-SBM propensity prior must be positive");
    }
};

struct PlantedGraph {
    Graph graph;
    std::vector<std::vector<node>> truth;
    std::vector<double> propensity; // DC-SBM only
};

namespace detail {

inline std::vector<std::vector<node>> planted_blocks(const PlantedSpec &spec) {
    std::vector<std::vector<node>> truth(spec.communities);
    for (std::uint32_t c = 0; c < spec.communities; ++c)
        for (std::uint32_t i = 0; i < spec.size; ++i)
            truth[c].push_back(c * spec.size + i);
    return truth;
}

} // namespace detail

/// Every unordered pair is an edge independently with probability
/// lambda_in (same block) or lambda_out. Node i lies in block i / size.
inline PlantedGraph sample_sbm(const PlantedSpec &spec, Rng &rng) {
    spec.validate();
    if (spec.model != PlantedModel::Sbm)
        throw DomainError("sample_sbm needs an SBM spec");
    const node n = spec.communities * spec.size;
    std::vector<std::pair<node, node>> edges;
    for (node i = 0; i < n; ++i)
        for (node j = i + 1; j < n; ++j) {
            const double p = (i / spec.size == j / spec.size) ? spec.lambda_in : spec.lambda_out;
            if (rng.bernoulli(p))
                edges.emplace_back(i, j);
        }
    return {Graph::from_edges(n, edges), detail::planted_blocks(spec), {}};
}

/**
 * Degree-corrected sample: d_i ~ Gamma(alpha, theta), pair multiplicity
 * ~ Poisson(d_i d_j lambda). Multiplicities are binarized, so a pair is an
 * edge with probability 1 - exp(-d_i d_j lambda).
 */
inline PlantedGraph sample_dcbm(const PlantedSpec &spec, Rng &rng) {
    spec.validate();
    if (spec.model != PlantedModel::Dcbm)
        throw DomainError("sample_dcbm needs a DC-SBM spec");
    const node n = spec.communities * spec.size;
    std::vector<double> d(n);
    for (auto &x : d)
        x = rng.gamma(spec.dcbm_alpha, spec.dcbm_theta);
    std::vector<std::pair<node, node>> edges;
    for (node i = 0; i < n; ++i)
        for (node j = i + 1; j < n; ++j) {
            const double lambda = (i / spec.size == j / spec.size) ? spec.lambda_in : spec.lambda_out;
            const double rate = d[i] * d[j] * lambda;
            if (rate > 1e6)
                throw DomainError("Poisson rate " + std::to_string(rate) + " exceeds 1e6; use a smaller theta");
            if (rate > 0.0 && rng.bernoulli(-std::expm1(-rate)))
                edges.emplace_back(i, j);
        }
    return {Graph::from_edges(n, edges), detail::planted_blocks(spec), std::move(d)};
}

inline PlantedGraph sample_planted(const PlantedSpec &spec, Rng &rng) {
    return spec.model == PlantedModel::Sbm ? sample_sbm(spec, rng) : sample_dcbm(spec, rng);
}

} // namespace lcd
