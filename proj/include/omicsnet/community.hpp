#ifndef OMICSNET_COMMUNITY_HPP
#define OMICSNET_COMMUNITY_HPP

#include "omicsnet/errors.hpp"
#include "omicsnet/graph.hpp"
#include "omicsnet/omics.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace omicsnet {

struct Partition {
    /// node index -> community ID, IDs contiguous from 0 in order of first appearance.
    std::vector<std::size_t> assignment;
    double modularity = 0.0;
    std::string method;
    /// Modularity of the original graph after each Louvain level (first entry: singletons).
    std::vector<double> level_modularity;

    std::size_t num_communities() const;
};

/// Renumbers community labels to 0..C-1 by first appearance.
std::vector<std::size_t> canonical_labels(std::span<const std::size_t> labels);

/// Weighted Newman modularity; `resolution` scales the null-model term.
double modularity(const FeatureGraph& g, std::span<const std::size_t> assignment, double resolution = 1.0);

/// Two-phase Louvain (local moves then aggregation) with seed-shuffled visit order.
Partition louvain(const FeatureGraph& g, std::uint64_t seed, double resolution = 1.0);

struct PprOptions {
    double damping = 0.85;
    double tol = 1e-10;
    std::size_t max_iter = 1000;
};

struct PprVector {
    /// Dense seed distribution over nodes.
    std::vector<double> seed;
    double damping = 0.85;
    std::vector<double> scores;
    std::size_t iterations = 0;
    /// L1 change of the final iteration.
    double residual = 0.0;
};

/// Thrown when power iteration exceeds max_iter.
class PprConvergenceError : public NumericError {
public:
    PprConvergenceError(const std::string& what, double residual) : NumericError(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/**
 * Power iteration for p = (1-d) s + d W^T p, W the row-normalized weighted
 * adjacency. Mass at nodes without edges is returned to the seed distribution.
 */
PprVector personalized_pagerank(const FeatureGraph& g, std::span<const double> seed, const PprOptions& opts = {});

struct HybridResult {
    /// Retained node indices of the input graph, in descending PPR score.
    std::vector<std::size_t> retained;
    double retained_mass = 0.0;
    PprVector ppr;
    FeatureGraph subgraph;
    /// Partition of `subgraph`.
    Partition partition;
};

/// Node indices taken greedily by descending score (ties by name) until their
/// mass reaches `mass_fraction`; with mass_fraction >= 1 every positive-score node.
std::vector<std::size_t> mass_cut(const FeatureGraph& g, std::span<const double> scores, double mass_fraction);

/// Phenotype-seeded PPR followed by Louvain on the retained subgraph.
HybridResult hybrid_ppr_louvain(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y,
                                double mass_fraction, std::uint64_t seed, const PprOptions& opts = {},
                                double resolution = 1.0);

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

void write_partition_csv(std::ostream& out, const FeatureGraph& g, const Partition& p);
void write_ppr_csv(std::ostream& out, const FeatureGraph& g, std::span<const double> scores);

} // namespace omicsnet

#endif
