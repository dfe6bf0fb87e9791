#ifndef OMICSNET_NETBUILD_HPP
#define OMICSNET_NETBUILD_HPP

#include "omicsnet/graph.hpp"
#include "omicsnet/omics.hpp"

#include <cstddef>
#include <span>
#include <vector>

/**
 * @file netbuild.hpp
 *
 * @brief Feature-network builders over a subjects x features matrix.
 *
 * Nodes are the matrix columns in column order. Features whose measurements
 * make the association undefined (zero norm for cosine, zero variance for
 * correlation) stay in the graph as isolated nodes listed in
 * `GraphMeta::flagged_nodes`. Edges with weight <= 0 are never stored.
 */

namespace omicsnet {

enum class SimilarityMetric { Cosine, Euclidean };
enum class CorrelationMethod { Pearson, Spearman };

struct Prune {
    enum class Kind { None, Threshold, TopFraction };
    Kind kind = Kind::None;
    double value = 0.0;

    static Prune none() { return {}; }
    /// Keep edges with weight >= tau.
    static Prune threshold(double tau) { return {Kind::Threshold, tau}; }
    /// Keep the ceil(q * M) heaviest of the M candidate edges.
    static Prune top_fraction(double q) { return {Kind::TopFraction, q}; }
};

/// Pairwise similarity between feature columns: cosine, or 1/(1+d) for euclidean distance d.
Matrix similarity_matrix(const OmicsMatrix& x, SimilarityMetric metric, std::vector<std::size_t>* degenerate = nullptr);

/// Pairwise |r|; Spearman is Pearson on average ranks.
Matrix correlation_matrix(const OmicsMatrix& x, CorrelationMethod method, std::vector<std::size_t>* degenerate = nullptr);

FeatureGraph similarity_network(const OmicsMatrix& x, SimilarityMetric metric, Prune prune = Prune::none());

FeatureGraph correlation_network(const OmicsMatrix& x, CorrelationMethod method, Prune prune = Prune::none());

struct ScaleFreeFit {
    double beta = 0.0;
    /// -sign(slope) * R^2 of log10(p(k)) on log10(k).
    double signed_r2 = 0.0;
    double slope = 0.0;
    double mean_connectivity = 0.0;
    /// Binned points the regression was run on.
    std::vector<double> log_k;
    std::vector<double> log_p;
};

/// Fits the scale-free model to a connectivity vector using `n_bins`
/// log-spaced bins between the smallest and largest positive connectivity.
ScaleFreeFit scale_free_fit(std::span<const double> connectivity, std::size_t n_bins = 10);

struct SoftThresholdResult {
    FeatureGraph graph;
    double beta = 0.0;
    ScaleFreeFit fit;
    std::vector<ScaleFreeFit> report;
    /// True when no grid value reached the target and the best one was taken.
    bool below_target = false;
};

std::vector<double> default_beta_grid();

SoftThresholdResult soft_threshold_network(const OmicsMatrix& x, std::span<const double> beta_grid,
                                           double target_r2 = 0.8, std::size_t n_bins = 10);

enum class KnnSymmetrization { Union, Mutual };

/// Default neighbour count of the kNN network.
inline constexpr std::size_t kDefaultKnnK = 15;

/// Each feature's k most similar others, most similar first; ties by name.
std::vector<std::vector<std::size_t>> knn_lists(const OmicsMatrix& x, std::size_t k, SimilarityMetric metric);

FeatureGraph knn_graph(const OmicsMatrix& x, std::size_t k, SimilarityMetric metric = SimilarityMetric::Cosine,
                       KnnSymmetrization mode = KnnSymmetrization::Union);

/// Shared-nearest-neighbour graph: Jaccard overlap of cosine k-NN lists.
FeatureGraph snn_graph(const OmicsMatrix& x, std::size_t k);

} // namespace omicsnet

#endif
