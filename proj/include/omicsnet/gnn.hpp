#ifndef OMICSNET_GNN_HPP
#define OMICSNET_GNN_HPP

#include "omicsnet/autodiff.hpp"
#include "omicsnet/graph.hpp"
#include "omicsnet/omics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace omicsnet {

enum class LayerKind { Gcn, Gat, Sage, Gin };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& text);

struct GnnLayerConfig {
    LayerKind kind = LayerKind::Gcn;
    std::size_t in_dim = 1;
    std::size_t out_dim = 1;
    /// GAT
    std::size_t num_heads = 1;
    double leaky_slope = 0.2;
    /// GIN
    double epsilon = 0.0;
    bool learn_epsilon = true;

    void validate() const;
};

/**
 * @brief Constant propagation operators derived once per graph.
 *
 * - gcn:   D~^-1/2 (A + I) D~^-1/2 with edge weights, D~ the degree of A + I.
 * - mean:  row-normalized unweighted adjacency (zero rows for isolated nodes).
 * - sum:   unweighted adjacency.
 * - attention: neighbourhood of each node plus itself, logit bias log(w) (0 for self).
 */
struct GraphOperators {
    std::size_t nodes = 0;
    ad::SparseMatrix gcn;
    ad::SparseMatrix mean;
    ad::SparseMatrix sum;
    ad::AttentionStructure attention;

    static GraphOperators build(const FeatureGraph& g);
};

/// A H W + b with A the normalized GCN operator.
ad::Tensor gcn_forward(const ad::Tensor& h, const GraphOperators& ops, const ad::Tensor& w, const ad::Tensor& b);

/// Heads concatenated; w is in x (heads*dh), a_src/a_dst are heads x dh.
ad::Tensor gat_forward(const ad::Tensor& h, const GraphOperators& ops, const ad::Tensor& w, const ad::Tensor& a_src,
                       const ad::Tensor& a_dst, double leaky_slope = 0.2);

/// W_self h_i + W_neigh mean_{j in N(i)} h_j + b.
ad::Tensor sage_forward(const ad::Tensor& h, const GraphOperators& ops, const ad::Tensor& w_self,
                        const ad::Tensor& w_neigh, const ad::Tensor& b);

/// (1 + eps) h_i + sum_{j in N(i)} h_j, the GIN aggregation before its MLP.
ad::Tensor gin_aggregate(const ad::Tensor& h, const GraphOperators& ops, const ad::Tensor& epsilon);

struct Mlp2 {
    ad::Tensor w1, b1, w2, b2;
};

/// MLP(gin_aggregate(...)) with MLP = Linear -> ReLU -> Linear.
ad::Tensor gin_forward(const ad::Tensor& h, const GraphOperators& ops, const ad::Tensor& epsilon, const Mlp2& mlp);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// One message-passing layer with its own parameters.
class GnnLayer {
public:
    GnnLayer(const GnnLayerConfig& cfg, std::mt19937_64& rng);

    ad::Tensor forward(const ad::Tensor& h, const GraphOperators& ops) const;
    const GnnLayerConfig& config() const { return cfg_; }
    /// Trainable tensors (a fixed GIN epsilon is excluded).
    std::vector<ad::Tensor> parameters() const;
    /// Every tensor in a fixed order, trainable or not (for snapshots).
    std::vector<ad::Tensor> tensors() const { return tensors_; }

private:
    GnnLayerConfig cfg_;
    std::vector<ad::Tensor> tensors_;
};

/// Stack of layers with ReLU between layers and none after the last.
class GnnEncoder {
public:
    GnnEncoder() = default;
    GnnEncoder(const std::vector<GnnLayerConfig>& layers, std::uint64_t seed);

    ad::Tensor forward(const ad::Tensor& h, const GraphOperators& ops) const;
    std::vector<ad::Tensor> parameters() const;
    const std::vector<GnnLayer>& layers() const { return layers_; }
    std::size_t out_dim() const { return layers_.back().config().out_dim; }

private:
    std::vector<GnnLayer> layers_;
};

/// Builds the layer stack in_dim -> hidden... -> embed_dim of one kind.
std::vector<GnnLayerConfig> make_stack(LayerKind kind, std::size_t in_dim, std::vector<std::size_t> hidden,
                                       std::size_t embed_dim, std::size_t heads = 1);

/**
 * Node attributes [column mean, column std, phenotype association, weighted
 * degree], each column z-scored across nodes (population moments; zero-spread
 * columns become 0). Nodes are looked up in `x` by name.
 */
Matrix node_feature_matrix(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y);

/// Raw per-node phenotype association, the regression target of the embedder.
std::vector<double> node_phenotype_targets(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y);

enum class EmbedObjective { PhenotypeRegression, AdjacencyReconstruction };

struct EmbedderConfig {
    std::vector<GnnLayerConfig> layers;
    EmbedObjective objective = EmbedObjective::AdjacencyReconstruction;
    double lr = 0.01;
    double momentum = 0.0;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

struct EmbeddingMatrix {
    std::vector<std::string> node_names;
    Matrix values;
    std::vector<double> loss_curve;
    std::uint64_t seed = 0;
    std::string config_summary;

    std::size_t dim() const { return values.cols(); }
};

/// Plain SGD with optional momentum over a fixed parameter list.
class SgdOptimizer {
public:
    SgdOptimizer(std::vector<ad::Tensor> params, double lr, double momentum = 0.0);
    void zero_grad();
    void step();

private:
    std::vector<ad::Tensor> params_;
    std::vector<Matrix> velocity_;
    double lr_;
    double momentum_;
};

/// Adam over a fixed parameter list.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<ad::Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void zero_grad();
    void step();

private:
    std::vector<ad::Tensor> params_;
    std::vector<Matrix> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

/**
 * Trains a GNN encoder and returns the last layer's node activations.
 * Regression fits a linear scalar head to `targets`; reconstruction uses an
 * inner-product decoder with BCE on all edges plus an equal number of
 * non-edges resampled every epoch.
 */
EmbeddingMatrix train_embedder(const FeatureGraph& g, const Matrix& node_attrs,
                               const std::optional<std::vector<double>>& targets, const EmbedderConfig& cfg);

void write_embedding_csv(std::ostream& out, const EmbeddingMatrix& e);
EmbeddingMatrix read_embedding_csv(std::istream& in);
void write_loss_curve_csv(std::ostream& out, const std::vector<double>& losses);

} // namespace omicsnet

#endif
