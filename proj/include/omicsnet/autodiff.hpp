#ifndef OMICSNET_AUTODIFF_HPP
#define OMICSNET_AUTODIFF_HPP

#include "omicsnet/matrix.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

/**
 * @file autodiff.hpp
 *
 * @brief Minimal reverse-mode automatic differentiation over dense 2-D tensors.
 *
 * A `Tensor` is a cheap handle to an immutable node of a computation graph.
 * Operations build new nodes; `backward` walks the graph from a scalar and
 * accumulates gradients into every node that requires them. Parameter
 * gradients accumulate across calls until `zero_grad`.
 */

namespace omicsnet::ad {

class Tensor;

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward;
};

} // namespace detail

class Tensor {
public:
    Tensor() = default;

    /// Leaf that never receives a gradient.
    static Tensor constant(Matrix value);
    /// Leaf that accumulates a gradient.
    static Tensor parameter(Matrix value);

    bool defined() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    /// Gradient of the last backward pass; zeros if none was accumulated.
    const Matrix& grad() const;
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    std::array<std::size_t, 2> shape() const { return {rows(), cols()}; }
    bool requires_grad() const { return node_->requires_grad; }

    /// In-place update of a parameter's value (optimizers only).
    Matrix& mutable_value() { return node_->value; }
    void zero_grad();

    /// Internal: node creation for operations.
    static Tensor from_op(Matrix value, std::vector<Tensor> parents,
                          std::function<void(detail::Node& out)> backward);
    detail::Node& node() const { return *node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

/// Reverse pass from a 1x1 tensor.
void backward(const Tensor& loss);

/// Constant sparse matrix in CSR form.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> indices;
    std::vector<double> values;

    Matrix to_dense() const;
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<std::tuple<std::size_t, std::size_t, double>> entries);
};

/// Attention neighbourhoods: for target i, sources offsets[i]..offsets[i+1]
/// (self included) with an additive logit bias per entry.
struct AttentionStructure {
    std::size_t nodes = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> sources;
    std::vector<double> bias;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// a (n x c) + bias (1 x c) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double factor);
/// s (1 x 1) * a.
Tensor scalar_mul(const Tensor& s, const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
/// `s` is held by reference and must outlive the backward pass.
Tensor spmm(const SparseMatrix& s, const Tensor& h);

/**
 * Multi-head graph attention aggregation.
 * wh: n x (heads*dh); a_src, a_dst: heads x dh. For target i and source j,
 * logit = LeakyReLU(a_src.wh_i + a_dst.wh_j + bias_ij), softmax over the
 * sources of i, output row i = sum_j alpha_ij wh_j per head. `nb` must
 * outlive the backward pass.
 */
Tensor gat_aggregate(const Tensor& wh, const Tensor& a_src, const Tensor& a_dst, const AttentionStructure& nb,
                     double slope);
/// Attention coefficients (heads x entries, aligned with nb.sources) for inspection.
Matrix gat_coefficients(const Matrix& wh, const Matrix& a_src, const Matrix& a_dst, const AttentionStructure& nb,
                        double slope);

Tensor row_mean(const Tensor& a);
Tensor row_max(const Tensor& a);
/// Column vector mapped to (a - min)/(max - min) + offset; a constant vector maps to 0.5 + offset.
Tensor minmax_shift(const Tensor& a, double offset);
/// out_ij = x_ij * w_j with w a column vector of length x.cols().
Tensor col_scale(const Tensor& x, const Tensor& w);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
/// Column vector of z_i . z_j for each pair.
Tensor pair_dot(const Tensor& z, std::span<const std::pair<std::size_t, std::size_t>> pairs);

Tensor sum(const Tensor& a);
/// sum(a .* weights) for a constant weight matrix.
Tensor weighted_sum(const Tensor& a, const Matrix& weights);
/// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);
Tensor mse(const Tensor& pred, const Matrix& target);
/// Mean softmax cross-entropy; labels index columns of logits.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

} // namespace omicsnet::ad

#endif
