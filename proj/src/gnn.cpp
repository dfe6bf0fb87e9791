#include "omicsnet/gnn.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/featselect.hpp"
#include "omicsnet/stats.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace omicsnet {

using ad::Tensor;

std::string to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Gcn: return "gcn";
    case LayerKind::Gat: return "gat";
    case LayerKind::Sage: return "sage";
    case LayerKind::Gin: return "gin";
    }
    return "gcn";
}

LayerKind parse_layer_kind(const std::string& text) {
    if (text == "gcn") return LayerKind::Gcn;
    if (text == "gat") return LayerKind::Gat;
    if (text == "sage") return LayerKind::Sage;
    if (text == "gin") return LayerKind::Gin;
    throw ConfigError("unknown GNN layer kind '" + text + "' (expected gcn, gat, sage or gin)");
}

void GnnLayerConfig::validate() const {
    if (in_dim == 0 || out_dim == 0) {
        throw ConfigError("GNN layer dimensions must be positive");
    }
    if (kind == LayerKind::Gat) {
        if (num_heads == 0) {
            throw ConfigError("GAT layer needs at least one head");
        }
        if (out_dim % num_heads != 0) {
            throw ConfigError("GAT out_dim " + std::to_string(out_dim) + " is not divisible by " +
                              std::to_string(num_heads) + " heads");
        }
    }
}

GraphOperators GraphOperators::build(const FeatureGraph& g) {
    GraphOperators ops;
    const std::size_t n = g.num_nodes();
    ops.nodes = n;
    std::vector<std::tuple<std::size_t, std::size_t, double>> gcn, mean, sum;
    std::vector<double> dtilde(n);
    for (std::size_t v = 0; v < n; ++v) {
        dtilde[v] = 1.0 + g.weighted_degree(v);
    }
    ops.attention.nodes = n;
    ops.attention.offsets.push_back(0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        gcn.emplace_back(v, v, 1.0 / dtilde[v]);
        bool self_done = false;
        for (const auto& nb : nbrs) {
            gcn.emplace_back(v, nb.node, nb.weight / std::sqrt(dtilde[v] * dtilde[nb.node]));
            mean.emplace_back(v, nb.node, 1.0 / static_cast<double>(nbrs.size()));
            sum.emplace_back(v, nb.node, 1.0);
            if (!self_done && nb.node > v) {
                ops.attention.sources.push_back(v);
                ops.attention.bias.push_back(0.0);
                self_done = true;
            }
            ops.attention.sources.push_back(nb.node);
            ops.attention.bias.push_back(std::log(nb.weight));
        }
        if (!self_done) {
            ops.attention.sources.push_back(v);
            ops.attention.bias.push_back(0.0);
        }
        ops.attention.offsets.push_back(ops.attention.sources.size());
    }
    ops.gcn = ad::SparseMatrix::from_triplets(n, n, std::move(gcn));
    ops.mean = ad::SparseMatrix::from_triplets(n, n, std::move(mean));
    ops.sum = ad::SparseMatrix::from_triplets(n, n, std::move(sum));
    return ops;
}

Tensor gcn_forward(const Tensor& h, const GraphOperators& ops, const Tensor& w, const Tensor& b) {
    return ad::add_row(ad::spmm(ops.gcn, ad::matmul(h, w)), b);
}

Tensor gat_forward(const Tensor& h, const GraphOperators& ops, const Tensor& w, const Tensor& a_src,
                   const Tensor& a_dst, double leaky_slope) {
    return ad::gat_aggregate(ad::matmul(h, w), a_src, a_dst, ops.attention, leaky_slope);
}

Tensor sage_forward(const Tensor& h, const GraphOperators& ops, const Tensor& w_self, const Tensor& w_neigh,
                    const Tensor& b) {
    return ad::add_row(ad::add(ad::matmul(h, w_self), ad::matmul(ad::spmm(ops.mean, h), w_neigh)), b);
}

Tensor gin_aggregate(const Tensor& h, const GraphOperators& ops, const Tensor& epsilon) {
    return ad::add(ad::add(h, ad::scalar_mul(epsilon, h)), ad::spmm(ops.sum, h));
}

Tensor gin_forward(const Tensor& h, const GraphOperators& ops, const Tensor& epsilon, const Mlp2& mlp) {
    const Tensor z = gin_aggregate(h, ops, epsilon);
    const Tensor hidden = ad::relu(ad::add_row(ad::matmul(z, mlp.w1), mlp.b1));
    return ad::add_row(ad::matmul(hidden, mlp.w2), mlp.b2);
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(fan_in, fan_out);
    for (auto& v : m.data()) {
        v = dist(rng);
    }
    return m;
}

GnnLayer::GnnLayer(const GnnLayerConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t in = cfg_.in_dim, out = cfg_.out_dim;
    auto param = [&](std::size_t r, std::size_t c) { return Tensor::parameter(glorot_uniform(r, c, rng)); };
    auto zeros = [](std::size_t r, std::size_t c) { return Tensor::parameter(Matrix(r, c)); };
    switch (cfg_.kind) {
    case LayerKind::Gcn:
        tensors_ = {param(in, out), zeros(1, out)};
        break;
    case LayerKind::Gat: {
        const std::size_t dh = out / cfg_.num_heads;
        tensors_ = {param(in, out), param(cfg_.num_heads, dh), param(cfg_.num_heads, dh)};
        break;
    }
    case LayerKind::Sage:
        tensors_ = {param(in, out), param(in, out), zeros(1, out)};
        break;
    case LayerKind::Gin: {
        Matrix eps(1, 1, cfg_.epsilon);
        tensors_ = {cfg_.learn_epsilon ? Tensor::parameter(eps) : Tensor::constant(eps), param(in, out),
                    zeros(1, out), param(out, out), zeros(1, out)};
        break;
    }
    }
}

Tensor GnnLayer::forward(const Tensor& h, const GraphOperators& ops) const {
    if (h.cols() != cfg_.in_dim) {
        throw std::invalid_argument(to_string(cfg_.kind) + " layer: input width " + std::to_string(h.cols()) +
                                    " != " + std::to_string(cfg_.in_dim));
    }
    if (h.rows() != ops.nodes) {
        throw std::invalid_argument(to_string(cfg_.kind) + " layer: input rows do not match the graph");
    }
    const auto& t = tensors_;
    switch (cfg_.kind) {
    case LayerKind::Gcn: return gcn_forward(h, ops, t[0], t[1]);
    case LayerKind::Gat: return gat_forward(h, ops, t[0], t[1], t[2], cfg_.leaky_slope);
    case LayerKind::Sage: return sage_forward(h, ops, t[0], t[1], t[2]);
    case LayerKind::Gin: return gin_forward(h, ops, t[0], Mlp2{t[1], t[2], t[3], t[4]});
    }
    return h;
}

std::vector<Tensor> GnnLayer::parameters() const {
    std::vector<Tensor> out;
    for (const auto& t : tensors_) {
        if (t.requires_grad()) {
            out.push_back(t);
        }
    }
    return out;
}

GnnEncoder::GnnEncoder(const std::vector<GnnLayerConfig>& layers, std::uint64_t seed) {
    if (layers.empty()) {
        throw ConfigError("GNN encoder needs at least one layer");
    }
    for (std::size_t l = 1; l < layers.size(); ++l) {
        if (layers[l].in_dim != layers[l - 1].out_dim) {
            throw ConfigError("GNN layer " + std::to_string(l) + " input width does not match the previous output");
        }
    }
    std::mt19937_64 rng(seed);
    for (const auto& cfg : layers) {
        layers_.emplace_back(cfg, rng);
    }
}

Tensor GnnEncoder::forward(const Tensor& h, const GraphOperators& ops) const {
    Tensor x = h;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        x = layers_[l].forward(x, ops);
        if (l + 1 < layers_.size()) {
            x = ad::relu(x);
        }
    }
    return x;
}

std::vector<Tensor> GnnEncoder::parameters() const {
    std::vector<Tensor> out;
    for (const auto& l : layers_) {
        for (auto& p : l.parameters()) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<GnnLayerConfig> make_stack(LayerKind kind, std::size_t in_dim, std::vector<std::size_t> hidden,
                                       std::size_t embed_dim, std::size_t heads) {
    std::vector<GnnLayerConfig> out;
    std::size_t prev = in_dim;
    hidden.push_back(embed_dim);
    for (std::size_t width : hidden) {
        GnnLayerConfig c;
        c.kind = kind;
        c.in_dim = prev;
        c.out_dim = width;
        c.num_heads = kind == LayerKind::Gat ? heads : 1;
        out.push_back(c);
        prev = width;
    }
    return out;
}

std::vector<double> node_phenotype_targets(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y) {
    std::vector<double> out(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const auto c = x.feature_index(g.node_names()[v]);
        if (!c) {
            throw DataError("node '" + g.node_names()[v] + "' is missing from the omics matrix");
        }
        out[v] = phenotype_association(x.values.col(*c), y);
    }
    return out;
}

Matrix node_feature_matrix(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y) {
    if (x.n_subjects() != y.size()) {
        throw DataError("node_feature_matrix: phenotype is not aligned with the matrix");
    }
    const std::size_t n = g.num_nodes();
    Matrix attrs(n, 4);
    for (std::size_t v = 0; v < n; ++v) {
        const auto c = x.feature_index(g.node_names()[v]);
        if (!c) {
            throw DataError("node '" + g.node_names()[v] + "' is missing from the omics matrix");
        }
        const auto col = x.values.col(*c);
        attrs(v, 0) = stats::mean(col);
        attrs(v, 1) = col.size() > 1 ? std::sqrt(stats::variance(col)) : 0.0;
        attrs(v, 2) = phenotype_association(col, y);
        attrs(v, 3) = g.weighted_degree(v);
    }
    for (std::size_t a = 0; a < 4; ++a) {
        const auto col = attrs.col(a);
        const double m = stats::mean(col);
        double ss = 0.0;
        for (double v : col) {
            ss += (v - m) * (v - m);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        for (std::size_t v = 0; v < n; ++v) {
            attrs(v, a) = sd > 1e-12 * std::max(1.0, std::abs(m)) ? (attrs(v, a) - m) / sd : 0.0;
        }
    }
    return attrs;
}

SgdOptimizer::SgdOptimizer(std::vector<Tensor> params, double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
    for (const auto& p : params_) {
        velocity_.emplace_back(p.rows(), p.cols());
    }
}

void SgdOptimizer::zero_grad() {
    for (auto& p : params_) {
        p.zero_grad();
    }
}

void SgdOptimizer::step() {
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto value = params_[k].mutable_value().data();
        const auto grad = params_[k].grad().data();
        auto vel = velocity_[k].data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            vel[i] = momentum_ * vel[i] + grad[i];
            value[i] -= lr_ * vel[i];
        }
    }
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.rows(), p.cols());
        v_.emplace_back(p.rows(), p.cols());
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) {
        p.zero_grad();
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto value = params_[k].mutable_value().data();
        const auto grad = params_[k].grad().data();
        auto m = m_[k].data();
        auto v = v_[k].data();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
            value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

namespace {

/// Up to `count` distinct non-adjacent pairs (i < j), sampled without replacement.
std::vector<std::pair<std::size_t, std::size_t>> sample_non_edges(const FeatureGraph& g, std::size_t count,
                                                                  std::mt19937_64& rng) {
    const std::size_t n = g.num_nodes();
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : g.edges()) {
        edges.insert({e.i, e.j});
    }
    const std::size_t all_pairs = n * (n - 1) / 2;
    const std::size_t available = all_pairs - edges.size();
    count = std::min(count, available);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (count == 0) {
        return out;
    }
    if (2 * count >= available) {
        std::vector<std::pair<std::size_t, std::size_t>> pool;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!edges.count({i, j})) {
                    pool.push_back({i, j});
                }
            }
        }
        for (std::size_t k = 0; k < count; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
        }
        pool.resize(count);
        return pool;
    }
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    std::uniform_int_distribution<std::size_t> node(0, n - 1);
    while (out.size() < count) {
        auto a = node(rng);
        auto b = node(rng);
        if (a == b) {
            continue;
        }
        const auto key = std::minmax(a, b);
        const std::pair<std::size_t, std::size_t> pair{key.first, key.second};
        if (edges.count(pair) || !chosen.insert(pair).second) {
            continue;
        }
        out.push_back(pair);
    }
    return out;
}

std::string describe(const EmbedderConfig& cfg) {
    std::ostringstream os;
    os << "objective=" << (cfg.objective == EmbedObjective::PhenotypeRegression ? "phenotype_regression"
                                                                                  : "adjacency_reconstruction")
       << ";lr=" << format_double(cfg.lr) << ";momentum=" << format_double(cfg.momentum) << ";epochs=" << cfg.epochs
       << ";seed=" << cfg.seed << ";layers=";
    for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& c = cfg.layers[l];
        os << (l ? "|" : "") << to_string(c.kind) << ":" << c.in_dim << "->" << c.out_dim;
        if (c.kind == LayerKind::Gat) {
            os << "/h" << c.num_heads;
        }
    }
    return os.str();
}

} // namespace

EmbeddingMatrix train_embedder(const FeatureGraph& g, const Matrix& node_attrs,
                               const std::optional<std::vector<double>>& targets, const EmbedderConfig& cfg) {
    if (cfg.epochs == 0) {
        throw ConfigError("train_embedder: epochs must be positive");
    }
    if (node_attrs.rows() != g.num_nodes()) {
        throw DataError("train_embedder: node attribute rows do not match the graph");
    }
    const bool regression = cfg.objective == EmbedObjective::PhenotypeRegression;
    if (regression && (!targets || targets->size() != g.num_nodes())) {
        throw DataError("train_embedder: phenotype regression needs one target per node");
    }
    if (!regression && g.num_edges() == 0) {
        throw DataError("train_embedder: adjacency reconstruction needs at least one edge");
    }

    const GraphOperators ops = GraphOperators::build(g);
    const GnnEncoder encoder(cfg.layers, cfg.seed);
    std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
    std::vector<Tensor> params = encoder.parameters();
    Tensor head_w, head_b;
    if (regression) {
        head_w = Tensor::parameter(glorot_uniform(encoder.out_dim(), 1, rng));
        head_b = Tensor::parameter(Matrix(1, 1));
        params.push_back(head_w);
        params.push_back(head_b);
    }
    SgdOptimizer opt(params, cfg.lr, cfg.momentum);
    const Tensor input = Tensor::constant(node_attrs);
    Matrix target_col;
    if (regression) {
        target_col = Matrix(g.num_nodes(), 1, *targets);
    }
    std::vector<std::pair<std::size_t, std::size_t>> positives;
    for (const auto& e : g.edges()) {
        positives.push_back({e.i, e.j});
    }

    EmbeddingMatrix out;
    out.node_names = g.node_names();
    out.seed = cfg.seed;
    out.config_summary = describe(cfg);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Tensor z = encoder.forward(input, ops);
        Tensor loss;
        if (regression) {
            loss = ad::mse(ad::add_row(ad::matmul(z, head_w), head_b), target_col);
        } else {
            auto pairs = positives;
            const auto negatives = sample_non_edges(g, positives.size(), rng);
            pairs.insert(pairs.end(), negatives.begin(), negatives.end());
            std::vector<double> labels(positives.size(), 1.0);
            labels.resize(pairs.size(), 0.0);
            loss = ad::bce_with_logits(ad::pair_dot(z, pairs), labels);
        }
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) {
            throw NumericError("train_embedder: non-finite loss at epoch " + std::to_string(epoch) + " (" +
                               out.config_summary + ")");
        }
        out.loss_curve.push_back(value);
        opt.zero_grad();
        ad::backward(loss);
        opt.step();
    }
    out.values = encoder.forward(input, ops).value();
    for (double v : out.values.data()) {
        if (!std::isfinite(v)) {
            throw NumericError("train_embedder: embedding contains non-finite values");
        }
    }
    return out;
}

void write_embedding_csv(std::ostream& out, const EmbeddingMatrix& e) {
    out << "node";
    for (std::size_t d = 0; d < e.dim(); ++d) {
        out << ",e" << (d + 1);
    }
    out << '\n';
    for (std::size_t v = 0; v < e.node_names.size(); ++v) {
        out << e.node_names[v];
        for (std::size_t d = 0; d < e.dim(); ++d) {
            out << ',' << format_double(e.values(v, d));
        }
        out << '\n';
    }
}

EmbeddingMatrix read_embedding_csv(std::istream& in) {
    const auto lines = read_lines(in);
    if (lines.empty()) {
        throw DataError("embedding CSV is empty");
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2) {
        throw DataError("embedding CSV needs a node column and at least one dimension");
    }
    EmbeddingMatrix e;
    std::vector<double> data;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_csv_line(lines[r]);
        if (f.size() != header.size()) {
            throw DataError("embedding CSV: ragged row " + std::to_string(r + 1));
        }
        e.node_names.push_back(trim(f[0]));
        for (std::size_t c = 1; c < f.size(); ++c) {
            const auto v = parse_double(f[c]);
            if (!v) {
                throw DataError("embedding CSV: bad value at row " + std::to_string(r + 1));
            }
            data.push_back(*v);
        }
    }
    e.values = Matrix(e.node_names.size(), header.size() - 1, std::move(data));
    return e;
}

void write_loss_curve_csv(std::ostream& out, const std::vector<double>& losses) {
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e) {
        out << e << ',' << format_double(losses[e]) << '\n';
    }
}

} // namespace omicsnet
