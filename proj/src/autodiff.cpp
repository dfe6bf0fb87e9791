#include "omicsnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>

namespace omicsnet::ad {

using detail::Node;

namespace {

void require(bool ok, const char* op, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(std::string(op) + ": " + what);
    }
}

std::string shape_text(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

/// Gradient buffer of a parent, or nullptr when it does not need one.
Matrix* grad_of(const Node& out, std::size_t k) {
    Node& p = *out.parents[k];
    return p.requires_grad ? &p.grad : nullptr;
}

const Matrix& value_of(const Node& out, std::size_t k) { return out.parents[k]->value; }

} // namespace

Tensor Tensor::constant(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->grad = Matrix(n->value.rows(), n->value.cols());
    return Tensor(std::move(n));
}

const Matrix& Tensor::grad() const {
    if (node_->grad.rows() != node_->value.rows() || node_->grad.cols() != node_->value.cols()) {
        node_->grad = Matrix(node_->value.rows(), node_->value.cols());
    }
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad = Matrix(node_->value.rows(), node_->value.cols()); }

Tensor Tensor::from_op(Matrix value, std::vector<Tensor> parents, std::function<void(Node& out)> backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->is_leaf = false;
    for (const auto& p : parents) {
        n->requires_grad = n->requires_grad || p.requires_grad();
        n->parents.push_back(p.node_);
    }
    if (n->requires_grad) {
        Node* raw = n.get();
        n->backward = [raw, fn = std::move(backward)] { fn(*raw); };
    } else {
        n->parents.clear();
    }
    return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
    require(loss.rows() == 1 && loss.cols() == 1, "backward", "loss must be 1x1");
    if (!loss.requires_grad()) {
        return;
    }
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    // iterative post-order DFS
    std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
    visited.insert(&loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.emplace_back(p, 0);
            }
            continue;
        }
        order.push_back(node);
        stack.pop_back();
    }
    for (Node* n : order) {
        const bool sized = n->grad.rows() == n->value.rows() && n->grad.cols() == n->value.cols();
        if (!n->is_leaf || !sized) {
            n->grad = Matrix(n->value.rows(), n->value.cols());
        }
    }
    loss.node().grad(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) {
            (*it)->backward();
        }
    }
}

Matrix SparseMatrix::to_dense() const {
    Matrix d(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            d(r, indices[k]) += values[k];
        }
    }
    return d;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<std::tuple<std::size_t, std::size_t, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b) : std::get<1>(a) < std::get<1>(b);
    });
    SparseMatrix s;
    s.rows = rows;
    s.cols = cols;
    s.offsets.assign(rows + 1, 0);
    for (const auto& [r, c, v] : entries) {
        require(r < rows && c < cols, "SparseMatrix", "entry out of range");
        ++s.offsets[r + 1];
        s.indices.push_back(c);
        s.values.push_back(v);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        s.offsets[r + 1] += s.offsets[r];
    }
    return s;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul", shape_text(a) + " times " + shape_text(b));
    return Tensor::from_op(omicsnet::matmul(a.value(), b.value()), {a, b}, [](Node& out) {
        const Matrix& av = value_of(out, 0);
        const Matrix& bv = value_of(out, 1);
        const Matrix& g = out.grad;
        if (Matrix* ga = grad_of(out, 0)) {
            // ga += g * b^T
            for (std::size_t i = 0; i < av.rows(); ++i) {
                for (std::size_t k = 0; k < av.cols(); ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < bv.cols(); ++j) {
                        s += g(i, j) * bv(k, j);
                    }
                    (*ga)(i, k) += s;
                }
            }
        }
        if (Matrix* gb = grad_of(out, 1)) {
            // gb += a^T * g
            for (std::size_t i = 0; i < av.rows(); ++i) {
                for (std::size_t k = 0; k < av.cols(); ++k) {
                    const double aik = av(i, k);
                    for (std::size_t j = 0; j < bv.cols(); ++j) {
                        (*gb)(k, j) += aik * g(i, j);
                    }
                }
            }
        }
    });
}

namespace {

Tensor linear_combination(const Tensor& a, const Tensor& b, double sign, const char* name) {
    require(a.shape() == b.shape(), name, shape_text(a) + " vs " + shape_text(b));
    Matrix v = a.value();
    for (std::size_t k = 0; k < v.size(); ++k) {
        v.data()[k] += sign * b.value().data()[k];
    }
    return Tensor::from_op(std::move(v), {a, b}, [sign](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (std::size_t k = 0; k < ga->size(); ++k) {
                ga->data()[k] += out.grad.data()[k];
            }
        }
        if (Matrix* gb = grad_of(out, 1)) {
            for (std::size_t k = 0; k < gb->size(); ++k) {
                gb->data()[k] += sign * out.grad.data()[k];
            }
        }
    });
}

template <typename F, typename D>
Tensor elementwise(const Tensor& a, F f, D df) {
    Matrix v = a.value();
    for (auto& x : v.data()) {
        x = f(x);
    }
    return Tensor::from_op(std::move(v), {a}, [df](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            const Matrix& av = value_of(out, 0);
            for (std::size_t k = 0; k < ga->size(); ++k) {
                ga->data()[k] += out.grad.data()[k] * df(av.data()[k]);
            }
        }
    });
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return linear_combination(a, b, 1.0, "add"); }

Tensor sub(const Tensor& a, const Tensor& b) { return linear_combination(a, b, -1.0, "sub"); }

Tensor add_row(const Tensor& a, const Tensor& bias) {
    require(bias.rows() == 1 && bias.cols() == a.cols(), "add_row", shape_text(a) + " + " + shape_text(bias));
    Matrix v = a.value();
    for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) {
            v(i, j) += bias.value()(0, j);
        }
    }
    return Tensor::from_op(std::move(v), {a, bias}, [](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (std::size_t k = 0; k < ga->size(); ++k) {
                ga->data()[k] += out.grad.data()[k];
            }
        }
        if (Matrix* gb = grad_of(out, 1)) {
            for (std::size_t i = 0; i < out.grad.rows(); ++i) {
                for (std::size_t j = 0; j < out.grad.cols(); ++j) {
                    (*gb)(0, j) += out.grad(i, j);
                }
            }
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return elementwise(a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Tensor scalar_mul(const Tensor& s, const Tensor& a) {
    require(s.rows() == 1 && s.cols() == 1, "scalar_mul", "scalar must be 1x1");
    const double c = s.value()(0, 0);
    Matrix v = a.value();
    for (auto& x : v.data()) {
        x *= c;
    }
    return Tensor::from_op(std::move(v), {s, a}, [](Node& out) {
        const double c = value_of(out, 0)(0, 0);
        const Matrix& av = value_of(out, 1);
        if (Matrix* gs = grad_of(out, 0)) {
            double acc = 0.0;
            for (std::size_t k = 0; k < av.size(); ++k) {
                acc += out.grad.data()[k] * av.data()[k];
            }
            (*gs)(0, 0) += acc;
        }
        if (Matrix* ga = grad_of(out, 1)) {
            for (std::size_t k = 0; k < ga->size(); ++k) {
                ga->data()[k] += c * out.grad.data()[k];
            }
        }
    });
}

Tensor relu(const Tensor& a) {
    return elementwise(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return elementwise(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; }, [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Tensor spmm(const SparseMatrix& s, const Tensor& h) {
    require(s.cols == h.rows(), "spmm", "sparse " + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                                            " times " + shape_text(h));
    const Matrix& hv = h.value();
    Matrix v(s.rows, hv.cols());
    for (std::size_t r = 0; r < s.rows; ++r) {
        for (std::size_t k = s.offsets[r]; k < s.offsets[r + 1]; ++k) {
            const double w = s.values[k];
            auto src = hv.row(s.indices[k]);
            auto dst = v.row(r);
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j] += w * src[j];
            }
        }
    }
    return Tensor::from_op(std::move(v), {h}, [&s](Node& out) {
        if (Matrix* gh = grad_of(out, 0)) {
            for (std::size_t r = 0; r < s.rows; ++r) {
                for (std::size_t k = s.offsets[r]; k < s.offsets[r + 1]; ++k) {
                    auto g = out.grad.row(r);
                    auto dst = gh->row(s.indices[k]);
                    for (std::size_t j = 0; j < g.size(); ++j) {
                        dst[j] += s.values[k] * g[j];
                    }
                }
            }
        }
    });
}

namespace {

struct AttentionPass {
    Matrix logits_pre; // heads x entries, before LeakyReLU
    Matrix alpha;      // heads x entries
};

AttentionPass attention_forward(const Matrix& wh, const Matrix& a_src, const Matrix& a_dst,
                                const AttentionStructure& nb, double slope) {
    const std::size_t heads = a_src.rows();
    const std::size_t dh = a_src.cols();
    const std::size_t entries = nb.sources.size();
    std::vector<double> s(nb.nodes * heads, 0.0), t(nb.nodes * heads, 0.0);
    for (std::size_t i = 0; i < nb.nodes; ++i) {
        for (std::size_t h = 0; h < heads; ++h) {
            double si = 0.0, ti = 0.0;
            for (std::size_t k = 0; k < dh; ++k) {
                si += wh(i, h * dh + k) * a_src(h, k);
                ti += wh(i, h * dh + k) * a_dst(h, k);
            }
            s[i * heads + h] = si;
            t[i * heads + h] = ti;
        }
    }
    AttentionPass pass{Matrix(heads, entries), Matrix(heads, entries)};
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < nb.nodes; ++i) {
            const std::size_t lo = nb.offsets[i], hi = nb.offsets[i + 1];
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t e = lo; e < hi; ++e) {
                const double z = s[i * heads + h] + t[nb.sources[e] * heads + h] + nb.bias[e];
                pass.logits_pre(h, e) = z;
                const double l = z > 0.0 ? z : slope * z;
                pass.alpha(h, e) = l;
                mx = std::max(mx, l);
            }
            double denom = 0.0;
            for (std::size_t e = lo; e < hi; ++e) {
                pass.alpha(h, e) = std::exp(pass.alpha(h, e) - mx);
                denom += pass.alpha(h, e);
            }
            for (std::size_t e = lo; e < hi; ++e) {
                pass.alpha(h, e) /= denom;
            }
        }
    }
    return pass;
}

} // namespace

Matrix gat_coefficients(const Matrix& wh, const Matrix& a_src, const Matrix& a_dst, const AttentionStructure& nb,
                        double slope) {
    return attention_forward(wh, a_src, a_dst, nb, slope).alpha;
}

Tensor gat_aggregate(const Tensor& wh, const Tensor& a_src, const Tensor& a_dst, const AttentionStructure& nb,
                     double slope) {
    require(a_src.shape() == a_dst.shape(), "gat_aggregate", "attention vectors differ in shape");
    require(wh.rows() == nb.nodes, "gat_aggregate", "node count mismatch");
    require(wh.cols() == a_src.rows() * a_src.cols(), "gat_aggregate",
            "projected width " + std::to_string(wh.cols()) + " != heads*dim");
    const std::size_t heads = a_src.rows();
    const std::size_t dh = a_src.cols();
    auto pass = std::make_shared<AttentionPass>(attention_forward(wh.value(), a_src.value(), a_dst.value(), nb, slope));
    const Matrix& whv = wh.value();
    Matrix v(nb.nodes, whv.cols());
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < nb.nodes; ++i) {
            for (std::size_t e = nb.offsets[i]; e < nb.offsets[i + 1]; ++e) {
                const double a = pass->alpha(h, e);
                const std::size_t j = nb.sources[e];
                for (std::size_t k = 0; k < dh; ++k) {
                    v(i, h * dh + k) += a * whv(j, h * dh + k);
                }
            }
        }
    }
    return Tensor::from_op(std::move(v), {wh, a_src, a_dst}, [pass, &nb, slope, heads, dh](Node& out) {
        const Matrix& whv = value_of(out, 0);
        const Matrix& asv = value_of(out, 1);
        const Matrix& adv = value_of(out, 2);
        Matrix* g_wh = grad_of(out, 0);
        Matrix* g_as = grad_of(out, 1);
        Matrix* g_ad = grad_of(out, 2);
        const Matrix& g = out.grad;
        const std::size_t entries = nb.sources.size();
        std::vector<double> d_alpha(entries);
        std::vector<double> ds(nb.nodes), dt(nb.nodes);
        for (std::size_t h = 0; h < heads; ++h) {
            std::fill(ds.begin(), ds.end(), 0.0);
            std::fill(dt.begin(), dt.end(), 0.0);
            for (std::size_t i = 0; i < nb.nodes; ++i) {
                const std::size_t lo = nb.offsets[i], hi = nb.offsets[i + 1];
                double weighted = 0.0;
                for (std::size_t e = lo; e < hi; ++e) {
                    const std::size_t j = nb.sources[e];
                    double da = 0.0;
                    for (std::size_t k = 0; k < dh; ++k) {
                        da += g(i, h * dh + k) * whv(j, h * dh + k);
                        if (g_wh) {
                            (*g_wh)(j, h * dh + k) += pass->alpha(h, e) * g(i, h * dh + k);
                        }
                    }
                    d_alpha[e] = da;
                    weighted += pass->alpha(h, e) * da;
                }
                for (std::size_t e = lo; e < hi; ++e) {
                    const double de = pass->alpha(h, e) * (d_alpha[e] - weighted);
                    const double dz = de * (pass->logits_pre(h, e) > 0.0 ? 1.0 : slope);
                    ds[i] += dz;
                    dt[nb.sources[e]] += dz;
                }
            }
            for (std::size_t i = 0; i < nb.nodes; ++i) {
                for (std::size_t k = 0; k < dh; ++k) {
                    const double w = whv(i, h * dh + k);
                    if (g_as) {
                        (*g_as)(h, k) += ds[i] * w;
                    }
                    if (g_ad) {
                        (*g_ad)(h, k) += dt[i] * w;
                    }
                    if (g_wh) {
                        (*g_wh)(i, h * dh + k) += ds[i] * asv(h, k) + dt[i] * adv(h, k);
                    }
                }
            }
        }
    });
}

Tensor row_mean(const Tensor& a) {
    const Matrix& av = a.value();
    require(av.cols() > 0, "row_mean", "no columns");
    Matrix v(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (double x : av.row(i)) {
            s += x;
        }
        v(i, 0) = s / static_cast<double>(av.cols());
    }
    return Tensor::from_op(std::move(v), {a}, [](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            const double inv = 1.0 / static_cast<double>(ga->cols());
            for (std::size_t i = 0; i < ga->rows(); ++i) {
                for (auto& x : ga->row(i)) {
                    x += out.grad(i, 0) * inv;
                }
            }
        }
    });
}

Tensor row_max(const Tensor& a) {
    const Matrix& av = a.value();
    require(av.cols() > 0, "row_max", "no columns");
    Matrix v(av.rows(), 1);
    auto arg = std::make_shared<std::vector<std::size_t>>(av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        auto r = av.row(i);
        const auto it = std::max_element(r.begin(), r.end());
        (*arg)[i] = static_cast<std::size_t>(it - r.begin());
        v(i, 0) = *it;
    }
    return Tensor::from_op(std::move(v), {a}, [arg](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (std::size_t i = 0; i < ga->rows(); ++i) {
                (*ga)(i, (*arg)[i]) += out.grad(i, 0);
            }
        }
    });
}

Tensor minmax_shift(const Tensor& a, double offset) {
    require(a.cols() == 1 && a.rows() > 0, "minmax_shift", "expects a non-empty column vector");
    const Matrix& av = a.value();
    const auto data = av.data();
    const auto lo_it = std::min_element(data.begin(), data.end());
    const auto hi_it = std::max_element(data.begin(), data.end());
    const std::size_t lo_idx = static_cast<std::size_t>(lo_it - data.begin());
    const std::size_t hi_idx = static_cast<std::size_t>(hi_it - data.begin());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    Matrix v(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        v(i, 0) = range > 0.0 ? (av(i, 0) - lo) / range + offset : 0.5 + offset;
    }
    return Tensor::from_op(std::move(v), {a}, [lo_idx, hi_idx, lo, range](Node& out) {
        Matrix* ga = grad_of(out, 0);
        if (!ga || range <= 0.0) {
            return;
        }
        const Matrix& av = value_of(out, 0);
        double d_lo = 0.0, d_hi = 0.0;
        for (std::size_t i = 0; i < av.rows(); ++i) {
            const double g = out.grad(i, 0);
            const double u = (av(i, 0) - lo) / range;
            (*ga)(i, 0) += g / range;
            d_lo += g * (u - 1.0) / range;
            d_hi += -g * u / range;
        }
        (*ga)(lo_idx, 0) += d_lo;
        (*ga)(hi_idx, 0) += d_hi;
    });
}

Tensor col_scale(const Tensor& x, const Tensor& w) {
    require(w.cols() == 1 && w.rows() == x.cols(), "col_scale", shape_text(x) + " by " + shape_text(w));
    Matrix v = x.value();
    for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) {
            v(i, j) *= w.value()(j, 0);
        }
    }
    return Tensor::from_op(std::move(v), {x, w}, [](Node& out) {
        const Matrix& xv = value_of(out, 0);
        const Matrix& wv = value_of(out, 1);
        Matrix* gx = grad_of(out, 0);
        Matrix* gw = grad_of(out, 1);
        for (std::size_t i = 0; i < xv.rows(); ++i) {
            for (std::size_t j = 0; j < xv.cols(); ++j) {
                if (gx) {
                    (*gx)(i, j) += out.grad(i, j) * wv(j, 0);
                }
                if (gw) {
                    (*gw)(j, 0) += out.grad(i, j) * xv(i, j);
                }
            }
        }
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require(a.rows() == b.rows(), "concat_cols", shape_text(a) + " with " + shape_text(b));
    const std::size_t ca = a.cols();
    Matrix v(a.rows(), ca + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::copy(a.value().row(i).begin(), a.value().row(i).end(), v.row(i).begin());
        std::copy(b.value().row(i).begin(), b.value().row(i).end(), v.row(i).begin() + static_cast<std::ptrdiff_t>(ca));
    }
    return Tensor::from_op(std::move(v), {a, b}, [ca](Node& out) {
        Matrix* ga = grad_of(out, 0);
        Matrix* gb = grad_of(out, 1);
        for (std::size_t i = 0; i < out.grad.rows(); ++i) {
            for (std::size_t j = 0; j < out.grad.cols(); ++j) {
                if (j < ca) {
                    if (ga) {
                        (*ga)(i, j) += out.grad(i, j);
                    }
                } else if (gb) {
                    (*gb)(i, j - ca) += out.grad(i, j);
                }
            }
        }
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    auto idx = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
    Matrix v(idx->size(), a.cols());
    for (std::size_t r = 0; r < idx->size(); ++r) {
        require((*idx)[r] < a.rows(), "gather_rows", "row index out of range");
        std::copy(a.value().row((*idx)[r]).begin(), a.value().row((*idx)[r]).end(), v.row(r).begin());
    }
    return Tensor::from_op(std::move(v), {a}, [idx](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (std::size_t r = 0; r < idx->size(); ++r) {
                auto dst = ga->row((*idx)[r]);
                auto src = out.grad.row(r);
                for (std::size_t j = 0; j < dst.size(); ++j) {
                    dst[j] += src[j];
                }
            }
        }
    });
}

Tensor pair_dot(const Tensor& z, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    auto p = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(pairs.begin(), pairs.end());
    const Matrix& zv = z.value();
    Matrix v(p->size(), 1);
    for (std::size_t k = 0; k < p->size(); ++k) {
        const auto [i, j] = (*p)[k];
        require(i < zv.rows() && j < zv.rows(), "pair_dot", "node index out of range");
        double s = 0.0;
        for (std::size_t c = 0; c < zv.cols(); ++c) {
            s += zv(i, c) * zv(j, c);
        }
        v(k, 0) = s;
    }
    return Tensor::from_op(std::move(v), {z}, [p](Node& out) {
        if (Matrix* gz = grad_of(out, 0)) {
            const Matrix& zv = value_of(out, 0);
            for (std::size_t k = 0; k < p->size(); ++k) {
                const auto [i, j] = (*p)[k];
                const double g = out.grad(k, 0);
                for (std::size_t c = 0; c < zv.cols(); ++c) {
                    (*gz)(i, c) += g * zv(j, c);
                    (*gz)(j, c) += g * zv(i, c);
                }
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.value().data()) {
        s += x;
    }
    return Tensor::from_op(Matrix(1, 1, s), {a}, [](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (auto& x : ga->data()) {
                x += out.grad(0, 0);
            }
        }
    });
}

Tensor weighted_sum(const Tensor& a, const Matrix& weights) {
    require(a.rows() == weights.rows() && a.cols() == weights.cols(), "weighted_sum", "shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        s += a.value().data()[k] * weights.data()[k];
    }
    return Tensor::from_op(Matrix(1, 1, s), {a}, [weights](Node& out) {
        if (Matrix* ga = grad_of(out, 0)) {
            for (std::size_t k = 0; k < ga->size(); ++k) {
                ga->data()[k] += out.grad(0, 0) * weights.data()[k];
            }
        }
    });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
    require(logits.cols() == 1 && logits.rows() == targets.size() && !targets.empty(), "bce_with_logits",
            "logits must be a column matching the targets");
    auto t = std::make_shared<std::vector<double>>(targets.begin(), targets.end());
    const double m = static_cast<double>(t->size());
    double loss = 0.0;
    for (std::size_t k = 0; k < t->size(); ++k) {
        const double x = logits.value()(k, 0);
        loss += std::max(x, 0.0) - x * (*t)[k] + std::log1p(std::exp(-std::abs(x)));
    }
    return Tensor::from_op(Matrix(1, 1, loss / m), {logits}, [t, m](Node& out) {
        if (Matrix* gl = grad_of(out, 0)) {
            const Matrix& lv = value_of(out, 0);
            for (std::size_t k = 0; k < t->size(); ++k) {
                const double sig = 1.0 / (1.0 + std::exp(-lv(k, 0)));
                (*gl)(k, 0) += out.grad(0, 0) * (sig - (*t)[k]) / m;
            }
        }
    });
}

Tensor mse(const Tensor& pred, const Matrix& target) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols() && target.size() > 0, "mse",
            "shape mismatch");
    const double m = static_cast<double>(target.size());
    double loss = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const double d = pred.value().data()[k] - target.data()[k];
        loss += d * d;
    }
    return Tensor::from_op(Matrix(1, 1, loss / m), {pred}, [target, m](Node& out) {
        if (Matrix* gp = grad_of(out, 0)) {
            const Matrix& pv = value_of(out, 0);
            for (std::size_t k = 0; k < target.size(); ++k) {
                gp->data()[k] += out.grad(0, 0) * 2.0 * (pv.data()[k] - target.data()[k]) / m;
            }
        }
    });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    require(logits.rows() == labels.size() && !labels.empty(), "softmax_cross_entropy", "label count mismatch");
    const Matrix& lv = logits.value();
    auto probs = std::make_shared<Matrix>(lv.rows(), lv.cols());
    auto y = std::make_shared<std::vector<std::size_t>>(labels.begin(), labels.end());
    double loss = 0.0;
    for (std::size_t i = 0; i < lv.rows(); ++i) {
        require((*y)[i] < lv.cols(), "softmax_cross_entropy", "label out of range");
        auto r = lv.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double denom = 0.0;
        for (std::size_t c = 0; c < r.size(); ++c) {
            (*probs)(i, c) = std::exp(r[c] - mx);
            denom += (*probs)(i, c);
        }
        for (std::size_t c = 0; c < r.size(); ++c) {
            (*probs)(i, c) /= denom;
        }
        loss += -(r[(*y)[i]] - mx - std::log(denom));
    }
    const double n = static_cast<double>(lv.rows());
    return Tensor::from_op(Matrix(1, 1, loss / n), {logits}, [probs, y, n](Node& out) {
        if (Matrix* gl = grad_of(out, 0)) {
            const double g = out.grad(0, 0) / n;
            for (std::size_t i = 0; i < probs->rows(); ++i) {
                for (std::size_t c = 0; c < probs->cols(); ++c) {
                    (*gl)(i, c) += g * ((*probs)(i, c) - (c == (*y)[i] ? 1.0 : 0.0));
                }
            }
        }
    });
}

} // namespace omicsnet::ad
