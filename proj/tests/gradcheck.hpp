#ifndef OMICSNET_TEST_GRADCHECK_HPP
#define OMICSNET_TEST_GRADCHECK_HPP

#include "omicsnet/autodiff.hpp"
#include "omicsnet/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace gradcheck {

using omicsnet::Matrix;
namespace ad = omicsnet::ad;

// Worst relative error between backprop and central differences over every
// entry of every parameter. Tiny gradients are compared against a 1e-6 floor.
inline double worst_error(const std::function<ad::Tensor()>& loss, std::vector<ad::Tensor> params,
                          double step = 1e-5) {
    for (auto& p : params) {
        p.zero_grad();
    }
    ad::backward(loss());
    std::vector<Matrix> analytic;
    for (const auto& p : params) {
        analytic.push_back(p.grad());
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto values = params[k].mutable_value().data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double keep = values[i];
            values[i] = keep + step;
            const double up = loss().value()(0, 0);
            values[i] = keep - step;
            const double down = loss().value()(0, 0);
            values[i] = keep;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[k].data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

// Two-layer encoder of one kind on a random graph, loss = sum(out .* R).
inline double encoder_error(omicsnet::LayerKind kind, const omicsnet::FeatureGraph& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    const std::size_t in = 3;
    Matrix h(g.num_nodes(), in);
    for (double& v : h.data()) v = n(rng);
    const std::size_t heads = kind == omicsnet::LayerKind::Gat ? 2 : 1;
    omicsnet::GnnEncoder enc(omicsnet::make_stack(kind, in, {4}, 2, heads), seed);
    // move parameters away from zero-initialized biases and epsilon
    for (auto& p : enc.parameters()) {
        for (double& v : p.mutable_value().data()) v += 0.3 * n(rng);
    }
    Matrix r(g.num_nodes(), 2);
    for (double& v : r.data()) v = n(rng);
    const auto ops = omicsnet::GraphOperators::build(g);
    const auto x = ad::Tensor::constant(h);
    return worst_error([&] { return ad::weighted_sum(enc.forward(x, ops), r); }, enc.parameters());
}

} // namespace gradcheck

#endif
