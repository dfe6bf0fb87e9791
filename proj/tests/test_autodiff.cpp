#include "gradcheck.hpp"
#include "helpers.hpp"

#include "omicsnet/autodiff.hpp"

#include <doctest.h>

#include <map>

using namespace omicsnet;
using ad::Tensor;

namespace {

std::mt19937_64& rng() {
    static std::mt19937_64 r(2024);
    return r;
}

Tensor param(std::size_t r, std::size_t c) { return Tensor::parameter(testing::random_matrix(r, c, rng())); }

Matrix weights(std::size_t r, std::size_t c) { return testing::random_matrix(r, c, rng()); }

// reduce any output to a scalar with random weights so every entry matters
Tensor reduce(const Tensor& t) {
    static std::map<std::pair<std::size_t, std::size_t>, Matrix> cache;
    auto key = std::pair{t.rows(), t.cols()};
    if (!cache.count(key)) cache[key] = weights(t.rows(), t.cols());
    return ad::weighted_sum(t, cache[key]);
}

constexpr double kTol = 1e-6;

} // namespace

TEST_SUITE("autodiff") {

TEST_CASE("elementwise and linear ops") {
    auto a = param(3, 4);
    auto b = param(4, 2);
    auto c = param(3, 4);
    auto bias = param(1, 4);
    auto s = param(1, 1);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::matmul(a, b)); }, {a, b}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::add(a, c)); }, {a, c}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::sub(a, c)); }, {a, c}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::add_row(a, bias)); }, {a, bias}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::scale(a, -2.5)); }, {a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::scalar_mul(s, a)); }, {s, a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::relu(a)); }, {a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::leaky_relu(a, 0.2)); }, {a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return ad::sum(ad::matmul(a, b)); }, {a, b}) < kTol);
}

TEST_CASE("reductions and reshaping ops") {
    auto a = param(5, 3);
    auto col = param(5, 1);
    auto w = param(3, 1);
    auto other = param(5, 2);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::row_mean(a)); }, {a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::row_max(a)); }, {a}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::minmax_shift(col, 0.5)); }, {col}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::col_scale(a, w)); }, {a, w}) < kTol);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::concat_cols(a, other)); }, {a, other}) < kTol);
    const std::vector<std::size_t> rows{4, 0, 4, 2};
    CHECK(gradcheck::worst_error([&] { return reduce(ad::gather_rows(a, rows)); }, {a}) < kTol);
    const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {2, 2}, {4, 3}};
    CHECK(gradcheck::worst_error([&] { return reduce(ad::pair_dot(a, pairs)); }, {a}) < kTol);
}

TEST_CASE("losses") {
    auto logits = param(6, 1);
    const std::vector<double> targets{1, 0, 0, 1, 1, 0};
    CHECK(gradcheck::worst_error([&] { return ad::bce_with_logits(logits, targets); }, {logits}) < kTol);
    auto pred = param(4, 3);
    const Matrix target = weights(4, 3);
    CHECK(gradcheck::worst_error([&] { return ad::mse(pred, target); }, {pred}) < kTol);
    const std::vector<std::size_t> labels{2, 0, 1, 2};
    CHECK(gradcheck::worst_error([&] { return ad::softmax_cross_entropy(pred, labels); }, {pred}) < kTol);
}

TEST_CASE("sparse and attention ops") {
    const auto g = testing::two_triangles();
    const auto ops = GraphOperators::build(g);
    auto h = param(6, 4);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::spmm(ops.gcn, h)); }, {h}) < kTol);
    auto a_src = param(2, 2);
    auto a_dst = param(2, 2);
    CHECK(gradcheck::worst_error([&] { return reduce(ad::gat_aggregate(h, a_src, a_dst, ops.attention, 0.2)); },
                                 {h, a_src, a_dst}) < kTol);
}

TEST_CASE("forward values") {
    const auto a = Tensor::constant(Matrix{{1, 3}, {2, 4}});
    CHECK(ad::row_mean(a).value() == Matrix{{2}, {3}});
    CHECK(ad::row_max(a).value() == Matrix{{3}, {4}});
    CHECK(ad::minmax_shift(Tensor::constant(Matrix{{1}, {3}, {2}}), 0.5).value() == Matrix{{0.5}, {1.5}, {1.0}});
    CHECK(ad::minmax_shift(Tensor::constant(Matrix{{7}, {7}}), 0.5).value() == Matrix{{1.0}, {1.0}});
    CHECK(ad::concat_cols(a, a).value() == Matrix{{1, 3, 1, 3}, {2, 4, 2, 4}});
    const std::vector<std::size_t> labels{0, 1};
    const auto l = ad::softmax_cross_entropy(Tensor::constant(Matrix{{0, 0}, {0, 0}}), labels);
    CHECK(l.value()(0, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradients accumulate until zero_grad and constants get none") {
    auto p = Tensor::parameter(Matrix{{2.0}});
    const auto c = Tensor::constant(Matrix{{3.0}});
    ad::backward(ad::sum(ad::matmul(p, c)));
    CHECK(p.grad()(0, 0) == 3.0);
    ad::backward(ad::sum(ad::matmul(p, c)));
    CHECK(p.grad()(0, 0) == 6.0);
    p.zero_grad();
    CHECK(p.grad()(0, 0) == 0.0);
    CHECK(c.grad()(0, 0) == 0.0);
    CHECK_FALSE(c.requires_grad());
}

TEST_CASE("shared subexpressions sum their gradient paths") {
    auto p = param(2, 2);
    // p used twice: d/dp sum(p + p) = 2
    ad::backward(ad::sum(ad::add(p, p)));
    for (double g : p.grad().data()) {
        CHECK(g == 2.0);
    }
    p.zero_grad();
    CHECK(gradcheck::worst_error([&] { return reduce(ad::matmul(p, p)); }, {p}) < kTol);
}

TEST_CASE("ops leave their inputs untouched") {
    const Matrix before = weights(3, 3);
    auto a = Tensor::parameter(before);
    auto out = ad::relu(ad::matmul(a, a));
    ad::backward(ad::sum(out));
    CHECK(a.value() == before);
}

} // TEST_SUITE
