#include "omicsnet/autodiff.hpp"
#include "omicsnet/errors.hpp"
#include "omicsnet/pipeline.hpp"
#include "omicsnet/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace omicsnet {

std::string to_string(ReductionMode m) {
    switch (m) {
    case ReductionMode::Mean: return "mean";
    case ReductionMode::Max: return "max";
    case ReductionMode::Autoencoder: return "autoencoder";
    }
    return "?";
}

std::string to_string(IntegrationMode m) {
    return m == IntegrationMode::Concatenate ? "concatenate" : "feature_weight";
}

ReductionMode parse_reduction(const std::string& text) {
    if (text == "mean") return ReductionMode::Mean;
    if (text == "max") return ReductionMode::Max;
    if (text == "autoencoder") return ReductionMode::Autoencoder;
    throw ConfigError("unknown reduction '" + text + "' (expected mean, max or autoencoder)");
}

IntegrationMode parse_integration(const std::string& text) {
    if (text == "concatenate") return IntegrationMode::Concatenate;
    if (text == "feature_weight") return IntegrationMode::FeatureWeight;
    throw ConfigError("unknown integration '" + text + "' (expected concatenate or feature_weight)");
}

namespace {

void require_finite(const Matrix& e, const char* what) {
    for (double v : e.data()) {
        if (!std::isfinite(v)) {
            throw DataError(std::string(what) + ": embedding contains a non-finite value");
        }
    }
}

// largest absolute entry, used to put the autoencoder input on unit scale
double abs_scale(const Matrix& e) {
    double s = 0.0;
    for (double v : e.data()) {
        s = std::max(s, std::abs(v));
    }
    return s > 0.0 ? s : 1.0;
}

} // namespace

std::vector<double> BottleneckAutoencoder::encode(const Matrix& e) const {
    if (e.cols() != w_enc.rows()) {
        throw DataError("autoencoder expects " + std::to_string(w_enc.rows()) + " columns, got " +
                        std::to_string(e.cols()));
    }
    std::vector<double> h(e.rows());
    for (std::size_t i = 0; i < e.rows(); ++i) {
        double acc = b_enc(0, 0);
        for (std::size_t k = 0; k < e.cols(); ++k) {
            acc += e(i, k) * w_enc(k, 0);
        }
        h[i] = acc;
    }
    return h;
}

BottleneckAutoencoder train_bottleneck_autoencoder(const Matrix& e, std::uint64_t seed, std::size_t epochs) {
    require_finite(e, "autoencoder");
    if (e.rows() == 0 || e.cols() == 0) {
        throw DataError("autoencoder: empty embedding");
    }
    const std::size_t d = e.cols();
    const double s = abs_scale(e);
    Matrix scaled = e;
    for (double& v : scaled.data()) {
        v /= s;
    }
    std::mt19937_64 rng(seed);
    auto we = ad::Tensor::parameter(glorot_uniform(d, 1, rng));
    auto be = ad::Tensor::parameter(Matrix(1, 1));
    auto wd = ad::Tensor::parameter(glorot_uniform(1, d, rng));
    auto bd = ad::Tensor::parameter(Matrix(1, d));
    AdamOptimizer opt({we, be, wd, bd}, 0.01);
    const auto input = ad::Tensor::constant(scaled);

    BottleneckAutoencoder ae;
    ae.loss_curve.reserve(epochs + 1);
    auto step_loss = [&](bool train) {
        auto h = ad::add_row(ad::matmul(input, we), be);
        auto recon = ad::add_row(ad::matmul(h, wd), bd);
        auto loss = ad::mse(recon, scaled);
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) {
            throw NumericError("autoencoder diverged (non-finite reconstruction loss)");
        }
        if (train) {
            opt.zero_grad();
            ad::backward(loss);
            opt.step();
        }
        return value;
    };
    for (std::size_t ep = 0; ep < epochs; ++ep) {
        ae.loss_curve.push_back(step_loss(true));
    }
    ae.loss_curve.push_back(step_loss(false));

    // fold the input scaling into the encoder so encode() takes raw rows
    ae.w_enc = we.value();
    for (double& v : ae.w_enc.data()) {
        v /= s;
    }
    ae.b_enc = be.value();
    ae.w_dec = wd.value();
    ae.b_dec = bd.value();
    for (double& v : ae.w_dec.data()) {
        v *= s;
    }
    for (double& v : ae.b_dec.data()) {
        v *= s;
    }
    return ae;
}

ReducedEmbedding reduce_embeddings(const Matrix& e, ReductionMode mode, std::uint64_t seed, double offset) {
    require_finite(e, "reduce_embeddings");
    if (e.rows() == 0 || e.cols() == 0) {
        throw DataError("reduce_embeddings: empty embedding");
    }
    ReducedEmbedding out;
    out.raw.resize(e.rows());
    switch (mode) {
    case ReductionMode::Mean:
        for (std::size_t i = 0; i < e.rows(); ++i) {
            double acc = 0.0;
            for (double v : e.row(i)) {
                acc += v;
            }
            out.raw[i] = acc / static_cast<double>(e.cols());
        }
        break;
    case ReductionMode::Max:
        for (std::size_t i = 0; i < e.rows(); ++i) {
            auto r = e.row(i);
            out.raw[i] = *std::max_element(r.begin(), r.end());
        }
        break;
    case ReductionMode::Autoencoder:
        out.raw = train_bottleneck_autoencoder(e, seed).encode(e);
        break;
    }
    const auto [lo, hi] = std::minmax_element(out.raw.begin(), out.raw.end());
    const double min = *lo, range = *hi - *lo;
    out.weights.resize(out.raw.size());
    for (std::size_t i = 0; i < out.raw.size(); ++i) {
        out.weights[i] = range > 0.0 ? (out.raw[i] - min) / range + offset : 0.5 + offset;
    }
    return out;
}

Matrix integrate_feature_weight(const Matrix& x, std::span<const double> weights) {
    if (weights.size() != x.cols()) {
        throw DataError("integrate: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(x.cols()) + " features");
    }
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out(i, j) = x(i, j) * weights[j];
        }
    }
    return out;
}

Matrix integrate_concatenate(const Matrix& x, const Matrix& e) {
    const Matrix s = subject_representation(x, e);
    Matrix out(x.rows(), x.cols() + s.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto dst = out.row(i);
        std::copy(x.row(i).begin(), x.row(i).end(), dst.begin());
        std::copy(s.row(i).begin(), s.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(x.cols()));
    }
    return out;
}

Matrix subject_representation(const Matrix& x, const Matrix& e, RowNormalization norm) {
    if (x.cols() != e.rows()) {
        throw DataError("subject_representation: X has " + std::to_string(x.cols()) + " features but E has " +
                        std::to_string(e.rows()) + " nodes");
    }
    Matrix s = matmul(x, e);
    if (norm == RowNormalization::RowUnit) {
        for (std::size_t i = 0; i < s.rows(); ++i) {
            double ss = 0.0;
            for (double v : s.row(i)) {
                ss += v * v;
            }
            if (ss > 0.0) {
                const double inv = 1.0 / std::sqrt(ss);
                for (double& v : s.row(i)) {
                    v *= inv;
                }
            }
        }
    }
    return s;
}

OmicsMatrix subject_representation(const OmicsMatrix& x, const EmbeddingMatrix& e, RowNormalization norm) {
    if (x.feature_names != e.node_names) {
        throw DataError("subject_representation: matrix columns and embedding nodes differ (same names in the "
                        "same order are required)");
    }
    OmicsMatrix out;
    out.modality = "representation";
    out.subject_ids = x.subject_ids;
    out.values = subject_representation(x.values, e.values, norm);
    for (std::size_t k = 0; k < e.dim(); ++k) {
        out.feature_names.push_back("e" + std::to_string(k + 1));
    }
    return out;
}

Matrix pca_coords(const Matrix& e) {
    require_finite(e, "pca_coords");
    const auto n = static_cast<Eigen::Index>(e.rows());
    const auto d = static_cast<Eigen::Index>(e.cols());
    if (n == 0 || d == 0) {
        throw DataError("pca_coords: empty embedding");
    }
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            m(i, k) = e(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
        }
    }
    const Eigen::RowVectorXd mu = m.colwise().mean();
    m.rowwise() -= mu;
    const Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("pca_coords: eigen decomposition failed");
    }
    // eigenvalues come back ascending
    Matrix out(e.rows(), 2, 0.0);
    for (Eigen::Index axis = 0; axis < std::min<Eigen::Index>(2, d); ++axis) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - axis);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        const Eigen::VectorXd scores = m * v;
        for (Eigen::Index i = 0; i < n; ++i) {
            out(static_cast<std::size_t>(i), static_cast<std::size_t>(axis)) = scores(i);
        }
    }
    return out;
}

} // namespace omicsnet
