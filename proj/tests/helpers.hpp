#ifndef OMICSNET_TEST_HELPERS_HPP
#define OMICSNET_TEST_HELPERS_HPP

#include "omicsnet/graph.hpp"
#include "omicsnet/matrix.hpp"
#include "omicsnet/omics.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

using omicsnet::Matrix;

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Matrix m(r, c);
    for (double& v : m.data()) {
        v = n(rng);
    }
    return m;
}

inline std::vector<std::string> names(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(prefix + (i < 10 ? "0" : "") + std::to_string(i));
    }
    return out;
}

inline omicsnet::OmicsMatrix omics(const Matrix& values, const std::string& modality = "m",
                                   const std::string& feature_prefix = "f") {
    omicsnet::OmicsMatrix m;
    m.modality = modality;
    m.values = values;
    m.subject_ids = names("s", values.rows());
    m.feature_names = names(feature_prefix, values.cols());
    return m;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// G(n, p) graph with U(0.1, 1) weights
inline omicsnet::FeatureGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<omicsnet::Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (u(rng) < p) {
                edges.push_back({i, j, 0.1 + 0.9 * u(rng)});
            }
        }
    }
    return omicsnet::FeatureGraph(names("v", n), edges);
}

struct Planted {
    omicsnet::FeatureGraph graph;
    std::vector<std::size_t> labels;
};

// Stochastic block model with unit weights.
inline Planted planted_partition(std::size_t blocks, std::size_t size, double p_in, double p_out,
                                 std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = blocks * size;
    Planted out;
    for (std::size_t v = 0; v < n; ++v) {
        out.labels.push_back(v / size);
    }
    std::vector<omicsnet::Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (u(rng) < (out.labels[i] == out.labels[j] ? p_in : p_out)) {
                edges.push_back({i, j, 1.0});
            }
        }
    }
    out.graph = omicsnet::FeatureGraph(names("v", n), edges);
    return out;
}

inline omicsnet::FeatureGraph two_triangles(bool bridge = true) {
    std::vector<omicsnet::Edge> e{{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}};
    if (bridge) {
        e.push_back({2, 3, 1});
    }
    return omicsnet::FeatureGraph({"a", "b", "c", "d", "e", "f"}, e);
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("omicsnet_test_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace testing

#endif
