#include "omicsnet/netbuild.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/parallel.hpp"
#include "omicsnet/stats.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace omicsnet {

namespace {

void require_complete(const OmicsMatrix& x, const char* who) {
    if (x.has_missing()) {
        throw DataError(std::string(who) + " requires complete data; align the cohort first");
    }
}

std::vector<std::vector<double>> columns_of(const OmicsMatrix& x) {
    std::vector<std::vector<double>> cols(x.n_features());
    for (std::size_t c = 0; c < x.n_features(); ++c) {
        cols[c] = x.values.col(c);
    }
    return cols;
}

/// Fills the upper triangle row by row (parallel over rows), then mirrors it.
template <typename PairFn>
Matrix pairwise(std::size_t n, PairFn fn) {
    Matrix s(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            s(i, j) = fn(i, j);
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            s(j, i) = s(i, j);
        }
    }
    return s;
}

std::string metric_name(SimilarityMetric m) { return m == SimilarityMetric::Cosine ? "cosine" : "euclidean"; }

std::string prune_text(const Prune& p) {
    switch (p.kind) {
    case Prune::Kind::None: return "none";
    case Prune::Kind::Threshold: return "threshold:" + format_double(p.value);
    case Prune::Kind::TopFraction: return "top_fraction:" + format_double(p.value);
    }
    return "none";
}

/// Edges from a dense weight matrix, skipping non-positive weights and flagged nodes, then pruned.
std::vector<Edge> edges_from_matrix(const Matrix& w, const std::vector<std::size_t>& flagged, const Prune& prune) {
    std::vector<bool> skip(w.rows(), false);
    for (std::size_t f : flagged) {
        skip[f] = true;
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        if (skip[i]) {
            continue;
        }
        for (std::size_t j = i + 1; j < w.cols(); ++j) {
            if (!skip[j] && w(i, j) > 0.0) {
                edges.push_back({i, j, w(i, j)});
            }
        }
    }
    if (prune.kind == Prune::Kind::Threshold) {
        std::erase_if(edges, [&](const Edge& e) { return e.weight < prune.value; });
    } else if (prune.kind == Prune::Kind::TopFraction) {
        const auto keep = static_cast<std::size_t>(std::ceil(prune.value * static_cast<double>(edges.size())));
        std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.weight > b.weight; });
        edges.resize(std::min(keep, edges.size()));
    }
    return edges;
}

void check_prune(const Prune& prune, double lo, double hi, bool lo_open) {
    if (prune.kind == Prune::Kind::Threshold) {
        const bool below = lo_open ? prune.value <= lo : prune.value < lo;
        if (below || prune.value > hi || !std::isfinite(prune.value)) {
            throw ConfigError("prune threshold " + format_double(prune.value) + " outside the metric range [" +
                              format_double(lo) + ", " + format_double(hi) + "]");
        }
    } else if (prune.kind == Prune::Kind::TopFraction) {
        if (!(prune.value > 0.0 && prune.value <= 1.0)) {
            throw ConfigError("prune top fraction must lie in (0, 1]");
        }
    }
}

void check_shape(const OmicsMatrix& x, const char* who) {
    if (x.n_features() < 2 || x.n_subjects() < 2) {
        throw DataError(std::string(who) + " needs at least two features and two subjects");
    }
    require_complete(x, who);
}

} // namespace

Matrix similarity_matrix(const OmicsMatrix& x, SimilarityMetric metric, std::vector<std::size_t>* degenerate) {
    require_complete(x, "similarity_matrix");
    const auto cols = columns_of(x);
    const std::size_t n = cols.size();
    std::vector<double> norms(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (double v : cols[c]) {
            s += v * v;
        }
        norms[c] = std::sqrt(s);
    }
    std::vector<std::size_t> flagged;
    if (metric == SimilarityMetric::Cosine) {
        for (std::size_t c = 0; c < n; ++c) {
            if (norms[c] == 0.0) {
                flagged.push_back(c);
            }
        }
    }
    Matrix s = pairwise(n, [&](std::size_t i, std::size_t j) {
        if (metric == SimilarityMetric::Cosine) {
            if (norms[i] == 0.0 || norms[j] == 0.0) {
                return 0.0;
            }
            double dot = 0.0;
            for (std::size_t r = 0; r < cols[i].size(); ++r) {
                dot += cols[i][r] * cols[j][r];
            }
            return std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
        }
        double d2 = 0.0;
        for (std::size_t r = 0; r < cols[i].size(); ++r) {
            const double d = cols[i][r] - cols[j][r];
            d2 += d * d;
        }
        return 1.0 / (1.0 + std::sqrt(d2));
    });
    for (std::size_t i = 0; i < n; ++i) {
        s(i, i) = (metric == SimilarityMetric::Cosine && norms[i] == 0.0) ? 0.0 : 1.0;
    }
    if (degenerate) {
        *degenerate = std::move(flagged);
    }
    return s;
}

Matrix correlation_matrix(const OmicsMatrix& x, CorrelationMethod method, std::vector<std::size_t>* degenerate) {
    require_complete(x, "correlation_matrix");
    auto cols = columns_of(x);
    std::vector<std::size_t> flagged;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto& col = cols[c];
        if (std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); })) {
            flagged.push_back(c);
        }
        if (method == CorrelationMethod::Spearman) {
            cols[c] = stats::average_ranks(col);
        }
    }
    Matrix r = pairwise(cols.size(), [&](std::size_t i, std::size_t j) {
        return std::abs(stats::pearson(cols[i], cols[j]));
    });
    for (std::size_t i = 0; i < cols.size(); ++i) {
        r(i, i) = 1.0;
    }
    for (std::size_t f : flagged) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            r(f, j) = r(j, f) = 0.0;
        }
    }
    if (degenerate) {
        *degenerate = std::move(flagged);
    }
    return r;
}

FeatureGraph similarity_network(const OmicsMatrix& x, SimilarityMetric metric, Prune prune) {
    check_shape(x, "similarity_network");
    if (metric == SimilarityMetric::Cosine) {
        check_prune(prune, -1.0, 1.0, false);
    } else {
        check_prune(prune, 0.0, 1.0, true);
    }
    std::vector<std::size_t> flagged;
    const Matrix s = similarity_matrix(x, metric, &flagged);
    GraphMeta meta{"similarity", {{"metric", metric_name(metric)}, {"prune", prune_text(prune)}}, flagged};
    return FeatureGraph(x.feature_names, edges_from_matrix(s, flagged, prune), std::move(meta));
}

FeatureGraph correlation_network(const OmicsMatrix& x, CorrelationMethod method, Prune prune) {
    check_shape(x, "correlation_network");
    check_prune(prune, 0.0, 1.0, false);
    std::vector<std::size_t> flagged;
    const Matrix r = correlation_matrix(x, method, &flagged);
    GraphMeta meta{"correlation",
                   {{"method", method == CorrelationMethod::Pearson ? "pearson" : "spearman"},
                    {"prune", prune_text(prune)}},
                   flagged};
    return FeatureGraph(x.feature_names, edges_from_matrix(r, flagged, prune), std::move(meta));
}

ScaleFreeFit scale_free_fit(std::span<const double> connectivity, std::size_t n_bins) {
    if (n_bins < 2) {
        throw ConfigError("scale-free fit needs at least two bins");
    }
    std::vector<double> k;
    for (double v : connectivity) {
        if (v > 0.0) {
            k.push_back(v);
        }
    }
    if (k.empty()) {
        throw DataError("scale-free fit undefined: every node has zero connectivity");
    }
    const auto [kmin_it, kmax_it] = std::minmax_element(k.begin(), k.end());
    const double kmin = *kmin_it;
    const double kmax = *kmax_it;
    if (kmax - kmin <= 1e-9 * kmax) {
        throw DataError("scale-free fit undefined: all nodes share a single connectivity value");
    }
    const double lo = std::log10(kmin);
    const double hi = std::log10(kmax);
    std::vector<double> sum(n_bins, 0.0);
    std::vector<std::size_t> count(n_bins, 0);
    for (double v : k) {
        auto b = static_cast<std::size_t>(std::floor((std::log10(v) - lo) / (hi - lo) * static_cast<double>(n_bins)));
        b = std::min(b, n_bins - 1);
        sum[b] += v;
        ++count[b];
    }
    ScaleFreeFit fit;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (count[b] == 0) {
            continue;
        }
        fit.log_k.push_back(std::log10(sum[b] / static_cast<double>(count[b])));
        fit.log_p.push_back(std::log10(static_cast<double>(count[b]) / static_cast<double>(connectivity.size())));
    }
    const double mx = stats::mean(fit.log_k);
    const double my = stats::mean(fit.log_p);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < fit.log_k.size(); ++i) {
        sxy += (fit.log_k[i] - mx) * (fit.log_p[i] - my);
        sxx += (fit.log_k[i] - mx) * (fit.log_k[i] - mx);
        syy += (fit.log_p[i] - my) * (fit.log_p[i] - my);
    }
    fit.slope = sxy / sxx;
    const double r2 = syy == 0.0 ? 0.0 : (sxy * sxy) / (sxx * syy);
    fit.signed_r2 = fit.slope < 0.0 ? r2 : -r2;
    fit.mean_connectivity = stats::mean(connectivity);
    return fit;
}

std::vector<double> default_beta_grid() {
    std::vector<double> g(20);
    std::iota(g.begin(), g.end(), 1.0);
    return g;
}

SoftThresholdResult soft_threshold_network(const OmicsMatrix& x, std::span<const double> beta_grid, double target_r2,
                                           std::size_t n_bins) {
    check_shape(x, "soft_threshold_network");
    if (beta_grid.empty()) {
        throw ConfigError("soft_threshold_network: empty beta grid");
    }
    for (double b : beta_grid) {
        if (!(b > 0.0) || !std::isfinite(b)) {
            throw ConfigError("soft_threshold_network: beta values must be positive");
        }
    }
    std::vector<std::size_t> flagged;
    const Matrix r = correlation_matrix(x, CorrelationMethod::Pearson, &flagged);
    const std::size_t n = r.rows();
    std::vector<bool> skip(n, false);
    for (std::size_t f : flagged) {
        skip[f] = true;
    }

    auto adjacency = [&](double beta) {
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j && !skip[i] && !skip[j]) {
                    a(i, j) = std::pow(r(i, j), beta);
                }
            }
        }
        return a;
    };

    std::vector<double> grid(beta_grid.begin(), beta_grid.end());
    std::sort(grid.begin(), grid.end());
    SoftThresholdResult result;
    std::size_t chosen = grid.size();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const Matrix a = adjacency(grid[g]);
        std::vector<double> k;
        for (std::size_t i = 0; i < n; ++i) {
            if (skip[i]) {
                continue;
            }
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += a(i, j);
            }
            k.push_back(s);
        }
        auto fit = scale_free_fit(k, n_bins);
        fit.beta = grid[g];
        result.report.push_back(fit);
        if (chosen == grid.size() && fit.signed_r2 >= target_r2) {
            chosen = g;
        }
    }
    if (chosen == grid.size()) {
        result.below_target = true;
        chosen = 0;
        for (std::size_t g = 1; g < grid.size(); ++g) {
            if (result.report[g].signed_r2 > result.report[chosen].signed_r2) {
                chosen = g;
            }
        }
    }
    result.beta = grid[chosen];
    result.fit = result.report[chosen];
    GraphMeta meta{"soft_threshold",
                   {{"beta", format_double(result.beta)},
                    {"target_r2", format_double(target_r2)},
                    {"signed_r2", format_double(result.fit.signed_r2)},
                    {"below_target", result.below_target ? "true" : "false"}},
                   flagged};
    result.graph = FeatureGraph(x.feature_names, edges_from_matrix(adjacency(result.beta), flagged, Prune::none()),
                                std::move(meta));
    return result;
}

std::vector<std::vector<std::size_t>> knn_lists(const OmicsMatrix& x, std::size_t k, SimilarityMetric metric) {
    const std::size_t n = x.n_features();
    if (k == 0 || k >= n) {
        throw ConfigError("k-NN: k must satisfy 0 < k < number of features (k = " + std::to_string(k) +
                          ", features = " + std::to_string(n) + ")");
    }
    const Matrix s = similarity_matrix(x, metric);
    std::vector<std::vector<std::size_t>> lists(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::size_t> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                others.push_back(j);
            }
        }
        std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (s(i, a) != s(i, b)) {
                                  return s(i, a) > s(i, b);
                              }
                              return x.feature_names[a] < x.feature_names[b];
                          });
        others.resize(k);
        lists[i] = std::move(others);
    });
    return lists;
}

FeatureGraph knn_graph(const OmicsMatrix& x, std::size_t k, SimilarityMetric metric, KnnSymmetrization mode) {
    require_complete(x, "knn_graph");
    std::vector<std::size_t> flagged;
    const Matrix s = similarity_matrix(x, metric, &flagged);
    const auto lists = knn_lists(x, k, metric);
    std::set<std::pair<std::size_t, std::size_t>> selected;
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < lists.size(); ++i) {
        for (std::size_t j : lists[i]) {
            selected.insert({i, j});
        }
    }
    for (const auto& [i, j] : selected) {
        if (mode == KnnSymmetrization::Mutual && !selected.count({j, i})) {
            continue;
        }
        pairs.insert(std::minmax(i, j));
    }
    std::vector<Edge> edges;
    for (const auto& [i, j] : pairs) {
        if (s(i, j) > 0.0) {
            edges.push_back({i, j, s(i, j)});
        }
    }
    GraphMeta meta{"knn",
                   {{"k", std::to_string(k)},
                    {"metric", metric_name(metric)},
                    {"symmetrization", mode == KnnSymmetrization::Union ? "union" : "mutual"}},
                   flagged};
    return FeatureGraph(x.feature_names, std::move(edges), std::move(meta));
}

FeatureGraph snn_graph(const OmicsMatrix& x, std::size_t k) {
    require_complete(x, "snn_graph");
    std::vector<std::size_t> flagged;
    similarity_matrix(x, SimilarityMetric::Cosine, &flagged);
    auto lists = knn_lists(x, k, SimilarityMetric::Cosine);
    for (auto& l : lists) {
        std::sort(l.begin(), l.end());
    }
    const std::size_t n = lists.size();
    std::vector<std::vector<Edge>> rows(n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t shared = 0;
            auto a = lists[i].begin();
            auto b = lists[j].begin();
            while (a != lists[i].end() && b != lists[j].end()) {
                if (*a < *b) {
                    ++a;
                } else if (*b < *a) {
                    ++b;
                } else {
                    ++shared;
                    ++a;
                    ++b;
                }
            }
            if (shared > 0) {
                const double uni = static_cast<double>(2 * k - shared);
                rows[i].push_back({i, j, static_cast<double>(shared) / uni});
            }
        }
    });
    std::vector<Edge> edges;
    for (auto& r : rows) {
        edges.insert(edges.end(), r.begin(), r.end());
    }
    GraphMeta meta{"snn", {{"k", std::to_string(k)}, {"metric", "cosine"}}, flagged};
    return FeatureGraph(x.feature_names, std::move(edges), std::move(meta));
}

} // namespace omicsnet
