#include "omicsnet/featselect.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

// CART forest used only for mean-decrease-in-impurity importance. Rows are
// put in subject-ID order and columns in feature-name order before any
// randomness is drawn, so the result does not depend on input ordering.

namespace omicsnet {

namespace {

constexpr double kMinGain = 1e-12;

struct TrainingSet {
    Matrix x;                      // canonical rows x canonical columns
    std::vector<double> target;    // class index or outcome
    bool classification = true;
    std::size_t n_classes = 0;
};

struct SplitChoice {
    double gain = 0.0;
    std::size_t feature = 0;
    std::size_t cut = 0; // samples [0, cut) of the sorted order go left
    bool found = false;
};

class TreeGrower {
public:
    TreeGrower(const TrainingSet& data, const ForestConfig& cfg, std::size_t mtry, std::uint64_t seed)
        : data_(data), cfg_(cfg), mtry_(mtry), rng_(seed), importance_(data.x.cols(), 0.0) {}

    std::vector<double> grow() {
        const std::size_t n = data_.x.rows();
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) {
            s = pick(rng_);
        }
        std::sort(sample.begin(), sample.end());
        total_ = static_cast<double>(n);
        split_node(sample, 0);
        return importance_;
    }

private:
    double impurity(const std::vector<std::size_t>& idx) const {
        const double n = static_cast<double>(idx.size());
        if (data_.classification) {
            std::vector<double> counts(data_.n_classes, 0.0);
            for (std::size_t i : idx) {
                counts[static_cast<std::size_t>(data_.target[i])] += 1.0;
            }
            double g = 1.0;
            for (double c : counts) {
                g -= (c / n) * (c / n);
            }
            return g;
        }
        double s = 0.0, ss = 0.0;
        for (std::size_t i : idx) {
            s += data_.target[i];
            ss += data_.target[i] * data_.target[i];
        }
        const double m = s / n;
        return std::max(0.0, ss / n - m * m);
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t p = data_.x.cols();
        std::vector<std::size_t> all(p);
        std::iota(all.begin(), all.end(), std::size_t{0});
        for (std::size_t i = 0; i < mtry_; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, p - 1);
            std::swap(all[i], all[pick(rng_)]);
        }
        all.resize(mtry_);
        std::sort(all.begin(), all.end());
        return all;
    }

    /// Best cut of one feature; gain is the weighted impurity decrease n*I - nl*Il - nr*Ir.
    SplitChoice best_cut(std::vector<std::size_t>& idx, std::size_t feature, double parent_impurity) const {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return data_.x(a, feature) < data_.x(b, feature); });
        const std::size_t n = idx.size();
        const double parent = static_cast<double>(n) * parent_impurity;
        SplitChoice best;
        if (data_.classification) {
            std::vector<double> left(data_.n_classes, 0.0), right(data_.n_classes, 0.0);
            for (std::size_t i : idx) {
                right[static_cast<std::size_t>(data_.target[i])] += 1.0;
            }
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (double c : right) {
                right_sq += c * c;
            }
            for (std::size_t pos = 1; pos < n; ++pos) {
                const auto c = static_cast<std::size_t>(data_.target[idx[pos - 1]]);
                left_sq += 2.0 * left[c] + 1.0;
                right_sq -= 2.0 * right[c] - 1.0;
                left[c] += 1.0;
                right[c] -= 1.0;
                if (pos < cfg_.min_leaf || n - pos < cfg_.min_leaf) {
                    continue;
                }
                if (data_.x(idx[pos - 1], feature) == data_.x(idx[pos], feature)) {
                    continue;
                }
                const double nl = static_cast<double>(pos);
                const double nr = static_cast<double>(n - pos);
                // n*gini = n - sum(c^2)/n
                const double child = (nl - left_sq / nl) + (nr - right_sq / nr);
                const double gain = parent - child;
                if (gain > best.gain) {
                    best = {gain, feature, pos, true};
                }
            }
            return best;
        }
        double ls = 0.0, lss = 0.0, rs = 0.0, rss = 0.0;
        for (std::size_t i : idx) {
            rs += data_.target[i];
            rss += data_.target[i] * data_.target[i];
        }
        for (std::size_t pos = 1; pos < n; ++pos) {
            const double t = data_.target[idx[pos - 1]];
            ls += t;
            lss += t * t;
            rs -= t;
            rss -= t * t;
            if (pos < cfg_.min_leaf || n - pos < cfg_.min_leaf) {
                continue;
            }
            if (data_.x(idx[pos - 1], feature) == data_.x(idx[pos], feature)) {
                continue;
            }
            const double nl = static_cast<double>(pos);
            const double nr = static_cast<double>(n - pos);
            const double child = std::max(0.0, lss - ls * ls / nl) + std::max(0.0, rss - rs * rs / nr);
            const double gain = parent - child;
            if (gain > best.gain) {
                best = {gain, feature, pos, true};
            }
        }
        return best;
    }

    void split_node(std::vector<std::size_t>& idx, std::size_t depth) {
        if (idx.size() < 2 * cfg_.min_leaf || (cfg_.max_depth != 0 && depth >= cfg_.max_depth)) {
            return;
        }
        const double node_impurity = impurity(idx);
        if (node_impurity <= 0.0) {
            return;
        }
        SplitChoice best;
        for (std::size_t f : candidate_features()) {
            auto choice = best_cut(idx, f, node_impurity);
            // candidates are visited in ascending canonical order; strict > keeps the first on ties
            if (choice.found && choice.gain > best.gain) {
                best = choice;
            }
        }
        if (!best.found || best.gain <= kMinGain) {
            return;
        }
        importance_[best.feature] += best.gain / total_;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return data_.x(a, best.feature) < data_.x(b, best.feature);
        });
        std::vector<std::size_t> left(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(best.cut));
        std::vector<std::size_t> right(idx.begin() + static_cast<std::ptrdiff_t>(best.cut), idx.end());
        idx.clear();
        idx.shrink_to_fit();
        split_node(left, depth + 1);
        split_node(right, depth + 1);
    }

    const TrainingSet& data_;
    const ForestConfig& cfg_;
    std::size_t mtry_;
    std::mt19937_64 rng_;
    std::vector<double> importance_;
    double total_ = 1.0;
};

} // namespace

ScoreList rf_importance(const OmicsMatrix& x, const PhenotypeVector& y, const ForestConfig& forest) {
    if (x.n_subjects() != y.size()) {
        throw DataError("rf_importance: phenotype length does not match the number of subjects");
    }
    if (x.has_missing()) {
        throw DataError("rf_importance requires complete data");
    }
    if (forest.min_leaf == 0 || forest.n_trees == 0) {
        throw ConfigError("rf_importance: min_leaf and n_trees must be positive");
    }
    if (x.n_subjects() < 10) {
        throw DataError("rf_importance needs at least 10 subjects");
    }
    if (x.n_subjects() < forest.min_leaf) {
        throw DataError("rf_importance: fewer subjects than the minimum leaf size");
    }
    const std::size_t n = x.n_subjects();
    const std::size_t p = x.n_features();
    if (p == 0) {
        throw DataError("rf_importance: no features");
    }

    std::vector<std::size_t> row_order(n), col_order(p);
    std::iota(row_order.begin(), row_order.end(), std::size_t{0});
    std::iota(col_order.begin(), col_order.end(), std::size_t{0});
    std::sort(row_order.begin(), row_order.end(),
              [&](std::size_t a, std::size_t b) { return x.subject_ids[a] < x.subject_ids[b]; });
    std::sort(col_order.begin(), col_order.end(),
              [&](std::size_t a, std::size_t b) { return x.feature_names[a] < x.feature_names[b]; });

    TrainingSet data;
    data.classification = y.kind == PhenotypeKind::Categorical;
    data.n_classes = y.n_classes();
    data.x = Matrix(n, p);
    data.target.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
            data.x(r, c) = x.values(row_order[r], col_order[c]);
        }
        data.target[r] = y.values[row_order[r]];
        if (std::isnan(data.target[r])) {
            throw DataError("rf_importance: phenotype has missing values");
        }
    }

    const std::size_t mtry = forest.mtry != 0
                                 ? std::min(forest.mtry, p)
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(double(p)))));

    std::vector<std::vector<double>> per_tree(forest.n_trees);
    parallel_for(forest.n_trees, [&](std::size_t t) {
        TreeGrower grower(data, forest, mtry, forest.seed + t);
        auto imp = grower.grow();
        const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (total > 0.0) {
            for (auto& v : imp) {
                v /= total;
            }
        }
        per_tree[t] = std::move(imp);
    });

    std::vector<double> importance(p, 0.0);
    for (const auto& imp : per_tree) {
        for (std::size_t c = 0; c < p; ++c) {
            importance[c] += imp[c];
        }
    }
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    ScoreList out(p);
    for (std::size_t c = 0; c < p; ++c) {
        const std::size_t original = col_order[c];
        out[original].feature_name = x.feature_names[original];
        if (total > 0.0) {
            out[original].score = importance[c] / total;
        } else {
            out[original].score = 1.0 / static_cast<double>(p);
            out[original].degenerate = true;
        }
    }
    return rank_scores(std::move(out));
}

} // namespace omicsnet
