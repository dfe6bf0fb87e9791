#include "omicsnet/featselect.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/parallel.hpp"
#include "omicsnet/stats.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace omicsnet {

namespace {

void check_aligned(const OmicsMatrix& x, const PhenotypeVector& y) {
    if (x.n_subjects() != y.size()) {
        throw DataError("phenotype length does not match the number of subjects");
    }
    if (x.has_missing() || std::any_of(y.values.begin(), y.values.end(), [](double v) { return std::isnan(v); })) {
        throw DataError("feature selection requires complete data; align the cohort first");
    }
}

} // namespace

ScoreList rank_scores(ScoreList scores) {
    std::sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.feature_name < b.feature_name;
    });
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i].rank = i + 1;
    }
    return scores;
}

ScoreList variance_scores(const OmicsMatrix& x) {
    if (x.n_subjects() < 2) {
        throw DataError("variance_scores needs at least two subjects");
    }
    if (x.has_missing()) {
        throw DataError("variance_scores requires complete data");
    }
    ScoreList out(x.n_features());
    parallel_for(x.n_features(), [&](std::size_t c) {
        const auto col = x.values.col(c);
        out[c] = {x.feature_names[c], stats::variance(col), 0, false};
    });
    return rank_scores(std::move(out));
}

PhenotypeVector quartile_bins(const PhenotypeVector& y) {
    if (y.kind != PhenotypeKind::Continuous) {
        throw DataError("quartile_bins expects a continuous phenotype");
    }
    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (y.values[a] != y.values[b]) {
            return y.values[a] < y.values[b];
        }
        return y.subject_ids[a] < y.subject_ids[b];
    });
    // equal values always share a bin: the bin of a value is set by its first position
    std::vector<std::string> labels(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && y.values[order[j + 1]] == y.values[order[i]]) {
            ++j;
        }
        const std::size_t bin = std::min<std::size_t>(3, (4 * i) / n);
        for (std::size_t t = i; t <= j; ++t) {
            labels[order[t]] = "Q" + std::to_string(bin + 1);
        }
        i = j + 1;
    }
    return PhenotypeVector::categorical(y.subject_ids, labels);
}

ScoreList anova_f_scores(const OmicsMatrix& x, const PhenotypeVector& y_in) {
    check_aligned(x, y_in);
    const PhenotypeVector y = y_in.kind == PhenotypeKind::Continuous ? quartile_bins(y_in) : y_in;
    const std::size_t n = y.size();
    const std::size_t k = y.n_classes();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[y.label(i)];
    }
    for (std::size_t g = 0; g < k; ++g) {
        if (counts[g] == 0) {
            throw DataError("anova_f_scores: group '" + y.class_names[g] + "' has no subjects");
        }
    }
    if (k < 2) {
        throw DataError("anova_f_scores needs at least two groups");
    }
    if (n <= k) {
        throw DataError("anova_f_scores needs more subjects than groups");
    }
    const double df_between = static_cast<double>(k - 1);
    const double df_within = static_cast<double>(n - k);

    ScoreList out(x.n_features());
    parallel_for(x.n_features(), [&](std::size_t c) {
        std::vector<double> sums(k, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sums[y.label(i)] += x.values(i, c);
            total += x.values(i, c);
        }
        const double grand = total / static_cast<double>(n);
        std::vector<double> means(k);
        double ssb = 0.0;
        for (std::size_t g = 0; g < k; ++g) {
            means[g] = sums[g] / static_cast<double>(counts[g]);
            ssb += static_cast<double>(counts[g]) * (means[g] - grand) * (means[g] - grand);
        }
        double ssw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x.values(i, c) - means[y.label(i)];
            ssw += d * d;
        }
        FeatureScore s{x.feature_names[c], 0.0, 0, false};
        if (ssw == 0.0) {
            s.score = std::numeric_limits<double>::infinity();
            s.degenerate = true;
        } else {
            s.score = (ssb / df_between) / (ssw / df_within);
        }
        out[c] = s;
    });
    return rank_scores(std::move(out));
}

ScoreList correlation_ranking(const OmicsMatrix& x, const PhenotypeVector& y) {
    check_aligned(x, y);
    if (y.kind != PhenotypeKind::Continuous) {
        throw DataError("correlation_ranking expects a continuous phenotype");
    }
    if (y.size() < 2 || stats::variance(y.values) == 0.0) {
        throw DataError("correlation_ranking: phenotype has zero variance");
    }
    ScoreList out(x.n_features());
    parallel_for(x.n_features(), [&](std::size_t c) {
        const auto col = x.values.col(c);
        const bool flat = std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
        out[c] = {x.feature_names[c], flat ? 0.0 : std::abs(stats::pearson(col, y.values)), 0, flat};
    });
    return rank_scores(std::move(out));
}

std::vector<std::string> top_k(const ScoreList& scores, std::size_t k) {
    if (k == 0) {
        throw DataError("top_k: k must be positive");
    }
    if (k > scores.size()) {
        throw DataError("top_k: k = " + std::to_string(k) + " exceeds the " + std::to_string(scores.size()) +
                        " scored features");
    }
    const ScoreList ranked = rank_scores(scores);
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(ranked[i].feature_name);
    }
    return out;
}

std::vector<OverlapCount> selection_overlap(std::span<const std::vector<std::string>> lists) {
    std::vector<std::unordered_set<std::string>> sets;
    sets.reserve(lists.size());
    for (const auto& l : lists) {
        sets.emplace_back(l.begin(), l.end());
    }
    auto count_all = [&](const std::vector<std::size_t>& members) {
        std::size_t count = 0;
        for (const auto& name : sets[members[0]]) {
            bool in_all = true;
            for (std::size_t m = 1; m < members.size() && in_all; ++m) {
                in_all = sets[members[m]].count(name) > 0;
            }
            count += in_all ? 1 : 0;
        }
        return count;
    };
    std::vector<OverlapCount> out;
    for (std::size_t a = 0; a < sets.size(); ++a) {
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
            OverlapCount o{{a, b}, 0};
            o.count = count_all(o.lists);
            out.push_back(std::move(o));
        }
    }
    if (sets.size() >= 3) {
        OverlapCount o;
        o.lists.resize(sets.size());
        std::iota(o.lists.begin(), o.lists.end(), std::size_t{0});
        o.count = count_all(o.lists);
        out.push_back(std::move(o));
    }
    return out;
}

double phenotype_association(std::span<const double> feature, const PhenotypeVector& y) {
    if (feature.size() != y.size()) {
        throw DataError("phenotype_association: length mismatch");
    }
    if (y.kind == PhenotypeKind::Continuous) {
        return std::abs(stats::pearson(feature, y.values));
    }
    double best = 0.0;
    std::vector<double> indicator(y.size());
    const std::size_t classes = y.n_classes() == 2 ? 1 : y.n_classes();
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            indicator[i] = y.label(i) == c ? 1.0 : 0.0;
        }
        best = std::max(best, std::abs(stats::pearson(feature, indicator)));
    }
    return best;
}

void write_scores_csv(std::ostream& out, const ScoreList& scores) {
    out << "feature,score,rank,flag\n";
    for (const auto& s : scores) {
        out << s.feature_name << ',' << (std::isinf(s.score) ? std::string("inf") : format_double(s.score)) << ','
            << s.rank << ',' << (s.degenerate ? "degenerate" : "") << '\n';
    }
}

} // namespace omicsnet
