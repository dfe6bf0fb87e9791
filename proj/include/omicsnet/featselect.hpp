#ifndef OMICSNET_FEATSELECT_HPP
#define OMICSNET_FEATSELECT_HPP

#include "omicsnet/omics.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace omicsnet {

struct FeatureScore {
    std::string feature_name;
    double score = 0.0;
    std::size_t rank = 0;
    /// Set when the score is a sentinel (zero within-group variance, zero-variance feature, ...).
    bool degenerate = false;
};

using ScoreList = std::vector<FeatureScore>;

/// Sorts by (score desc, name asc) and assigns ranks 1..N. +inf sorts first.
ScoreList rank_scores(ScoreList scores);

ScoreList variance_scores(const OmicsMatrix& x);

/// One-way ANOVA F per feature. Continuous phenotypes are binned into quartiles first.
ScoreList anova_f_scores(const OmicsMatrix& x, const PhenotypeVector& y);

/// |Pearson r| against a continuous outcome.
ScoreList correlation_ranking(const OmicsMatrix& x, const PhenotypeVector& y);

struct ForestConfig {
    std::size_t n_trees = 100;
    /// 0 = unlimited.
    std::size_t max_depth = 0;
    std::size_t min_leaf = 1;
    /// Candidate features per split; 0 = floor(sqrt(p)).
    std::size_t mtry = 0;
    std::uint64_t seed = 0;
};

/// Mean-decrease-in-impurity importance of a CART forest, normalized to sum to 1.
ScoreList rf_importance(const OmicsMatrix& x, const PhenotypeVector& y, const ForestConfig& forest = {});

/// First k names by rank.
/// Default number of features kept per large omics modality.
inline constexpr std::size_t kDefaultTopK = 6000;

std::vector<std::string> top_k(const ScoreList& scores, std::size_t k);

struct OverlapCount {
    /// Indices of the lists taking part in the intersection.
    std::vector<std::size_t> lists;
    std::size_t count = 0;
};

/// Intersection sizes for every pair of lists and, with three or more lists,
/// for all of them jointly.
std::vector<OverlapCount> selection_overlap(std::span<const std::vector<std::string>> lists);

/// Quartile bins (0..3) of a continuous phenotype, as a categorical phenotype.
PhenotypeVector quartile_bins(const PhenotypeVector& y);

/// Phenotype association of one feature: |Pearson r| for continuous outcomes,
/// max over classes of |r| with the one-vs-rest indicator for categorical ones.
double phenotype_association(std::span<const double> feature, const PhenotypeVector& y);

void write_scores_csv(std::ostream& out, const ScoreList& scores);

} // namespace omicsnet

#endif
