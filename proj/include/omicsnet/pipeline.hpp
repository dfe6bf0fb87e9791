#ifndef OMICSNET_PIPELINE_HPP
#define OMICSNET_PIPELINE_HPP

#include "omicsnet/gnn.hpp"
#include "omicsnet/graph.hpp"
#include "omicsnet/omics.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

/**
 * @file pipeline.hpp
 *
 * @brief Network-integrated phenotype prediction and subject representations.
 *
 * The predictor runs GNN feature embedding, per-feature reduction, integration
 * with the subject matrix and a feed-forward classifier as one computation
 * trained end-to-end with cross-entropy.
 */

namespace omicsnet {

struct ClassificationMetrics {
    double accuracy = 0.0;
    double f1_weighted = 0.0;
    double f1_macro = 0.0;
    std::vector<double> per_class_f1;
    /// confusion[true][pred]
    std::vector<std::vector<std::size_t>> confusion;
};

ClassificationMetrics compute_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                      std::size_t n_classes);
/// Recomputes the three headline metrics from a confusion matrix.
ClassificationMetrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

enum class ReductionMode { Mean, Max, Autoencoder };
enum class IntegrationMode { Concatenate, FeatureWeight };

std::string to_string(ReductionMode m);
std::string to_string(IntegrationMode m);
ReductionMode parse_reduction(const std::string& text);
IntegrationMode parse_integration(const std::string& text);

/// Linear d -> 1 -> d autoencoder.
struct BottleneckAutoencoder {
    Matrix w_enc; // d x 1
    Matrix b_enc; // 1 x 1
    Matrix w_dec; // 1 x d
    Matrix b_dec; // 1 x d
    std::vector<double> loss_curve;

    /// Bottleneck activation per row of `e`.
    std::vector<double> encode(const Matrix& e) const;
};

BottleneckAutoencoder train_bottleneck_autoencoder(const Matrix& e, std::uint64_t seed, std::size_t epochs = 2000);

struct ReducedEmbedding {
    /// One scalar per node before normalization.
    std::vector<double> raw;
    /// raw min-max normalized to [0, 1] then shifted by `offset`.
    std::vector<double> weights;
};

ReducedEmbedding reduce_embeddings(const Matrix& e, ReductionMode mode, std::uint64_t seed, double offset = 0.5);

/// x_ij * w_j.
Matrix integrate_feature_weight(const Matrix& x, std::span<const double> weights);
/// [X, X E].
Matrix integrate_concatenate(const Matrix& x, const Matrix& e);

enum class RowNormalization { None, RowUnit };

/// S = X E, optionally with unit-length rows (zero rows stay zero).
Matrix subject_representation(const Matrix& x, const Matrix& e, RowNormalization norm = RowNormalization::None);

/// Name-checked variant: columns of `x` must equal the embedding's nodes in order.
OmicsMatrix subject_representation(const OmicsMatrix& x, const EmbeddingMatrix& e,
                                   RowNormalization norm = RowNormalization::None);

/// Top-2 principal component scores of the rows of `e` (n x 2). Each axis
/// is oriented so its largest-magnitude loading is positive.
Matrix pca_coords(const Matrix& e);

struct DpmonConfig {
    LayerKind gnn_kind = LayerKind::Gcn;
    std::vector<std::size_t> gnn_hidden{64};
    std::size_t embed_dim = 32;
    std::size_t gat_heads = 1;
    ReductionMode reduction = ReductionMode::Mean;
    IntegrationMode integration = IntegrationMode::FeatureWeight;
    double weight_offset = 0.5;
    std::vector<std::size_t> classifier_hidden{128};
    double lr = 0.01;
    std::size_t epochs = 200;
    double train_fraction = 0.70;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    /// Raw clinical covariates (z-scored) appended to the classifier input.
    bool include_clinical = true;
    std::string clinical_modality = "clinical";
    /// Keep the parameters of the epoch with the lowest validation loss.
    bool restore_best_validation = true;

    void validate() const;
    std::string summary() const;
};

struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
};

/// Per-class shuffled split; every class must reach every split.
SplitIndices stratified_split(std::span<const std::size_t> labels, std::size_t n_classes, double train_fraction,
                              double val_fraction, std::uint64_t seed);

struct SeedResult {
    std::uint64_t seed = 0;
    ClassificationMetrics test;
    ClassificationMetrics validation;
    /// Accuracy of always predicting the training-majority class on the test split.
    double majority_rate = 0.0;
    std::size_t best_epoch = 0;
};

struct MetricSummary {
    double mean = 0.0;
    /// Sample standard deviation (0 for a single seed).
    double std = 0.0;
};

struct PredictionReport {
    std::vector<SeedResult> per_seed;
    MetricSummary accuracy, f1_weighted, f1_macro, validation_f1_macro, majority_rate;
    std::vector<std::string> class_names;
    std::string config_summary;
};

MetricSummary summarize(std::span<const double> values);

/// Matrix of the dataset's omics columns named by `nodes`, in that order.
/// Nodes match "<modality>:<feature>" or an unambiguous bare feature name;
/// the clinical modality is never searched.
OmicsMatrix node_matrix(const AlignedDataset& dataset, const std::vector<std::string>& nodes,
                        const std::string& clinical_modality = "clinical");

PredictionReport predict_phenotype(const AlignedDataset& dataset, const FeatureGraph& g, const DpmonConfig& cfg);

/// Explicit value lists; an empty list keeps the base configuration's value.
struct TuningGrid {
    std::vector<LayerKind> gnn_kinds;
    std::vector<std::size_t> embed_dims;
    std::vector<double> lrs;
    std::vector<std::size_t> epochs;
    std::vector<ReductionMode> reductions;
    std::vector<IntegrationMode> integrations;
    /// 0 evaluates every combination; otherwise a seeded random subset of this size.
    std::size_t max_configs = 0;
    std::uint64_t seed = 0;
};

struct LeaderboardEntry {
    DpmonConfig config;
    double validation_f1_macro = 0.0;
    PredictionReport report;
};

struct TuningResult {
    DpmonConfig best;
    std::vector<LeaderboardEntry> leaderboard;
};

/// Candidate configurations in deterministic grid order.
std::vector<DpmonConfig> expand_grid(const DpmonConfig& base, const TuningGrid& grid);

TuningResult tune_hyperparameters(const AlignedDataset& dataset, const FeatureGraph& g, const DpmonConfig& base,
                                  const TuningGrid& grid);

void write_report_csv(std::ostream& out, const PredictionReport& report);
std::string report_summary(const PredictionReport& report);
void write_leaderboard_csv(std::ostream& out, const TuningResult& result);

struct SyntheticCohortConfig {
    std::size_t n_subjects = 200;
    std::size_t n_classes = 3;
    std::vector<std::pair<std::string, std::size_t>> modalities{{"mrna", 20}, {"methylation", 20}, {"mirna", 20}};
    std::size_t n_informative = 10;
    /// Mean shift of an informative feature in its marked class, in noise SDs.
    double effect = 2.0;
    /// Loading of each feature on its module's shared latent factor.
    double module_loading = 0.7;
    std::size_t module_size = 5;
    std::uint64_t seed = 2024;
};

struct SyntheticCohort {
    std::vector<OmicsMatrix> modalities;
    PhenotypeVector phenotype;
    /// Informative features as "<modality>:<feature>".
    std::vector<std::string> informative;
};

/// Planted-signal cohort: balanced classes, class-shifted informative
/// features, all features grouped into latent-factor modules.
SyntheticCohort make_planted_cohort(const SyntheticCohortConfig& cfg = {});

/// Same phenotype with labels permuted by a seeded shuffle.
PhenotypeVector shuffled_labels(const PhenotypeVector& y, std::uint64_t seed);

} // namespace omicsnet

#endif
