#ifndef OMICSNET_RUN_HPP
#define OMICSNET_RUN_HPP

#include "omicsnet/community.hpp"
#include "omicsnet/featselect.hpp"
#include "omicsnet/gnn.hpp"
#include "omicsnet/netbuild.hpp"
#include "omicsnet/omics.hpp"
#include "omicsnet/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

/**
 * @file run.hpp
 *
 * @brief Declarative run configuration and the stage runner.
 *
 * A run executes the stages present in its configuration in the fixed order
 * ingest, select, network, cluster, embed, predict, represent. Stage outputs
 * are written to a staging directory inside the output directory and moved
 * into place only after every stage succeeded.
 */

namespace omicsnet {

inline constexpr const char* kFormatVersion = "omicsnet-run/1";
inline constexpr const char* kClinicalModality = "clinical";

struct MatrixInput {
    std::filesystem::path path;
    std::string modality;
    Orientation orientation = Orientation::SubjectsAsRows;
};

/// Explicit input files; anything left empty is taken from an upstream stage of the same run.
struct StageInputs {
    std::vector<MatrixInput> matrices;
    std::optional<std::filesystem::path> clinical;
    std::optional<std::filesystem::path> phenotype;
    PhenotypeKind phenotype_kind = PhenotypeKind::Categorical;
    std::optional<std::filesystem::path> graph;
    std::optional<std::filesystem::path> embedding;
};

struct IngestStage {
    std::vector<MatrixInput> omics;
    std::optional<std::filesystem::path> clinical;
    std::filesystem::path phenotype;
    PhenotypeKind phenotype_kind = PhenotypeKind::Categorical;
    AliquotPolicy aliquots = AliquotPolicy::Average;
    std::optional<IdNormalizer> normalize_ids;
};

enum class SelectMethod { Anova, Correlation, Variance, RandomForest };

struct SelectStage {
    StageInputs inputs;
    SelectMethod method = SelectMethod::Anova;
    /// Features kept per omics modality (modalities with fewer keep all).
    std::size_t top_k = kDefaultTopK;
    ForestConfig forest;
};

enum class NetworkMethod { Knn, Snn, Similarity, Correlation, SoftThreshold };

struct NetworkStage {
    StageInputs inputs;
    NetworkMethod method = NetworkMethod::Knn;
    std::size_t k = kDefaultKnnK;
    SimilarityMetric metric = SimilarityMetric::Cosine;
    KnnSymmetrization mode = KnnSymmetrization::Union;
    CorrelationMethod correlation = CorrelationMethod::Pearson;
    Prune prune;
    std::vector<double> beta_grid = default_beta_grid();
    double target_r2 = 0.8;
    std::size_t n_bins = 10;
};

enum class ClusterMethod { Louvain, Ppr, Hybrid };

struct ClusterStage {
    StageInputs inputs;
    ClusterMethod method = ClusterMethod::Louvain;
    double resolution = 1.0;
    PprOptions ppr;
    /// PPR seed nodes (uniform mass); empty means phenotype-association seeds.
    std::vector<std::string> seed_nodes;
    double mass_fraction = 0.5;
};

struct EmbedStage {
    StageInputs inputs;
    LayerKind layer = LayerKind::Gcn;
    std::vector<std::size_t> hidden{64};
    std::size_t embed_dim = 32;
    std::size_t heads = 1;
    EmbedObjective objective = EmbedObjective::AdjacencyReconstruction;
    double lr = 0.01;
    double momentum = 0.0;
    std::size_t epochs = 200;
};

struct PredictStage {
    StageInputs inputs;
    DpmonConfig dpmon;
    std::optional<TuningGrid> tuning;
};

struct RepresentStage {
    StageInputs inputs;
    RowNormalization normalize = RowNormalization::None;
};

struct RunConfig {
    std::string format_version = kFormatVersion;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "omicsnet_out";
    std::optional<IngestStage> ingest;
    std::optional<SelectStage> select;
    std::optional<NetworkStage> network;
    std::optional<ClusterStage> cluster;
    std::optional<EmbedStage> embed;
    std::optional<PredictStage> predict;
    std::optional<RepresentStage> represent;

    std::vector<std::string> stage_names() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError. Relative
/// paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved configuration; parsing it back yields an equivalent run.
nlohmann::json to_json(const RunConfig& cfg);

/// Default DPMON seeds of a run: ten values derived from the global seed.
std::vector<std::uint64_t> default_predict_seeds(std::uint64_t global_seed);

struct RunSummary {
    /// Artifact paths relative to the output directory, in write order.
    std::vector<std::string> artifacts;
};

/// Executes the configured stages. Progress lines go to `log`.
RunSummary execute_run(const RunConfig& cfg, std::ostream& log);

} // namespace omicsnet

#endif
