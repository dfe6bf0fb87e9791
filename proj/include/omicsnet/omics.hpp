#ifndef OMICSNET_OMICS_HPP
#define OMICSNET_OMICS_HPP

#include "omicsnet/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * @file omics.hpp
 *
 * @brief Loading, validating and aligning tabular multi-omics data.
 *
 * Matrices are always held subjects-as-rows. Missing values are represented
 * by quiet NaN from load time until `align_cohort` drops incomplete subjects.
 */

namespace omicsnet {

enum class Orientation { SubjectsAsRows, FeaturesAsRows };

struct OmicsMatrix {
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;
    std::string modality;
    Matrix values;

    std::size_t n_subjects() const { return values.rows(); }
    std::size_t n_features() const { return values.cols(); }

    bool is_missing(std::size_t subject, std::size_t feature) const;
    bool has_missing() const;
    std::optional<std::size_t> feature_index(const std::string& name) const;

    /// Shape and uniqueness checks. `require_unique_subjects` is false for
    /// freshly loaded matrices that may still hold aliquot duplicates.
    void validate(bool require_unique_subjects = true) const;
};

enum class PhenotypeKind { Categorical, Continuous };

struct PhenotypeVector {
    std::vector<std::string> subject_ids;
    PhenotypeKind kind = PhenotypeKind::Categorical;
    /// Class index (stored as an exact integer value) or a continuous outcome.
    std::vector<double> values;
    /// Categorical only; index -> label text.
    std::vector<std::string> class_names;

    std::size_t size() const { return values.size(); }
    std::size_t n_classes() const { return class_names.size(); }
    std::size_t label(std::size_t i) const { return static_cast<std::size_t>(values[i]); }
    std::vector<std::size_t> labels() const;

    void validate() const;

    /// Builds a categorical phenotype; class names are sorted so indices are
    /// independent of subject order.
    static PhenotypeVector categorical(std::vector<std::string> ids, const std::vector<std::string>& labels);
    static PhenotypeVector continuous(std::vector<std::string> ids, std::vector<double> values);
};

struct AggregatedAliquots {
    std::string subject;
    std::string modality;
    std::size_t rows = 0;
};

struct Provenance {
    /// Subjects absent from at least one input.
    std::vector<std::string> dropped_not_shared;
    /// Subjects with a missing value in some modality or in the phenotype.
    std::vector<std::string> dropped_incomplete;
    std::vector<AggregatedAliquots> aggregated;

    std::string report() const;
};

struct AlignedDataset {
    std::vector<OmicsMatrix> modalities;
    PhenotypeVector phenotype;
    Provenance provenance;

    const OmicsMatrix& modality(const std::string& tag) const;
    const std::vector<std::string>& subject_ids() const { return phenotype.subject_ids; }
};

enum class AliquotPolicy { Average, Error };

/// Keeps the first `keep_fields` delimiter-separated fields of an ID
/// (e.g. keep 3 of "TCGA-AB-1234-01A" -> "TCGA-AB-1234").
std::string normalize_subject_id(const std::string& id, char delimiter, std::size_t keep_fields);

struct IdNormalizer {
    char delimiter = '-';
    std::size_t keep_fields = 3;
};

OmicsMatrix read_omics_csv(std::istream& in, const std::string& modality, Orientation orientation,
                           bool allow_duplicate_subjects = false,
                           const std::optional<IdNormalizer>& normalizer = std::nullopt);
OmicsMatrix load_omics_csv(const std::filesystem::path& path, const std::string& modality, Orientation orientation,
                           bool allow_duplicate_subjects = false,
                           const std::optional<IdNormalizer>& normalizer = std::nullopt);

/// Clinical table (subjects as rows). Numeric columns are kept as is; any
/// column holding non-numeric text is one-hot encoded into indicator columns
/// named "<column>=<level>" (levels sorted). Empty cells stay missing.
OmicsMatrix read_clinical_csv(std::istream& in, const std::string& modality = "clinical",
                              const std::optional<IdNormalizer>& normalizer = std::nullopt);
OmicsMatrix load_clinical_csv(const std::filesystem::path& path, const std::string& modality = "clinical",
                              const std::optional<IdNormalizer>& normalizer = std::nullopt);

/// Writes subjects-as-rows CSV; missing values become empty cells.
void write_omics_csv(std::ostream& out, const OmicsMatrix& m);
void save_omics_csv(const std::filesystem::path& path, const OmicsMatrix& m);

/// Two-column CSV: subject,<name>. Empty cells are missing.
PhenotypeVector read_phenotype_csv(std::istream& in, PhenotypeKind kind,
                                   const std::optional<IdNormalizer>& normalizer = std::nullopt);
PhenotypeVector load_phenotype_csv(const std::filesystem::path& path, PhenotypeKind kind,
                                   const std::optional<IdNormalizer>& normalizer = std::nullopt);
void write_phenotype_csv(std::ostream& out, const PhenotypeVector& y);
void save_phenotype_csv(const std::filesystem::path& path, const PhenotypeVector& y);

AlignedDataset align_cohort(std::span<const OmicsMatrix> matrices, const PhenotypeVector& phenotype,
                            AliquotPolicy policy);

/// Column-wise concatenation; names become "<modality>:<feature>".
OmicsMatrix concat_modalities(const AlignedDataset& dataset, std::span<const std::string> include);

/// Copy of `m` restricted to the named columns, in the given order.
OmicsMatrix select_features(const OmicsMatrix& m, std::span<const std::string> names);

} // namespace omicsnet

#endif
