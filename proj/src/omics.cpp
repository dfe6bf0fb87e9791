#include "omicsnet/omics.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace omicsnet {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

template <typename Container>
std::optional<std::string> first_duplicate(const Container& names) {
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) {
            return n;
        }
    }
    return std::nullopt;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

std::string apply_normalizer(const std::string& id, const std::optional<IdNormalizer>& normalizer) {
    return normalizer ? normalize_subject_id(id, normalizer->delimiter, normalizer->keep_fields) : id;
}

} // namespace

bool OmicsMatrix::is_missing(std::size_t subject, std::size_t feature) const {
    return std::isnan(values(subject, feature));
}

bool OmicsMatrix::has_missing() const {
    return std::any_of(values.data().begin(), values.data().end(), [](double v) { return std::isnan(v); });
}

std::optional<std::size_t> OmicsMatrix::feature_index(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - feature_names.begin());
}

void OmicsMatrix::validate(bool require_unique_subjects) const {
    if (values.rows() != subject_ids.size() || values.cols() != feature_names.size()) {
        throw DataError("omics matrix '" + modality + "': shape does not match subject/feature labels");
    }
    if (auto dup = first_duplicate(feature_names)) {
        throw DataError("omics matrix '" + modality + "': duplicate feature name '" + *dup + "'");
    }
    if (require_unique_subjects) {
        if (auto dup = first_duplicate(subject_ids)) {
            throw DataError("omics matrix '" + modality + "': duplicate subject ID '" + *dup + "'");
        }
    }
    for (double v : values.data()) {
        if (std::isinf(v)) {
            throw DataError("omics matrix '" + modality + "': infinite value");
        }
    }
}

std::vector<std::size_t> PhenotypeVector::labels() const {
    std::vector<std::size_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = label(i);
    }
    return out;
}

void PhenotypeVector::validate() const {
    if (values.size() != subject_ids.size()) {
        throw DataError("phenotype: value count does not match subject count");
    }
    if (kind == PhenotypeKind::Categorical) {
        for (double v : values) {
            if (std::isnan(v)) {
                continue;
            }
            if (v < 0 || v >= static_cast<double>(class_names.size()) || v != std::floor(v)) {
                throw DataError("phenotype: class index out of range");
            }
        }
    }
}

PhenotypeVector PhenotypeVector::categorical(std::vector<std::string> ids, const std::vector<std::string>& labels) {
    if (ids.size() != labels.size()) {
        throw DataError("phenotype: label count does not match subject count");
    }
    std::set<std::string> distinct;
    for (const auto& l : labels) {
        if (!l.empty()) {
            distinct.insert(l);
        }
    }
    PhenotypeVector y;
    y.subject_ids = std::move(ids);
    y.kind = PhenotypeKind::Categorical;
    y.class_names.assign(distinct.begin(), distinct.end());
    y.values.reserve(labels.size());
    for (const auto& l : labels) {
        if (l.empty()) {
            y.values.push_back(kMissing);
            continue;
        }
        const auto idx = std::lower_bound(y.class_names.begin(), y.class_names.end(), l) - y.class_names.begin();
        y.values.push_back(static_cast<double>(idx));
    }
    return y;
}

PhenotypeVector PhenotypeVector::continuous(std::vector<std::string> ids, std::vector<double> values) {
    PhenotypeVector y;
    y.subject_ids = std::move(ids);
    y.kind = PhenotypeKind::Continuous;
    y.values = std::move(values);
    y.validate();
    return y;
}

std::string Provenance::report() const {
    std::ostringstream os;
    os << "dropped_not_shared " << dropped_not_shared.size() << "\n";
    for (const auto& s : dropped_not_shared) {
        os << "  " << s << "\n";
    }
    os << "dropped_incomplete " << dropped_incomplete.size() << "\n";
    for (const auto& s : dropped_incomplete) {
        os << "  " << s << "\n";
    }
    os << "aggregated_aliquots " << aggregated.size() << "\n";
    for (const auto& a : aggregated) {
        os << "  " << a.subject << " " << a.modality << " rows=" << a.rows << "\n";
    }
    return os.str();
}

const OmicsMatrix& AlignedDataset::modality(const std::string& tag) const {
    for (const auto& m : modalities) {
        if (m.modality == tag) {
            return m;
        }
    }
    throw DataError("dataset has no modality '" + tag + "'");
}

std::string normalize_subject_id(const std::string& id, char delimiter, std::size_t keep_fields) {
    if (keep_fields == 0) {
        throw ConfigError("ID normalizer must keep at least one field");
    }
    std::size_t seen = 0;
    for (std::size_t i = 0; i < id.size(); ++i) {
        if (id[i] == delimiter && ++seen == keep_fields) {
            return id.substr(0, i);
        }
    }
    return id;
}

OmicsMatrix read_omics_csv(std::istream& in, const std::string& modality, Orientation orientation,
                           bool allow_duplicate_subjects, const std::optional<IdNormalizer>& normalizer) {
    const auto lines = read_lines(in);
    if (lines.empty()) {
        throw DataError("omics CSV '" + modality + "' is empty");
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2) {
        throw DataError("omics CSV '" + modality + "': header needs a name column and at least one data column");
    }
    std::vector<std::string> col_names(header.begin() + 1, header.end());
    std::vector<std::string> row_names;
    std::vector<double> body;
    row_names.reserve(lines.size() - 1);
    body.reserve((lines.size() - 1) * col_names.size());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_csv_line(lines[r]);
        if (fields.size() != header.size()) {
            throw DataError("omics CSV '" + modality + "': row " + std::to_string(r + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
        }
        row_names.push_back(trim(fields[0]));
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (trim(fields[c]).empty()) {
                body.push_back(kMissing);
                continue;
            }
            const auto v = parse_double(fields[c]);
            if (!v) {
                throw DataError("omics CSV '" + modality + "': non-numeric cell '" + fields[c] + "' at row " +
                                std::to_string(r + 1) + ", column " + std::to_string(c + 1));
            }
            body.push_back(*v);
        }
    }

    OmicsMatrix m;
    m.modality = modality;
    Matrix raw(row_names.size(), col_names.size(), std::move(body));
    if (orientation == Orientation::SubjectsAsRows) {
        m.subject_ids = std::move(row_names);
        m.feature_names = std::move(col_names);
        m.values = std::move(raw);
    } else {
        m.subject_ids = std::move(col_names);
        m.feature_names = std::move(row_names);
        m.values = transpose(raw);
    }
    for (auto& id : m.subject_ids) {
        id = apply_normalizer(trim(id), normalizer);
    }
    for (auto& f : m.feature_names) {
        f = trim(f);
    }
    m.validate(!allow_duplicate_subjects);
    return m;
}

OmicsMatrix load_omics_csv(const std::filesystem::path& path, const std::string& modality, Orientation orientation,
                           bool allow_duplicate_subjects, const std::optional<IdNormalizer>& normalizer) {
    auto in = open_input(path);
    return read_omics_csv(in, modality, orientation, allow_duplicate_subjects, normalizer);
}

OmicsMatrix read_clinical_csv(std::istream& in, const std::string& modality,
                              const std::optional<IdNormalizer>& normalizer) {
    const auto lines = read_lines(in);
    if (lines.empty()) {
        throw DataError("clinical CSV is empty");
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2) {
        throw DataError("clinical CSV: header needs a subject column and at least one variable");
    }
    std::vector<std::vector<std::string>> cells;
    OmicsMatrix m;
    m.modality = modality;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_csv_line(lines[r]);
        if (fields.size() != header.size()) {
            throw DataError("clinical CSV: row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));
        }
        m.subject_ids.push_back(apply_normalizer(trim(fields[0]), normalizer));
        for (auto& f : fields) {
            f = trim(f);
        }
        cells.push_back(std::move(fields));
    }

    std::vector<std::vector<double>> columns;
    for (std::size_t c = 1; c < header.size(); ++c) {
        bool numeric = true;
        std::set<std::string> levels;
        for (const auto& row : cells) {
            if (row[c].empty()) {
                continue;
            }
            if (!parse_double(row[c])) {
                numeric = false;
            }
            levels.insert(row[c]);
        }
        const std::string name = trim(header[c]);
        if (numeric) {
            std::vector<double> col;
            for (const auto& row : cells) {
                col.push_back(row[c].empty() ? kMissing : *parse_double(row[c]));
            }
            m.feature_names.push_back(name);
            columns.push_back(std::move(col));
            continue;
        }
        for (const auto& level : levels) {
            std::vector<double> col;
            for (const auto& row : cells) {
                col.push_back(row[c].empty() ? kMissing : (row[c] == level ? 1.0 : 0.0));
            }
            m.feature_names.push_back(name + "=" + level);
            columns.push_back(std::move(col));
        }
    }
    m.values = Matrix(m.subject_ids.size(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        for (std::size_t r = 0; r < m.subject_ids.size(); ++r) {
            m.values(r, j) = columns[j][r];
        }
    }
    m.validate(false);
    return m;
}

OmicsMatrix load_clinical_csv(const std::filesystem::path& path, const std::string& modality,
                              const std::optional<IdNormalizer>& normalizer) {
    auto in = open_input(path);
    return read_clinical_csv(in, modality, normalizer);
}

void write_omics_csv(std::ostream& out, const OmicsMatrix& m) {
    out << "subject";
    for (const auto& f : m.feature_names) {
        out << ',' << f;
    }
    out << '\n';
    for (std::size_t r = 0; r < m.n_subjects(); ++r) {
        out << m.subject_ids[r];
        for (std::size_t c = 0; c < m.n_features(); ++c) {
            out << ',';
            if (!m.is_missing(r, c)) {
                out << format_double(m.values(r, c));
            }
        }
        out << '\n';
    }
}

void save_omics_csv(const std::filesystem::path& path, const OmicsMatrix& m) {
    auto out = open_output(path);
    write_omics_csv(out, m);
}

PhenotypeVector read_phenotype_csv(std::istream& in, PhenotypeKind kind,
                                   const std::optional<IdNormalizer>& normalizer) {
    const auto lines = read_lines(in);
    if (lines.empty()) {
        throw DataError("phenotype CSV is empty");
    }
    std::vector<std::string> ids;
    std::vector<std::string> raw;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_csv_line(lines[r]);
        if (fields.size() != 2) {
            throw DataError("phenotype CSV: row " + std::to_string(r + 1) + " must have 2 fields");
        }
        ids.push_back(apply_normalizer(trim(fields[0]), normalizer));
        raw.push_back(trim(fields[1]));
    }
    if (kind == PhenotypeKind::Categorical) {
        auto y = PhenotypeVector::categorical(std::move(ids), raw);
        y.validate();
        return y;
    }
    std::vector<double> values;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        if (raw[r].empty()) {
            values.push_back(kMissing);
            continue;
        }
        const auto v = parse_double(raw[r]);
        if (!v) {
            throw DataError("phenotype CSV: non-numeric value '" + raw[r] + "' at row " + std::to_string(r + 2));
        }
        values.push_back(*v);
    }
    return PhenotypeVector::continuous(std::move(ids), std::move(values));
}

PhenotypeVector load_phenotype_csv(const std::filesystem::path& path, PhenotypeKind kind,
                                   const std::optional<IdNormalizer>& normalizer) {
    auto in = open_input(path);
    return read_phenotype_csv(in, kind, normalizer);
}

void write_phenotype_csv(std::ostream& out, const PhenotypeVector& y) {
    out << "subject,phenotype\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
        out << y.subject_ids[i] << ',';
        if (!std::isnan(y.values[i])) {
            out << (y.kind == PhenotypeKind::Categorical ? y.class_names[y.label(i)] : format_double(y.values[i]));
        }
        out << '\n';
    }
}

void save_phenotype_csv(const std::filesystem::path& path, const PhenotypeVector& y) {
    auto out = open_output(path);
    write_phenotype_csv(out, y);
}

namespace {

/// Collapses a matrix to one row per subject. Aliquot values are summed in
/// sorted order so the result does not depend on input row order.
std::map<std::string, std::vector<double>> collapse_rows(const OmicsMatrix& m, AliquotPolicy policy,
                                                         std::vector<AggregatedAliquots>& aggregated) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < m.n_subjects(); ++r) {
        groups[m.subject_ids[r]].push_back(r);
    }
    std::map<std::string, std::vector<double>> out;
    std::vector<double> column_values;
    for (const auto& [subject, rows] : groups) {
        std::vector<double> row(m.n_features());
        if (rows.size() == 1) {
            auto src = m.values.row(rows[0]);
            row.assign(src.begin(), src.end());
        } else {
            if (policy == AliquotPolicy::Error) {
                throw DataError("subject '" + subject + "' has " + std::to_string(rows.size()) +
                                " rows in modality '" + m.modality + "' and the aliquot policy is 'error'");
            }
            for (std::size_t c = 0; c < m.n_features(); ++c) {
                column_values.clear();
                for (std::size_t r : rows) {
                    if (!m.is_missing(r, c)) {
                        column_values.push_back(m.values(r, c));
                    }
                }
                if (column_values.empty()) {
                    row[c] = kMissing;
                    continue;
                }
                std::sort(column_values.begin(), column_values.end());
                double s = 0.0;
                for (double v : column_values) {
                    s += v;
                }
                row[c] = s / static_cast<double>(column_values.size());
            }
            aggregated.push_back({subject, m.modality, rows.size()});
        }
        out.emplace(subject, std::move(row));
    }
    return out;
}

} // namespace

AlignedDataset align_cohort(std::span<const OmicsMatrix> matrices, const PhenotypeVector& phenotype,
                            AliquotPolicy policy) {
    if (matrices.empty()) {
        throw DataError("align_cohort: at least one omics matrix is required");
    }
    if (phenotype.size() == 0) {
        throw DataError("align_cohort: phenotype is empty");
    }
    phenotype.validate();
    for (const auto& m : matrices) {
        m.validate(false);
    }
    {
        std::set<std::string> tags;
        for (const auto& m : matrices) {
            if (!tags.insert(m.modality).second) {
                throw DataError("align_cohort: modality '" + m.modality + "' given twice");
            }
        }
    }

    Provenance prov;
    std::vector<std::map<std::string, std::vector<double>>> collapsed;
    collapsed.reserve(matrices.size());
    for (const auto& m : matrices) {
        collapsed.push_back(collapse_rows(m, policy, prov.aggregated));
    }

    std::map<std::string, double> pheno;
    for (std::size_t i = 0; i < phenotype.size(); ++i) {
        const auto& id = phenotype.subject_ids[i];
        const double v = phenotype.values[i];
        auto [it, inserted] = pheno.emplace(id, v);
        if (!inserted) {
            const bool same = (std::isnan(it->second) && std::isnan(v)) || it->second == v;
            if (!same) {
                throw DataError("phenotype lists subject '" + id + "' twice with different values");
            }
        }
    }

    std::set<std::string> all_subjects;
    for (const auto& c : collapsed) {
        for (const auto& [id, _] : c) {
            all_subjects.insert(id);
        }
    }
    for (const auto& [id, _] : pheno) {
        all_subjects.insert(id);
    }

    std::vector<std::string> kept;
    for (const auto& id : all_subjects) {
        bool shared = pheno.count(id) > 0;
        for (const auto& c : collapsed) {
            shared = shared && c.count(id) > 0;
        }
        if (!shared) {
            prov.dropped_not_shared.push_back(id);
            continue;
        }
        bool complete = !std::isnan(pheno.at(id));
        for (const auto& c : collapsed) {
            const auto& row = c.at(id);
            complete = complete && std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); });
        }
        if (!complete) {
            prov.dropped_incomplete.push_back(id);
            continue;
        }
        kept.push_back(id);
    }
    if (kept.empty()) {
        throw DataError("align_cohort: no subject is present and complete in every input");
    }

    AlignedDataset ds;
    ds.provenance = std::move(prov);
    for (std::size_t k = 0; k < matrices.size(); ++k) {
        OmicsMatrix m;
        m.modality = matrices[k].modality;
        m.feature_names = matrices[k].feature_names;
        m.subject_ids = kept;
        m.values = Matrix(kept.size(), m.feature_names.size());
        for (std::size_t r = 0; r < kept.size(); ++r) {
            const auto& row = collapsed[k].at(kept[r]);
            std::copy(row.begin(), row.end(), m.values.row(r).begin());
        }
        ds.modalities.push_back(std::move(m));
    }
    ds.phenotype.subject_ids = kept;
    ds.phenotype.kind = phenotype.kind;
    ds.phenotype.class_names = phenotype.class_names;
    for (const auto& id : kept) {
        ds.phenotype.values.push_back(pheno.at(id));
    }
    return ds;
}

OmicsMatrix concat_modalities(const AlignedDataset& dataset, std::span<const std::string> include) {
    if (include.empty()) {
        throw DataError("concat_modalities: no modality requested");
    }
    OmicsMatrix out;
    out.subject_ids = dataset.subject_ids();
    std::vector<const OmicsMatrix*> parts;
    std::size_t total = 0;
    for (const auto& tag : include) {
        parts.push_back(&dataset.modality(tag));
        total += parts.back()->n_features();
        out.modality += (out.modality.empty() ? "" : "+") + tag;
    }
    out.values = Matrix(out.subject_ids.size(), total);
    std::size_t offset = 0;
    for (const auto* p : parts) {
        for (const auto& f : p->feature_names) {
            out.feature_names.push_back(p->modality + ":" + f);
        }
        for (std::size_t r = 0; r < p->n_subjects(); ++r) {
            auto src = p->values.row(r);
            std::copy(src.begin(), src.end(), out.values.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
        }
        offset += p->n_features();
    }
    if (auto dup = first_duplicate(out.feature_names)) {
        throw DataError("concat_modalities: feature name collision '" + *dup + "'");
    }
    return out;
}

OmicsMatrix select_features(const OmicsMatrix& m, std::span<const std::string> names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < m.n_features(); ++c) {
        index.emplace(m.feature_names[c], c);
    }
    OmicsMatrix out;
    out.modality = m.modality;
    out.subject_ids = m.subject_ids;
    out.feature_names.assign(names.begin(), names.end());
    out.values = Matrix(m.n_subjects(), names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto it = index.find(names[j]);
        if (it == index.end()) {
            throw DataError("feature '" + names[j] + "' not found in modality '" + m.modality + "'");
        }
        for (std::size_t r = 0; r < m.n_subjects(); ++r) {
            out.values(r, j) = m.values(r, it->second);
        }
    }
    return out;
}

} // namespace omicsnet
