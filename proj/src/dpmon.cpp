#include "omicsnet/autodiff.hpp"
#include "omicsnet/errors.hpp"
#include "omicsnet/parallel.hpp"
#include "omicsnet/pipeline.hpp"
#include "omicsnet/seeding.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace omicsnet {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ";" : "") + std::to_string(v[i]);
    }
    return s;
}

} // namespace

void DpmonConfig::validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError("predict: " + msg); };
    for (double f : {train_fraction, val_fraction, test_fraction}) {
        if (!(f > 0.0 && f < 1.0)) {
            bad("split fractions must lie in (0, 1)");
        }
    }
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
        bad("split fractions must sum to 1");
    }
    if (embed_dim == 0) bad("embed_dim must be positive");
    if (std::any_of(gnn_hidden.begin(), gnn_hidden.end(), [](std::size_t h) { return h == 0; })) {
        bad("hidden GNN sizes must be positive");
    }
    if (std::any_of(classifier_hidden.begin(), classifier_hidden.end(), [](std::size_t h) { return h == 0; })) {
        bad("classifier hidden sizes must be positive");
    }
    if (gat_heads == 0) bad("gat_heads must be positive");
    if (!(lr >= 0.0) || !std::isfinite(lr)) bad("lr must be a finite non-negative number");
    if (epochs == 0) bad("epochs must be positive");
    if (seeds.empty()) bad("at least one seed is required");
    if (!(weight_offset >= 0.0) || !std::isfinite(weight_offset)) bad("weight_offset must be finite and >= 0");
}

std::string DpmonConfig::summary() const {
    std::ostringstream s;
    s << "gnn=" << to_string(gnn_kind) << " hidden=" << join_sizes(gnn_hidden) << " embed_dim=" << embed_dim
      << " heads=" << gat_heads << " reduction=" << to_string(reduction)
      << " integration=" << to_string(integration) << " offset=" << format_double(weight_offset)
      << " classifier=" << join_sizes(classifier_hidden) << " lr=" << format_double(lr) << " epochs=" << epochs
      << " split=" << format_double(train_fraction) << "/" << format_double(val_fraction) << "/"
      << format_double(test_fraction) << " clinical=" << (include_clinical ? "yes" : "no")
      << " restore_best=" << (restore_best_validation ? "yes" : "no") << " seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        s << (i ? ";" : "") << seeds[i];
    }
    return s.str();
}

SplitIndices stratified_split(std::span<const std::size_t> labels, std::size_t n_classes, double train_fraction,
                              double val_fraction, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) {
            throw DataError("stratified_split: label out of range");
        }
        by_class[labels[i]].push_back(i);
    }
    std::mt19937_64 rng(seed);
    SplitIndices out;
    const double test_fraction = 1.0 - train_fraction - val_fraction;
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        const double n = static_cast<double>(idx.size());
        const auto n_val = static_cast<std::size_t>(std::llround(n * val_fraction));
        const auto n_test = static_cast<std::size_t>(std::llround(n * test_fraction));
        if (n_val == 0 || n_test == 0 || n_val + n_test >= idx.size()) {
            throw DataError("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                            " subjects, too few to appear in every split; use a different split seed or "
                            "fractions, or more subjects");
        }
        auto it = idx.begin();
        out.validation.insert(out.validation.end(), it, it + static_cast<std::ptrdiff_t>(n_val));
        it += static_cast<std::ptrdiff_t>(n_val);
        out.test.insert(out.test.end(), it, it + static_cast<std::ptrdiff_t>(n_test));
        it += static_cast<std::ptrdiff_t>(n_test);
        out.train.insert(out.train.end(), it, idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

struct Inputs {
    Matrix x; // subjects x graph nodes, raw
    std::optional<Matrix> clinical;
    std::vector<std::size_t> labels;
    std::size_t n_classes = 0;
    std::vector<std::string> class_names;
};

} // namespace

OmicsMatrix node_matrix(const AlignedDataset& dataset, const std::vector<std::string>& nodes,
                        const std::string& clinical_modality) {
    std::vector<std::string> tags;
    for (const auto& m : dataset.modalities) {
        if (m.modality != clinical_modality) {
            tags.push_back(m.modality);
        }
    }
    if (tags.empty()) {
        throw DataError("no omics modality besides '" + clinical_modality + "'");
    }
    const OmicsMatrix all = concat_modalities(dataset, tags);
    auto bare = [](const std::string& name) { return name.substr(name.find(':') + 1); };
    std::unordered_map<std::string, std::size_t> index;
    std::unordered_map<std::string, std::size_t> bare_count;
    for (std::size_t c = 0; c < all.n_features(); ++c) {
        index.emplace(all.feature_names[c], c);
        ++bare_count[bare(all.feature_names[c])];
    }
    for (std::size_t c = 0; c < all.n_features(); ++c) {
        if (bare_count[bare(all.feature_names[c])] == 1) {
            index.emplace(bare(all.feature_names[c]), c);
        }
    }
    OmicsMatrix out;
    out.modality = all.modality;
    out.subject_ids = all.subject_ids;
    out.feature_names = nodes;
    out.values = Matrix(all.n_subjects(), nodes.size());
    for (std::size_t v = 0; v < nodes.size(); ++v) {
        auto it = index.find(nodes[v]);
        if (it == index.end()) {
            throw DataError("node '" + nodes[v] + "' is not a feature of the dataset");
        }
        for (std::size_t r = 0; r < all.n_subjects(); ++r) {
            out.values(r, v) = all.values(r, it->second);
        }
    }
    return out;
}

namespace {

Inputs gather_inputs(const AlignedDataset& dataset, const FeatureGraph& g, const DpmonConfig& cfg) {
    const auto& y = dataset.phenotype;
    if (y.kind != PhenotypeKind::Categorical) {
        throw DataError("predict: the phenotype must be categorical");
    }
    if (y.n_classes() < 2) {
        throw DataError("predict: the phenotype needs at least two classes");
    }
    Inputs in;
    in.x = node_matrix(dataset, g.node_names(), cfg.clinical_modality).values;
    if (cfg.include_clinical) {
        for (const auto& m : dataset.modalities) {
            if (m.modality == cfg.clinical_modality && m.n_features() > 0) {
                in.clinical = m.values;
            }
        }
    }
    in.labels = y.labels();
    in.n_classes = y.n_classes();
    in.class_names = y.class_names;
    return in;
}

// column z-score using training rows (sample std; constant columns only centred)
Matrix standardize(const Matrix& x, std::span<const std::size_t> train) {
    Matrix out = x;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double mu = 0.0;
        for (std::size_t r : train) {
            mu += x(r, j);
        }
        mu /= static_cast<double>(train.size());
        double ss = 0.0;
        for (std::size_t r : train) {
            ss += (x(r, j) - mu) * (x(r, j) - mu);
        }
        const double sd = train.size() > 1 ? std::sqrt(ss / static_cast<double>(train.size() - 1)) : 0.0;
        const double inv = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out(r, j) = (x(r, j) - mu) * inv;
        }
    }
    return out;
}

Matrix take_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(x.row(rows[i]).begin(), x.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

std::vector<std::size_t> take(std::span<const std::size_t> v, std::span<const std::size_t> rows) {
    std::vector<std::size_t> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        out.push_back(v[r]);
    }
    return out;
}

std::vector<std::size_t> argmax_rows(const Matrix& logits) {
    std::vector<std::size_t> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

struct Dense {
    ad::Tensor w, b;
};

class JointModel {
public:
    JointModel(const DpmonConfig& cfg, const GraphOperators& ops, Matrix attrs, std::size_t x_cols,
               std::size_t clin_cols, std::size_t n_classes, std::uint64_t seed)
        : cfg_(cfg), ops_(ops), attrs_(ad::Tensor::constant(std::move(attrs))) {
        encoder_ = GnnEncoder(make_stack(cfg.gnn_kind, attrs_.cols(), cfg.gnn_hidden, cfg.embed_dim, cfg.gat_heads),
                              mix64(seed ^ 0x656e636f646572ULL));
        if (cfg.integration == IntegrationMode::FeatureWeight && cfg.reduction == ReductionMode::Autoencoder) {
            const Matrix e0 = encoder_.forward(attrs_, ops_).value();
            auto ae = train_bottleneck_autoencoder(e0, mix64(seed ^ 0x6175746fULL));
            ae_w_ = ad::Tensor::constant(ae.w_enc);
            ae_b_ = ad::Tensor::constant(ae.b_enc);
        }
        std::size_t in_dim = x_cols + clin_cols;
        if (cfg.integration == IntegrationMode::Concatenate) {
            in_dim += encoder_.out_dim();
        }
        std::mt19937_64 rng(mix64(seed ^ 0x636c617373ULL));
        for (std::size_t h : cfg.classifier_hidden) {
            layers_.push_back({ad::Tensor::parameter(glorot_uniform(in_dim, h, rng)),
                               ad::Tensor::parameter(Matrix(1, h))});
            in_dim = h;
        }
        layers_.push_back({ad::Tensor::parameter(glorot_uniform(in_dim, n_classes, rng)),
                           ad::Tensor::parameter(Matrix(1, n_classes))});
    }

    ad::Tensor logits(const Matrix& x, const Matrix* clinical) const {
        const ad::Tensor e = encoder_.forward(attrs_, ops_);
        const ad::Tensor xt = ad::Tensor::constant(x);
        ad::Tensor h;
        if (cfg_.integration == IntegrationMode::FeatureWeight) {
            ad::Tensor r;
            switch (cfg_.reduction) {
            case ReductionMode::Mean: r = ad::row_mean(e); break;
            case ReductionMode::Max: r = ad::row_max(e); break;
            case ReductionMode::Autoencoder: r = ad::add_row(ad::matmul(e, ae_w_), ae_b_); break;
            }
            h = ad::col_scale(xt, ad::minmax_shift(r, cfg_.weight_offset));
        } else {
            h = ad::concat_cols(xt, ad::matmul(xt, e));
        }
        if (clinical) {
            h = ad::concat_cols(h, ad::Tensor::constant(*clinical));
        }
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            h = ad::add_row(ad::matmul(h, layers_[l].w), layers_[l].b);
            if (l + 1 < layers_.size()) {
                h = ad::relu(h);
            }
        }
        return h;
    }

    std::vector<ad::Tensor> parameters() const {
        auto p = encoder_.parameters();
        for (const auto& d : layers_) {
            p.push_back(d.w);
            p.push_back(d.b);
        }
        return p;
    }

    std::vector<ad::Tensor> all_tensors() const {
        std::vector<ad::Tensor> t;
        for (const auto& layer : encoder_.layers()) {
            const auto lt = layer.tensors();
            t.insert(t.end(), lt.begin(), lt.end());
        }
        for (const auto& d : layers_) {
            t.push_back(d.w);
            t.push_back(d.b);
        }
        return t;
    }

private:
    const DpmonConfig& cfg_;
    const GraphOperators& ops_;
    ad::Tensor attrs_;
    GnnEncoder encoder_;
    ad::Tensor ae_w_, ae_b_;
    std::vector<Dense> layers_;
};

SeedResult run_seed(const Inputs& in, const FeatureGraph& g, const GraphOperators& ops, const DpmonConfig& cfg,
                    std::uint64_t seed) {
    const auto split = stratified_split(in.labels, in.n_classes, cfg.train_fraction, cfg.val_fraction, seed);

    // node attributes from training subjects only
    OmicsMatrix x_train;
    x_train.modality = "train";
    x_train.feature_names = g.node_names();
    x_train.values = take_rows(in.x, split.train);
    PhenotypeVector y_train;
    y_train.kind = PhenotypeKind::Categorical;
    y_train.class_names = in.class_names;
    for (std::size_t r : split.train) {
        x_train.subject_ids.push_back(std::to_string(r));
        y_train.subject_ids.push_back(std::to_string(r));
        y_train.values.push_back(static_cast<double>(in.labels[r]));
    }
    Matrix attrs = node_feature_matrix(g, x_train, y_train);

    const Matrix xz = standardize(in.x, split.train);
    std::optional<Matrix> cz;
    if (in.clinical) {
        cz = standardize(*in.clinical, split.train);
    }
    struct Part {
        Matrix x;
        std::optional<Matrix> c;
        std::vector<std::size_t> y;
    };
    auto part = [&](const std::vector<std::size_t>& rows) {
        Part p{take_rows(xz, rows), std::nullopt, take(in.labels, rows)};
        if (cz) {
            p.c = take_rows(*cz, rows);
        }
        return p;
    };
    const Part train = part(split.train), val = part(split.validation), test = part(split.test);

    JointModel model(cfg, ops, std::move(attrs), in.x.cols(), cz ? cz->cols() : 0, in.n_classes, seed);
    AdamOptimizer opt(model.parameters(), cfg.lr);
    const auto tensors = model.all_tensors();

    auto val_loss = [&] {
        const auto l = ad::softmax_cross_entropy(model.logits(val.x, val.c ? &*val.c : nullptr), val.y);
        return l.value()(0, 0);
    };
    auto snapshot = [&] {
        std::vector<Matrix> s;
        for (const auto& t : tensors) {
            s.push_back(t.value());
        }
        return s;
    };

    double best = val_loss();
    std::size_t best_epoch = 0;
    std::vector<Matrix> best_state = snapshot();
    for (std::size_t ep = 1; ep <= cfg.epochs; ++ep) {
        auto loss = ad::softmax_cross_entropy(model.logits(train.x, train.c ? &*train.c : nullptr), train.y);
        if (!std::isfinite(loss.value()(0, 0))) {
            throw NumericError("predict: non-finite training loss at epoch " + std::to_string(ep) + " (seed " +
                               std::to_string(seed) + ")");
        }
        opt.zero_grad();
        ad::backward(loss);
        opt.step();
        const double v = val_loss();
        if (!std::isfinite(v)) {
            throw NumericError("predict: non-finite validation loss at epoch " + std::to_string(ep) + " (seed " +
                               std::to_string(seed) + ")");
        }
        if (v < best) {
            best = v;
            best_epoch = ep;
            best_state = snapshot();
        }
    }
    if (cfg.restore_best_validation) {
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            auto t = tensors[i];
            t.mutable_value() = best_state[i];
        }
    } else {
        best_epoch = cfg.epochs;
    }

    SeedResult r;
    r.seed = seed;
    r.best_epoch = best_epoch;
    const auto pred_val = argmax_rows(model.logits(val.x, val.c ? &*val.c : nullptr).value());
    const auto pred_test = argmax_rows(model.logits(test.x, test.c ? &*test.c : nullptr).value());
    r.validation = compute_metrics(val.y, pred_val, in.n_classes);
    r.test = compute_metrics(test.y, pred_test, in.n_classes);

    std::vector<std::size_t> counts(in.n_classes, 0);
    for (std::size_t c : train.y) {
        ++counts[c];
    }
    const auto majority = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    r.majority_rate = static_cast<double>(std::count(test.y.begin(), test.y.end(), majority)) /
                      static_cast<double>(test.y.size());
    return r;
}

} // namespace

PredictionReport predict_phenotype(const AlignedDataset& dataset, const FeatureGraph& g, const DpmonConfig& cfg) {
    cfg.validate();
    if (g.num_nodes() == 0) {
        throw DataError("predict: the feature graph has no nodes");
    }
    const Inputs in = gather_inputs(dataset, g, cfg);
    const GraphOperators ops = GraphOperators::build(g);

    PredictionReport report;
    report.class_names = in.class_names;
    report.config_summary = cfg.summary();
    report.per_seed.resize(cfg.seeds.size());
    parallel_for(cfg.seeds.size(),
                 [&](std::size_t i) { report.per_seed[i] = run_seed(in, g, ops, cfg, cfg.seeds[i]); });

    std::vector<double> acc, fw, fm, vfm, maj;
    for (const auto& s : report.per_seed) {
        acc.push_back(s.test.accuracy);
        fw.push_back(s.test.f1_weighted);
        fm.push_back(s.test.f1_macro);
        vfm.push_back(s.validation.f1_macro);
        maj.push_back(s.majority_rate);
    }
    report.accuracy = summarize(acc);
    report.f1_weighted = summarize(fw);
    report.f1_macro = summarize(fm);
    report.validation_f1_macro = summarize(vfm);
    report.majority_rate = summarize(maj);
    return report;
}

std::vector<DpmonConfig> expand_grid(const DpmonConfig& base, const TuningGrid& grid) {
    auto or_base = [](const auto& list, const auto& value) {
        using T = std::decay_t<decltype(value)>;
        return list.empty() ? std::vector<T>{value} : std::vector<T>(list.begin(), list.end());
    };
    const auto kinds = or_base(grid.gnn_kinds, base.gnn_kind);
    const auto dims = or_base(grid.embed_dims, base.embed_dim);
    const auto lrs = or_base(grid.lrs, base.lr);
    const auto epochs = or_base(grid.epochs, base.epochs);
    const auto reductions = or_base(grid.reductions, base.reduction);
    const auto integrations = or_base(grid.integrations, base.integration);
    std::vector<DpmonConfig> out;
    for (auto k : kinds)
        for (auto d : dims)
            for (auto lr : lrs)
                for (auto ep : epochs)
                    for (auto red : reductions)
                        for (auto integ : integrations) {
                            DpmonConfig c = base;
                            c.gnn_kind = k;
                            c.embed_dim = d;
                            c.lr = lr;
                            c.epochs = ep;
                            c.reduction = red;
                            c.integration = integ;
                            out.push_back(std::move(c));
                        }
    if (grid.max_configs > 0 && grid.max_configs < out.size()) {
        std::vector<std::size_t> idx(out.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(grid.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(grid.max_configs);
        std::sort(idx.begin(), idx.end());
        std::vector<DpmonConfig> subset;
        for (std::size_t i : idx) {
            subset.push_back(out[i]);
        }
        out = std::move(subset);
    }
    return out;
}

TuningResult tune_hyperparameters(const AlignedDataset& dataset, const FeatureGraph& g, const DpmonConfig& base,
                                  const TuningGrid& grid) {
    const auto candidates = expand_grid(base, grid);
    TuningResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        LeaderboardEntry entry;
        entry.config = c;
        entry.report = predict_phenotype(dataset, g, c);
        entry.validation_f1_macro = entry.report.validation_f1_macro.mean;
        if (entry.validation_f1_macro > best) {
            best = entry.validation_f1_macro;
            result.best = c;
        }
        result.leaderboard.push_back(std::move(entry));
    }
    return result;
}

namespace {

std::string confusion_cell(const std::vector<std::vector<std::size_t>>& m) {
    std::string s;
    for (std::size_t t = 0; t < m.size(); ++t) {
        s += t ? "/" : "";
        for (std::size_t p = 0; p < m[t].size(); ++p) {
            s += (p ? ";" : "") + std::to_string(m[t][p]);
        }
    }
    return s;
}

std::string pm(const MetricSummary& s) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(4);
    o << s.mean << " +/- " << s.std;
    return o.str();
}

} // namespace

void write_report_csv(std::ostream& out, const PredictionReport& report) {
    out << "seed,accuracy,f1_weighted,f1_macro,val_f1_macro,majority_rate,best_epoch,confusion\n";
    for (const auto& s : report.per_seed) {
        out << s.seed << ',' << format_double(s.test.accuracy) << ',' << format_double(s.test.f1_weighted) << ','
            << format_double(s.test.f1_macro) << ',' << format_double(s.validation.f1_macro) << ','
            << format_double(s.majority_rate) << ',' << s.best_epoch << ',' << confusion_cell(s.test.confusion)
            << '\n';
    }
}

std::string report_summary(const PredictionReport& report) {
    std::ostringstream o;
    o << "classes: ";
    for (std::size_t i = 0; i < report.class_names.size(); ++i) {
        o << (i ? ", " : "") << report.class_names[i];
    }
    o << "\nseeds: " << report.per_seed.size() << "\n"
      << "accuracy: " << pm(report.accuracy) << "\n"
      << "f1_weighted: " << pm(report.f1_weighted) << "\n"
      << "f1_macro: " << pm(report.f1_macro) << "\n"
      << "validation f1_macro: " << pm(report.validation_f1_macro) << "\n"
      << "majority baseline: " << pm(report.majority_rate) << "\n"
      << "config: " << report.config_summary << "\n";
    return o.str();
}

void write_leaderboard_csv(std::ostream& out, const TuningResult& result) {
    out << "index,val_f1_macro,accuracy,f1_macro,config\n";
    for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
        const auto& e = result.leaderboard[i];
        out << i << ',' << format_double(e.validation_f1_macro) << ',' << format_double(e.report.accuracy.mean)
            << ',' << format_double(e.report.f1_macro.mean) << ',' << e.config.summary() << '\n';
    }
}

} // namespace omicsnet
