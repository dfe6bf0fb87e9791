#include "omicsnet/run.hpp"

#include "omicsnet/digest.hpp"
#include "omicsnet/errors.hpp"
#include "omicsnet/seeding.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

namespace omicsnet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---- enum tables -----------------------------------------------------------

template <class E>
using Table = std::vector<std::pair<const char*, E>>;

const Table<Orientation> kOrientations{{"subjects_as_rows", Orientation::SubjectsAsRows},
                                       {"features_as_rows", Orientation::FeaturesAsRows}};
const Table<PhenotypeKind> kPhenotypeKinds{{"categorical", PhenotypeKind::Categorical},
                                           {"continuous", PhenotypeKind::Continuous}};
const Table<AliquotPolicy> kAliquots{{"average", AliquotPolicy::Average}, {"error", AliquotPolicy::Error}};
const Table<SelectMethod> kSelectMethods{{"anova", SelectMethod::Anova},
                                         {"correlation", SelectMethod::Correlation},
                                         {"variance", SelectMethod::Variance},
                                         {"random_forest", SelectMethod::RandomForest}};
const Table<NetworkMethod> kNetworkMethods{{"knn", NetworkMethod::Knn},
                                           {"snn", NetworkMethod::Snn},
                                           {"similarity", NetworkMethod::Similarity},
                                           {"correlation", NetworkMethod::Correlation},
                                           {"soft_threshold", NetworkMethod::SoftThreshold}};
const Table<SimilarityMetric> kMetrics{{"cosine", SimilarityMetric::Cosine},
                                       {"euclidean", SimilarityMetric::Euclidean}};
const Table<KnnSymmetrization> kModes{{"union", KnnSymmetrization::Union}, {"mutual", KnnSymmetrization::Mutual}};
const Table<CorrelationMethod> kCorrelations{{"pearson", CorrelationMethod::Pearson},
                                             {"spearman", CorrelationMethod::Spearman}};
const Table<Prune::Kind> kPruneKinds{{"none", Prune::Kind::None},
                                     {"threshold", Prune::Kind::Threshold},
                                     {"top_fraction", Prune::Kind::TopFraction}};
const Table<ClusterMethod> kClusterMethods{{"louvain", ClusterMethod::Louvain},
                                           {"ppr", ClusterMethod::Ppr},
                                           {"hybrid", ClusterMethod::Hybrid}};
const Table<LayerKind> kLayers{{"gcn", LayerKind::Gcn}, {"gat", LayerKind::Gat}, {"sage", LayerKind::Sage},
                               {"gin", LayerKind::Gin}};
const Table<EmbedObjective> kObjectives{{"reconstruction", EmbedObjective::AdjacencyReconstruction},
                                        {"regression", EmbedObjective::PhenotypeRegression}};
const Table<ReductionMode> kReductions{{"mean", ReductionMode::Mean},
                                       {"max", ReductionMode::Max},
                                       {"autoencoder", ReductionMode::Autoencoder}};
const Table<IntegrationMode> kIntegrations{{"concatenate", IntegrationMode::Concatenate},
                                           {"feature_weight", IntegrationMode::FeatureWeight}};
const Table<RowNormalization> kNormalizations{{"none", RowNormalization::None},
                                              {"row_unit", RowNormalization::RowUnit}};

template <class E>
E from_name(const Table<E>& table, const std::string& text, const std::string& where) {
    std::string options;
    for (const auto& [name, value] : table) {
        if (text == name) {
            return value;
        }
        options += (options.empty() ? "" : ", ") + std::string(name);
    }
    throw ConfigError("'" + where + "': unknown value '" + text + "' (expected one of " + options + ")");
}

template <class E>
std::string name_of(const Table<E>& table, E value) {
    for (const auto& [name, v] : table) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

// ---- strict json sections --------------------------------------------------

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
T convert(const json& v, const std::string& where) {
    auto fail = [&](const char* expected) {
        return ConfigError("'" + where + "' must be " + expected + ", got " + v.dump());
    };
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw fail("true or false");
        return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw fail("a string");
        return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw fail("a number");
        return v.get<double>();
    } else if constexpr (std::is_unsigned_v<T>) {
        const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        if (!ok) throw fail("a non-negative integer");
        return v.get<T>();
    } else if constexpr (is_vector<T>::value) {
        if (!v.is_array()) throw fail("a list");
        T out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(convert<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
        }
        return out;
    } else {
        static_assert(sizeof(T) == 0, "unsupported config type");
    }
}

class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) {
            throw ConfigError("'" + where_ + "' must be an object");
        }
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        return j_.contains(key) ? convert<T>(j_.at(key), at(key)) : fallback;
    }

    template <class T>
    T need(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError("'" + where_ + "': missing required key '" + key + "'");
        }
        return convert<T>(j_.at(key), at(key));
    }

    template <class E>
    E choice(const std::string& key, const Table<E>& table, E fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return fallback;
        }
        return from_name(table, convert<std::string>(j_.at(key), at(key)), at(key));
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string at(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError("unknown key '" + where_ + "." + it.key() + "'");
            }
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) {
        throw ConfigError("empty path in config");
    }
    const fs::path path(p);
    return (path.is_absolute() ? path : fs::absolute(base / path)).lexically_normal();
}

void check_tag(const std::string& tag, const std::string& where) {
    const bool ok = !tag.empty() && std::all_of(tag.begin(), tag.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
    if (!ok || tag == "." || tag == "..") {
        throw ConfigError("'" + where + "': modality tag '" + tag + "' must use letters, digits, '_', '-' or '.'");
    }
}

std::vector<MatrixInput> parse_matrices(const json& j, const std::string& where, const fs::path& base) {
    if (!j.is_array()) {
        throw ConfigError("'" + where + "' must be a list");
    }
    std::vector<MatrixInput> out;
    std::set<std::string> tags;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Section s(j[i], where + "[" + std::to_string(i) + "]");
        MatrixInput m;
        m.path = resolve(base, s.need<std::string>("path"));
        m.modality = s.need<std::string>("modality");
        m.orientation = s.choice("orientation", kOrientations, Orientation::SubjectsAsRows);
        s.finish();
        check_tag(m.modality, s.at("modality"));
        if (m.modality == kClinicalModality) {
            throw ConfigError("'" + where + "': the tag 'clinical' is reserved for the clinical table");
        }
        if (!tags.insert(m.modality).second) {
            throw ConfigError("'" + where + "': modality '" + m.modality + "' listed twice");
        }
        out.push_back(std::move(m));
    }
    return out;
}

StageInputs parse_inputs(Section& parent, const fs::path& base) {
    StageInputs in;
    const json* j = parent.child("inputs");
    if (!j) {
        return in;
    }
    Section s(*j, parent.at("inputs"));
    if (const json* m = s.child("matrices")) {
        in.matrices = parse_matrices(*m, s.at("matrices"), base);
    }
    if (const json* c = s.child("clinical")) {
        in.clinical = resolve(base, convert<std::string>(*c, s.at("clinical")));
    }
    if (const json* p = s.child("phenotype")) {
        in.phenotype = resolve(base, convert<std::string>(*p, s.at("phenotype")));
    }
    in.phenotype_kind = s.choice("phenotype_kind", kPhenotypeKinds, PhenotypeKind::Categorical);
    if (const json* g = s.child("graph")) {
        in.graph = resolve(base, convert<std::string>(*g, s.at("graph")));
    }
    if (const json* e = s.child("embedding")) {
        in.embedding = resolve(base, convert<std::string>(*e, s.at("embedding")));
    }
    s.finish();
    if (in.matrices.empty() && (in.clinical || in.phenotype)) {
        throw ConfigError("'" + parent.at("inputs") + "': clinical and phenotype inputs need explicit matrices");
    }
    return in;
}

IngestStage parse_ingest(const json& j, const fs::path& base) {
    Section s(j, "ingest");
    IngestStage st;
    const json* omics = s.child("omics");
    if (!omics) {
        throw ConfigError("'ingest': missing required key 'omics'");
    }
    st.omics = parse_matrices(*omics, "ingest.omics", base);
    if (st.omics.empty()) {
        throw ConfigError("'ingest.omics' lists no matrix");
    }
    if (const json* c = s.child("clinical")) {
        st.clinical = resolve(base, convert<std::string>(*c, "ingest.clinical"));
    }
    st.phenotype = resolve(base, s.need<std::string>("phenotype"));
    st.phenotype_kind = s.choice("phenotype_kind", kPhenotypeKinds, PhenotypeKind::Categorical);
    st.aliquots = s.choice("aliquots", kAliquots, AliquotPolicy::Average);
    if (const json* n = s.child("normalize_ids")) {
        Section ns(*n, "ingest.normalize_ids");
        IdNormalizer norm;
        const auto delim = ns.get<std::string>("delimiter", "-");
        if (delim.size() != 1) {
            throw ConfigError("'ingest.normalize_ids.delimiter' must be a single character");
        }
        norm.delimiter = delim[0];
        norm.keep_fields = ns.get<std::size_t>("keep_fields", 3);
        if (norm.keep_fields == 0) {
            throw ConfigError("'ingest.normalize_ids.keep_fields' must be positive");
        }
        ns.finish();
        st.normalize_ids = norm;
    }
    s.finish();
    return st;
}

SelectStage parse_select(const json& j, const fs::path& base) {
    Section s(j, "select");
    SelectStage st;
    st.inputs = parse_inputs(s, base);
    st.method = s.choice("method", kSelectMethods, SelectMethod::Anova);
    st.top_k = s.get<std::size_t>("top_k", st.top_k);
    st.forest.n_trees = s.get<std::size_t>("n_trees", st.forest.n_trees);
    st.forest.max_depth = s.get<std::size_t>("max_depth", st.forest.max_depth);
    st.forest.min_leaf = s.get<std::size_t>("min_leaf", st.forest.min_leaf);
    st.forest.mtry = s.get<std::size_t>("mtry", st.forest.mtry);
    s.finish();
    if (st.top_k == 0) {
        throw ConfigError("'select.top_k' must be positive");
    }
    if (st.forest.n_trees == 0 || st.forest.min_leaf == 0) {
        throw ConfigError("'select': n_trees and min_leaf must be positive");
    }
    return st;
}

NetworkStage parse_network(const json& j, const fs::path& base) {
    Section s(j, "network");
    NetworkStage st;
    st.inputs = parse_inputs(s, base);
    st.method = s.choice("method", kNetworkMethods, NetworkMethod::Knn);
    st.k = s.get<std::size_t>("k", st.k);
    st.metric = s.choice("metric", kMetrics, st.metric);
    st.mode = s.choice("mode", kModes, st.mode);
    st.correlation = s.choice("correlation", kCorrelations, st.correlation);
    if (const json* p = s.child("prune")) {
        Section ps(*p, "network.prune");
        st.prune.kind = ps.choice("kind", kPruneKinds, Prune::Kind::None);
        st.prune.value = ps.get<double>("value", 0.0);
        ps.finish();
    }
    st.beta_grid = s.get<std::vector<double>>("beta_grid", st.beta_grid);
    st.target_r2 = s.get<double>("target_r2", st.target_r2);
    st.n_bins = s.get<std::size_t>("n_bins", st.n_bins);
    s.finish();
    if ((st.method == NetworkMethod::Knn || st.method == NetworkMethod::Snn) && st.k == 0) {
        throw ConfigError("'network.k' must be positive");
    }
    if (st.method == NetworkMethod::SoftThreshold && st.beta_grid.empty()) {
        throw ConfigError("'network.beta_grid' is empty");
    }
    return st;
}

ClusterStage parse_cluster(const json& j, const fs::path& base) {
    Section s(j, "cluster");
    ClusterStage st;
    st.inputs = parse_inputs(s, base);
    st.method = s.choice("method", kClusterMethods, ClusterMethod::Louvain);
    st.resolution = s.get<double>("resolution", st.resolution);
    st.ppr.damping = s.get<double>("damping", st.ppr.damping);
    st.ppr.tol = s.get<double>("tolerance", st.ppr.tol);
    st.ppr.max_iter = s.get<std::size_t>("max_iterations", st.ppr.max_iter);
    st.seed_nodes = s.get<std::vector<std::string>>("seed_nodes", {});
    st.mass_fraction = s.get<double>("mass_fraction", st.mass_fraction);
    s.finish();
    if (!(st.resolution > 0.0)) {
        throw ConfigError("'cluster.resolution' must be positive");
    }
    if (!(st.ppr.damping > 0.0 && st.ppr.damping < 1.0)) {
        throw ConfigError("'cluster.damping' must lie in (0, 1)");
    }
    if (!(st.mass_fraction > 0.0 && st.mass_fraction <= 1.0)) {
        throw ConfigError("'cluster.mass_fraction' must lie in (0, 1]");
    }
    return st;
}

EmbedStage parse_embed(const json& j, const fs::path& base) {
    Section s(j, "embed");
    EmbedStage st;
    st.inputs = parse_inputs(s, base);
    st.layer = s.choice("layer", kLayers, st.layer);
    st.hidden = s.get<std::vector<std::size_t>>("hidden", st.hidden);
    st.embed_dim = s.get<std::size_t>("embed_dim", st.embed_dim);
    st.heads = s.get<std::size_t>("heads", st.heads);
    st.objective = s.choice("objective", kObjectives, st.objective);
    st.lr = s.get<double>("lr", st.lr);
    st.momentum = s.get<double>("momentum", st.momentum);
    st.epochs = s.get<std::size_t>("epochs", st.epochs);
    s.finish();
    if (st.embed_dim == 0 || st.heads == 0 || st.epochs == 0) {
        throw ConfigError("'embed': embed_dim, heads and epochs must be positive");
    }
    if (!(st.lr >= 0.0) || !(st.momentum >= 0.0 && st.momentum < 1.0)) {
        throw ConfigError("'embed': lr must be >= 0 and momentum in [0, 1)");
    }
    for (const auto& layer : make_stack(st.layer, 4, st.hidden, st.embed_dim, st.heads)) {
        layer.validate();
    }
    return st;
}

PredictStage parse_predict(const json& j, const fs::path& base, std::uint64_t global_seed) {
    Section s(j, "predict");
    PredictStage st;
    auto& d = st.dpmon;
    st.inputs = parse_inputs(s, base);
    d.gnn_kind = s.choice("gnn", kLayers, d.gnn_kind);
    d.gnn_hidden = s.get<std::vector<std::size_t>>("gnn_hidden", d.gnn_hidden);
    d.embed_dim = s.get<std::size_t>("embed_dim", d.embed_dim);
    d.gat_heads = s.get<std::size_t>("gat_heads", d.gat_heads);
    d.reduction = s.choice("reduction", kReductions, d.reduction);
    d.integration = s.choice("integration", kIntegrations, d.integration);
    d.weight_offset = s.get<double>("weight_offset", d.weight_offset);
    d.classifier_hidden = s.get<std::vector<std::size_t>>("classifier_hidden", d.classifier_hidden);
    d.lr = s.get<double>("lr", d.lr);
    d.epochs = s.get<std::size_t>("epochs", d.epochs);
    if (const json* sp = s.child("split")) {
        Section ss(*sp, "predict.split");
        d.train_fraction = ss.get<double>("train", d.train_fraction);
        d.val_fraction = ss.get<double>("validation", d.val_fraction);
        d.test_fraction = ss.get<double>("test", d.test_fraction);
        ss.finish();
    }
    d.seeds = s.get<std::vector<std::uint64_t>>("seeds", default_predict_seeds(global_seed));
    d.include_clinical = s.get<bool>("include_clinical", d.include_clinical);
    d.restore_best_validation = s.get<bool>("restore_best_validation", d.restore_best_validation);
    if (const json* t = s.child("tuning")) {
        Section ts(*t, "predict.tuning");
        TuningGrid g;
        for (const auto& name : ts.get<std::vector<std::string>>("gnn", {})) {
            g.gnn_kinds.push_back(from_name(kLayers, name, ts.at("gnn")));
        }
        g.embed_dims = ts.get<std::vector<std::size_t>>("embed_dim", {});
        g.lrs = ts.get<std::vector<double>>("lr", {});
        g.epochs = ts.get<std::vector<std::size_t>>("epochs", {});
        for (const auto& name : ts.get<std::vector<std::string>>("reduction", {})) {
            g.reductions.push_back(from_name(kReductions, name, ts.at("reduction")));
        }
        for (const auto& name : ts.get<std::vector<std::string>>("integration", {})) {
            g.integrations.push_back(from_name(kIntegrations, name, ts.at("integration")));
        }
        g.max_configs = ts.get<std::size_t>("max_configs", 0);
        g.seed = ts.get<std::uint64_t>("seed", derive_seed(global_seed, "tune"));
        ts.finish();
        for (const auto& c : expand_grid(d, g)) {
            c.validate();
        }
        st.tuning = g;
    }
    s.finish();
    d.validate();
    for (const auto& layer : make_stack(d.gnn_kind, 4, d.gnn_hidden, d.embed_dim, d.gat_heads)) {
        layer.validate();
    }
    return st;
}

RepresentStage parse_represent(const json& j, const fs::path& base) {
    Section s(j, "represent");
    RepresentStage st;
    st.inputs = parse_inputs(s, base);
    st.normalize = s.choice("normalize", kNormalizations, st.normalize);
    s.finish();
    return st;
}

// ---- serialization ---------------------------------------------------------

json matrices_json(const std::vector<MatrixInput>& ms) {
    json out = json::array();
    for (const auto& m : ms) {
        out.push_back({{"path", m.path.string()},
                       {"modality", m.modality},
                       {"orientation", name_of(kOrientations, m.orientation)}});
    }
    return out;
}

json inputs_json(const StageInputs& in) {
    json out = json::object();
    if (!in.matrices.empty()) out["matrices"] = matrices_json(in.matrices);
    if (in.clinical) out["clinical"] = in.clinical->string();
    if (in.phenotype) out["phenotype"] = in.phenotype->string();
    out["phenotype_kind"] = name_of(kPhenotypeKinds, in.phenotype_kind);
    if (in.graph) out["graph"] = in.graph->string();
    if (in.embedding) out["embedding"] = in.embedding->string();
    return out;
}

template <class E>
json names_json(const Table<E>& table, const std::vector<E>& values) {
    json out = json::array();
    for (E v : values) {
        out.push_back(name_of(table, v));
    }
    return out;
}

} // namespace

std::vector<std::string> RunConfig::stage_names() const {
    std::vector<std::string> out;
    if (ingest) out.push_back("ingest");
    if (select) out.push_back("select");
    if (network) out.push_back("network");
    if (cluster) out.push_back("cluster");
    if (embed) out.push_back("embed");
    if (predict) out.push_back("predict");
    if (represent) out.push_back("represent");
    return out;
}

std::vector<std::uint64_t> default_predict_seeds(std::uint64_t global_seed) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < 10; ++i) {
        seeds.push_back(derive_seed(global_seed, "predict/" + std::to_string(i)));
    }
    return seeds;
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
    Section s(j, "config");
    RunConfig cfg;
    cfg.format_version = s.get<std::string>("format_version", kFormatVersion);
    if (cfg.format_version != kFormatVersion) {
        throw ConfigError("unsupported format_version '" + cfg.format_version + "' (expected '" +
                          std::string(kFormatVersion) + "')");
    }
    cfg.seed = s.get<std::uint64_t>("seed", 0);
    cfg.output_dir = resolve(base_dir, s.get<std::string>("output_dir", "omicsnet_out"));
    if (const json* b = s.child("ingest")) cfg.ingest = parse_ingest(*b, base_dir);
    if (const json* b = s.child("select")) cfg.select = parse_select(*b, base_dir);
    if (const json* b = s.child("network")) cfg.network = parse_network(*b, base_dir);
    if (const json* b = s.child("cluster")) cfg.cluster = parse_cluster(*b, base_dir);
    if (const json* b = s.child("embed")) cfg.embed = parse_embed(*b, base_dir);
    if (const json* b = s.child("predict")) cfg.predict = parse_predict(*b, base_dir, cfg.seed);
    if (const json* b = s.child("represent")) cfg.represent = parse_represent(*b, base_dir);
    s.finish();
    if (cfg.stage_names().empty()) {
        throw ConfigError("the config has no stage block (ingest, select, network, cluster, embed, predict, "
                          "represent)");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(j, fs::absolute(path).parent_path());
}

json to_json(const RunConfig& cfg) {
    json j;
    j["format_version"] = cfg.format_version;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    if (cfg.ingest) {
        const auto& st = *cfg.ingest;
        json b;
        b["omics"] = matrices_json(st.omics);
        if (st.clinical) b["clinical"] = st.clinical->string();
        b["phenotype"] = st.phenotype.string();
        b["phenotype_kind"] = name_of(kPhenotypeKinds, st.phenotype_kind);
        b["aliquots"] = name_of(kAliquots, st.aliquots);
        if (st.normalize_ids) {
            b["normalize_ids"] = {{"delimiter", std::string(1, st.normalize_ids->delimiter)},
                                  {"keep_fields", st.normalize_ids->keep_fields}};
        }
        j["ingest"] = b;
    }
    if (cfg.select) {
        const auto& st = *cfg.select;
        j["select"] = {{"inputs", inputs_json(st.inputs)},
                       {"method", name_of(kSelectMethods, st.method)},
                       {"top_k", st.top_k},
                       {"n_trees", st.forest.n_trees},
                       {"max_depth", st.forest.max_depth},
                       {"min_leaf", st.forest.min_leaf},
                       {"mtry", st.forest.mtry}};
    }
    if (cfg.network) {
        const auto& st = *cfg.network;
        j["network"] = {{"inputs", inputs_json(st.inputs)},
                        {"method", name_of(kNetworkMethods, st.method)},
                        {"k", st.k},
                        {"metric", name_of(kMetrics, st.metric)},
                        {"mode", name_of(kModes, st.mode)},
                        {"correlation", name_of(kCorrelations, st.correlation)},
                        {"prune", {{"kind", name_of(kPruneKinds, st.prune.kind)}, {"value", st.prune.value}}},
                        {"beta_grid", st.beta_grid},
                        {"target_r2", st.target_r2},
                        {"n_bins", st.n_bins}};
    }
    if (cfg.cluster) {
        const auto& st = *cfg.cluster;
        j["cluster"] = {{"inputs", inputs_json(st.inputs)},
                        {"method", name_of(kClusterMethods, st.method)},
                        {"resolution", st.resolution},
                        {"damping", st.ppr.damping},
                        {"tolerance", st.ppr.tol},
                        {"max_iterations", st.ppr.max_iter},
                        {"seed_nodes", st.seed_nodes},
                        {"mass_fraction", st.mass_fraction}};
    }
    if (cfg.embed) {
        const auto& st = *cfg.embed;
        j["embed"] = {{"inputs", inputs_json(st.inputs)},
                      {"layer", name_of(kLayers, st.layer)},
                      {"hidden", st.hidden},
                      {"embed_dim", st.embed_dim},
                      {"heads", st.heads},
                      {"objective", name_of(kObjectives, st.objective)},
                      {"lr", st.lr},
                      {"momentum", st.momentum},
                      {"epochs", st.epochs}};
    }
    if (cfg.predict) {
        const auto& st = *cfg.predict;
        const auto& d = st.dpmon;
        json b = {{"inputs", inputs_json(st.inputs)},
                  {"gnn", name_of(kLayers, d.gnn_kind)},
                  {"gnn_hidden", d.gnn_hidden},
                  {"embed_dim", d.embed_dim},
                  {"gat_heads", d.gat_heads},
                  {"reduction", name_of(kReductions, d.reduction)},
                  {"integration", name_of(kIntegrations, d.integration)},
                  {"weight_offset", d.weight_offset},
                  {"classifier_hidden", d.classifier_hidden},
                  {"lr", d.lr},
                  {"epochs", d.epochs},
                  {"split", {{"train", d.train_fraction}, {"validation", d.val_fraction}, {"test", d.test_fraction}}},
                  {"seeds", d.seeds},
                  {"include_clinical", d.include_clinical},
                  {"restore_best_validation", d.restore_best_validation}};
        if (st.tuning) {
            const auto& g = *st.tuning;
            b["tuning"] = {{"gnn", names_json(kLayers, g.gnn_kinds)},
                           {"embed_dim", g.embed_dims},
                           {"lr", g.lrs},
                           {"epochs", g.epochs},
                           {"reduction", names_json(kReductions, g.reductions)},
                           {"integration", names_json(kIntegrations, g.integrations)},
                           {"max_configs", g.max_configs},
                           {"seed", g.seed}};
        }
        j["predict"] = b;
    }
    if (cfg.represent) {
        j["represent"] = {{"inputs", inputs_json(cfg.represent->inputs)},
                          {"normalize", name_of(kNormalizations, cfg.represent->normalize)}};
    }
    return j;
}

// ---- execution -------------------------------------------------------------

namespace {

struct FileRecord {
    std::string path;
    std::string sha256;
};

json records_json(const std::vector<FileRecord>& files) {
    json out = json::array();
    for (const auto& f : files) {
        out.push_back({{"path", f.path}, {"sha256", f.sha256}});
    }
    return out;
}

FileRecord external(const fs::path& p) {
    if (!fs::exists(p)) {
        throw DataError("input file not found: " + p.string());
    }
    return {p.string(), sha256_file(p)};
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct DatasetState {
    AlignedDataset data;
    bool has_phenotype = true;
    std::map<std::string, FileRecord> modality_files;
    std::optional<FileRecord> phenotype_file;

    std::vector<FileRecord> files() const {
        std::vector<FileRecord> out;
        for (const auto& [tag, f] : modality_files) {
            out.push_back(f);
        }
        if (phenotype_file) {
            out.push_back(*phenotype_file);
        }
        return out;
    }
};

struct GraphState {
    FeatureGraph graph;
    std::vector<FileRecord> files;
};

struct EmbeddingState {
    EmbeddingMatrix embedding;
    std::vector<FileRecord> files;
};

struct Upstream {
    std::optional<DatasetState> dataset;
    std::optional<GraphState> graph;
    std::optional<EmbeddingState> embedding;
};

// Collects one stage's outputs in the staging area and writes its manifest.
class StageWriter {
public:
    StageWriter(const fs::path& staging, std::string stage, std::uint64_t seed)
        : dir_(staging / stage), stage_(std::move(stage)), seed_(seed), started_(utc_now()) {
        fs::create_directories(dir_);
    }

    template <class Fn>
    FileRecord write(const std::string& name, Fn&& fill) {
        std::ostringstream buf;
        fill(buf);
        const std::string bytes = buf.str();
        std::ofstream out(dir_ / name, std::ios::binary);
        out << bytes;
        if (!out) {
            throw DataError("cannot write " + (dir_ / name).string());
        }
        FileRecord rec{stage_ + "/" + name, sha256_hex(bytes)};
        outputs_.push_back(rec);
        return rec;
    }

    void input(const FileRecord& f) { inputs_.push_back(f); }
    void inputs(const std::vector<FileRecord>& fs) {
        inputs_.insert(inputs_.end(), fs.begin(), fs.end());
    }
    json& results() { return results_; }
    const std::vector<FileRecord>& outputs() const { return outputs_; }

    void finish() {
        json m;
        m["format_version"] = kFormatVersion;
        m["stage"] = stage_;
        m["stage_seed"] = seed_;
        m["started_at"] = started_;
        m["finished_at"] = utc_now();
        m["inputs"] = records_json(inputs_);
        m["outputs"] = records_json(outputs_);
        m["results"] = results_.is_null() ? json::object() : results_;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::string stage_;
    std::uint64_t seed_;
    std::string started_;
    std::vector<FileRecord> inputs_, outputs_;
    json results_;
};

DatasetState load_dataset(const StageInputs& in, bool need_phenotype, const std::string& stage) {
    DatasetState ds;
    std::vector<OmicsMatrix> mats;
    for (const auto& m : in.matrices) {
        mats.push_back(load_omics_csv(m.path, m.modality, m.orientation));
        ds.modality_files[m.modality] = external(m.path);
    }
    if (in.clinical) {
        mats.push_back(load_clinical_csv(*in.clinical, kClinicalModality));
        ds.modality_files[kClinicalModality] = external(*in.clinical);
    }
    PhenotypeVector y;
    if (in.phenotype) {
        y = load_phenotype_csv(*in.phenotype, in.phenotype_kind);
        ds.phenotype_file = external(*in.phenotype);
    } else if (need_phenotype) {
        throw ConfigError("stage '" + stage + "' needs a phenotype: add an 'ingest' block or set " + stage +
                          ".inputs.phenotype");
    } else {
        // matrices only: a placeholder outcome over the first matrix's subjects
        std::vector<std::string> ids = mats.front().subject_ids;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        y = PhenotypeVector::continuous(ids, std::vector<double>(ids.size(), 0.0));
        ds.has_phenotype = false;
    }
    ds.data = align_cohort(mats, y, AliquotPolicy::Error);
    return ds;
}

class Runner {
public:
    Runner(const RunConfig& cfg, fs::path staging, std::ostream& log)
        : cfg_(cfg), staging_(std::move(staging)), log_(log) {}

    void run() {
        if (cfg_.ingest) stage("ingest", [&](StageWriter& w) { ingest(*cfg_.ingest, w); });
        if (cfg_.select) stage("select", [&](StageWriter& w) { select(*cfg_.select, w); });
        if (cfg_.network) stage("network", [&](StageWriter& w) { network(*cfg_.network, w); });
        if (cfg_.cluster) stage("cluster", [&](StageWriter& w) { cluster(*cfg_.cluster, w); });
        if (cfg_.embed) stage("embed", [&](StageWriter& w) { embed(*cfg_.embed, w); });
        if (cfg_.predict) stage("predict", [&](StageWriter& w) { predict(*cfg_.predict, w); });
        if (cfg_.represent) stage("represent", [&](StageWriter& w) { represent(*cfg_.represent, w); });
    }

    const std::vector<FileRecord>& artifacts() const { return artifacts_; }
    const std::string& current() const { return current_; }

private:
    template <class Fn>
    void stage(const std::string& name, Fn&& body) {
        current_ = name;
        log_ << "[" << name << "] running\n";
        StageWriter w(staging_, name, derive_seed(cfg_.seed, name));
        body(w);
        w.finish();
        artifacts_.insert(artifacts_.end(), w.outputs().begin(), w.outputs().end());
        log_ << "[" << name << "] wrote " << w.outputs().size() << " file(s)\n";
    }

    std::uint64_t seed_of(const std::string& name) const { return derive_seed(cfg_.seed, name); }

    const DatasetState& dataset_for(const StageInputs& in, bool need_phenotype, const std::string& stage,
                                    std::optional<DatasetState>& local) {
        if (!in.matrices.empty()) {
            local = load_dataset(in, need_phenotype, stage);
            return *local;
        }
        if (!up_.dataset) {
            throw ConfigError("stage '" + stage + "' needs omics matrices: add an 'ingest' block or set " + stage +
                              ".inputs.matrices");
        }
        if (need_phenotype && !up_.dataset->has_phenotype) {
            throw ConfigError("stage '" + stage + "' needs a phenotype, which the upstream matrices lack");
        }
        return *up_.dataset;
    }

    const GraphState& graph_for(const StageInputs& in, const std::string& stage, std::optional<GraphState>& local) {
        if (in.graph) {
            GraphState gs{load_graph(*in.graph), {external(*in.graph)}};
            const auto nodes = node_order_path(*in.graph);
            if (fs::exists(nodes)) {
                gs.files.push_back(external(nodes));
            }
            local = std::move(gs);
            return *local;
        }
        if (!up_.graph) {
            throw ConfigError("stage '" + stage + "' needs a graph from stage 'network': add a 'network' block "
                              "or set " + stage + ".inputs.graph");
        }
        return *up_.graph;
    }

    const EmbeddingState& embedding_for(const StageInputs& in, const std::string& stage,
                                        std::optional<EmbeddingState>& local) {
        if (in.embedding) {
            std::ifstream f(*in.embedding);
            if (!f) {
                throw DataError("cannot open " + in.embedding->string());
            }
            local = EmbeddingState{read_embedding_csv(f), {external(*in.embedding)}};
            return *local;
        }
        if (!up_.embedding) {
            throw ConfigError("stage '" + stage + "' needs an embedding from stage 'embed': add an 'embed' block "
                              "or set " + stage + ".inputs.embedding");
        }
        return *up_.embedding;
    }

    static std::vector<std::string> omics_tags(const AlignedDataset& d) {
        std::vector<std::string> tags;
        for (const auto& m : d.modalities) {
            if (m.modality != kClinicalModality) {
                tags.push_back(m.modality);
            }
        }
        if (tags.empty()) {
            throw DataError("the dataset holds no omics modality");
        }
        return tags;
    }

    void ingest(const IngestStage& st, StageWriter& w) {
        std::vector<OmicsMatrix> mats;
        const bool dup = st.aliquots == AliquotPolicy::Average;
        for (const auto& m : st.omics) {
            mats.push_back(load_omics_csv(m.path, m.modality, m.orientation, dup, st.normalize_ids));
            w.input(external(m.path));
        }
        if (st.clinical) {
            mats.push_back(load_clinical_csv(*st.clinical, kClinicalModality, st.normalize_ids));
            w.input(external(*st.clinical));
        }
        const auto y = load_phenotype_csv(st.phenotype, st.phenotype_kind, st.normalize_ids);
        w.input(external(st.phenotype));
        DatasetState ds;
        ds.data = align_cohort(mats, y, st.aliquots);
        for (const auto& m : ds.data.modalities) {
            ds.modality_files[m.modality] = w.write(m.modality + ".csv", [&](std::ostream& o) {
                write_omics_csv(o, m);
            });
        }
        ds.phenotype_file = w.write("phenotype.csv", [&](std::ostream& o) { write_phenotype_csv(o, ds.data.phenotype); });
        w.write("provenance.txt", [&](std::ostream& o) { o << ds.data.provenance.report(); });
        w.results() = {{"subjects", ds.data.subject_ids().size()},
                       {"dropped_not_shared", ds.data.provenance.dropped_not_shared.size()},
                       {"dropped_incomplete", ds.data.provenance.dropped_incomplete.size()}};
        up_.dataset = std::move(ds);
    }

    void select(const SelectStage& st, StageWriter& w) {
        std::optional<DatasetState> local;
        const DatasetState& src = dataset_for(st.inputs, true, "select", local);
        w.inputs(src.files());
        DatasetState out;
        out.data = src.data;
        out.phenotype_file = src.phenotype_file;
        ForestConfig forest = st.forest;
        forest.seed = seed_of("select");
        json counts = json::object();
        for (auto& m : out.data.modalities) {
            if (m.modality == kClinicalModality) {
                out.modality_files[m.modality] = src.modality_files.at(m.modality);
                continue;
            }
            ScoreList scores;
            switch (st.method) {
            case SelectMethod::Anova: scores = anova_f_scores(m, src.data.phenotype); break;
            case SelectMethod::Correlation: scores = correlation_ranking(m, src.data.phenotype); break;
            case SelectMethod::Variance: scores = variance_scores(m); break;
            case SelectMethod::RandomForest: scores = rf_importance(m, src.data.phenotype, forest); break;
            }
            const auto chosen = top_k(scores, std::min(st.top_k, scores.size()));
            std::set<std::string> keep(chosen.begin(), chosen.end());
            std::vector<std::string> ordered;
            for (const auto& f : m.feature_names) {
                if (keep.count(f)) {
                    ordered.push_back(f);
                }
            }
            w.write(m.modality + "_scores.csv", [&](std::ostream& o) { write_scores_csv(o, scores); });
            m = select_features(m, ordered);
            out.modality_files[m.modality] = w.write(m.modality + ".csv", [&](std::ostream& o) {
                write_omics_csv(o, m);
            });
            counts[m.modality] = ordered.size();
        }
        w.results() = {{"selected", counts}};
        up_.dataset = std::move(out);
    }

    void network(const NetworkStage& st, StageWriter& w) {
        std::optional<DatasetState> local;
        const DatasetState& src = dataset_for(st.inputs, false, "network", local);
        w.inputs(src.files());
        const OmicsMatrix x = concat_modalities(src.data, omics_tags(src.data));
        std::optional<SoftThresholdResult> soft;
        FeatureGraph g = [&] {
            switch (st.method) {
            case NetworkMethod::Knn: return knn_graph(x, st.k, st.metric, st.mode);
            case NetworkMethod::Snn: return snn_graph(x, st.k);
            case NetworkMethod::Similarity: return similarity_network(x, st.metric, st.prune);
            case NetworkMethod::Correlation: return correlation_network(x, st.correlation, st.prune);
            case NetworkMethod::SoftThreshold:
                soft = soft_threshold_network(x, st.beta_grid, st.target_r2, st.n_bins);
                return soft->graph;
            }
            throw ConfigError("unknown network method");
        }();
        GraphState gs{g, {}};
        gs.files.push_back(w.write("edges.csv", [&](std::ostream& o) { write_edge_list(o, g); }));
        gs.files.push_back(w.write("edges.nodes.csv", [&](std::ostream& o) { write_node_order(o, g); }));
        w.results() = {{"nodes", g.num_nodes()}, {"edges", g.num_edges()}, {"flagged", g.meta().flagged_nodes.size()}};
        if (soft) {
            w.write("soft_threshold.csv", [&](std::ostream& o) {
                o << "beta,signed_r2,slope,mean_connectivity\n";
                for (const auto& f : soft->report) {
                    o << format_double(f.beta) << ',' << format_double(f.signed_r2) << ',' << format_double(f.slope)
                      << ',' << format_double(f.mean_connectivity) << '\n';
                }
            });
            w.results()["beta"] = soft->beta;
            w.results()["below_target"] = soft->below_target;
        }
        up_.graph = std::move(gs);
    }

    void cluster(const ClusterStage& st, StageWriter& w) {
        std::optional<GraphState> local_g;
        const GraphState& gs = graph_for(st.inputs, "cluster", local_g);
        const FeatureGraph& g = gs.graph;
        w.inputs(gs.files);
        const std::uint64_t seed = seed_of("cluster");
        switch (st.method) {
        case ClusterMethod::Louvain: {
            const Partition p = louvain(g, seed, st.resolution);
            w.write("partition.csv", [&](std::ostream& o) { write_partition_csv(o, g, p); });
            w.results() = {{"communities", p.num_communities()}, {"modularity", p.modularity}};
            break;
        }
        case ClusterMethod::Ppr: {
            std::vector<double> s(g.num_nodes(), 0.0);
            if (!st.seed_nodes.empty()) {
                for (const auto& name : st.seed_nodes) {
                    const auto v = g.node_index(name);
                    if (!v) {
                        throw DataError("cluster: seed node '" + name + "' is not in the graph");
                    }
                    s[*v] = 1.0 / static_cast<double>(st.seed_nodes.size());
                }
            } else {
                std::optional<DatasetState> local;
                const DatasetState& ds = dataset_for(st.inputs, true, "cluster", local);
                w.inputs(ds.files());
                const OmicsMatrix x = node_matrix(ds.data, g.node_names());
                double total = 0.0;
                for (std::size_t v = 0; v < g.num_nodes(); ++v) {
                    s[v] = phenotype_association(x.values.col(v), ds.data.phenotype);
                    total += s[v];
                }
                if (!(total > 0.0)) {
                    throw DataError("cluster: no node is associated with the phenotype; give seed_nodes");
                }
                for (double& v : s) {
                    v /= total;
                }
            }
            const PprVector p = personalized_pagerank(g, s, st.ppr);
            w.write("ppr.csv", [&](std::ostream& o) { write_ppr_csv(o, g, p.scores); });
            w.results() = {{"iterations", p.iterations}, {"residual", p.residual}};
            break;
        }
        case ClusterMethod::Hybrid: {
            std::optional<DatasetState> local;
            const DatasetState& ds = dataset_for(st.inputs, true, "cluster", local);
            w.inputs(ds.files());
            const OmicsMatrix x = node_matrix(ds.data, g.node_names());
            const HybridResult h =
                hybrid_ppr_louvain(g, x, ds.data.phenotype, st.mass_fraction, seed, st.ppr, st.resolution);
            w.write("ppr.csv", [&](std::ostream& o) { write_ppr_csv(o, g, h.ppr.scores); });
            w.write("partition.csv", [&](std::ostream& o) { write_partition_csv(o, h.subgraph, h.partition); });
            w.results() = {{"retained", h.retained.size()},
                           {"retained_mass", h.retained_mass},
                           {"communities", h.partition.num_communities()},
                           {"modularity", h.partition.modularity}};
            break;
        }
        }
    }

    void embed(const EmbedStage& st, StageWriter& w) {
        std::optional<GraphState> local_g;
        const GraphState& gs = graph_for(st.inputs, "embed", local_g);
        std::optional<DatasetState> local;
        const DatasetState& ds = dataset_for(st.inputs, true, "embed", local);
        w.inputs(gs.files);
        w.inputs(ds.files());
        const OmicsMatrix x = node_matrix(ds.data, gs.graph.node_names());
        const Matrix attrs = node_feature_matrix(gs.graph, x, ds.data.phenotype);
        EmbedderConfig ec;
        ec.layers = make_stack(st.layer, attrs.cols(), st.hidden, st.embed_dim, st.heads);
        ec.objective = st.objective;
        ec.lr = st.lr;
        ec.momentum = st.momentum;
        ec.epochs = st.epochs;
        ec.seed = seed_of("embed");
        std::optional<std::vector<double>> targets;
        if (st.objective == EmbedObjective::PhenotypeRegression) {
            targets = node_phenotype_targets(gs.graph, x, ds.data.phenotype);
        }
        EmbeddingState es{train_embedder(gs.graph, attrs, targets, ec), {}};
        es.files.push_back(w.write("embedding.csv", [&](std::ostream& o) { write_embedding_csv(o, es.embedding); }));
        w.write("loss.csv", [&](std::ostream& o) { write_loss_curve_csv(o, es.embedding.loss_curve); });
        w.results() = {{"final_loss", es.embedding.loss_curve.empty() ? 0.0 : es.embedding.loss_curve.back()}};
        up_.embedding = std::move(es);
    }

    void predict(const PredictStage& st, StageWriter& w) {
        std::optional<GraphState> local_g;
        const GraphState& gs = graph_for(st.inputs, "predict", local_g);
        std::optional<DatasetState> local;
        const DatasetState& ds = dataset_for(st.inputs, true, "predict", local);
        w.inputs(gs.files);
        w.inputs(ds.files());
        PredictionReport report;
        if (st.tuning) {
            const TuningResult t = tune_hyperparameters(ds.data, gs.graph, st.dpmon, *st.tuning);
            w.write("leaderboard.csv", [&](std::ostream& o) { write_leaderboard_csv(o, t); });
            for (const auto& e : t.leaderboard) {
                if (e.config.summary() == t.best.summary()) {
                    report = e.report;
                    break;
                }
            }
        } else {
            report = predict_phenotype(ds.data, gs.graph, st.dpmon);
        }
        w.write("report.csv", [&](std::ostream& o) { write_report_csv(o, report); });
        w.write("summary.txt", [&](std::ostream& o) { o << report_summary(report); });
        w.results() = {{"accuracy_mean", report.accuracy.mean},
                       {"accuracy_std", report.accuracy.std},
                       {"f1_macro_mean", report.f1_macro.mean},
                       {"majority_rate_mean", report.majority_rate.mean},
                       {"config", report.config_summary}};
    }

    void represent(const RepresentStage& st, StageWriter& w) {
        std::optional<EmbeddingState> local_e;
        const EmbeddingState& es = embedding_for(st.inputs, "represent", local_e);
        std::optional<DatasetState> local;
        const DatasetState& ds = dataset_for(st.inputs, false, "represent", local);
        w.inputs(es.files);
        w.inputs(ds.files());
        const OmicsMatrix x = node_matrix(ds.data, es.embedding.node_names);
        const OmicsMatrix s = subject_representation(x, es.embedding, st.normalize);
        w.write("subjects.csv", [&](std::ostream& o) { write_omics_csv(o, s); });
        w.results() = {{"subjects", s.n_subjects()}, {"dims", s.n_features()}};
    }

    const RunConfig& cfg_;
    fs::path staging_;
    std::ostream& log_;
    Upstream up_;
    std::vector<FileRecord> artifacts_;
    std::string current_;
};

// Upstream availability checked before anything is written.
void check_wiring(const RunConfig& cfg) {
    const bool has_data = cfg.ingest.has_value();
    const bool has_graph = cfg.network.has_value();
    auto need_data = [&](const StageInputs& in, const char* stage) {
        if (in.matrices.empty() && !has_data) {
            throw ConfigError(std::string("stage '") + stage + "' needs omics matrices: add an 'ingest' block or set " +
                              stage + ".inputs.matrices");
        }
    };
    auto need_graph = [&](const StageInputs& in, const char* stage) {
        if (!in.graph && !has_graph) {
            throw ConfigError(std::string("stage '") + stage + "' needs a graph from stage 'network': add a "
                              "'network' block or set " + stage + ".inputs.graph");
        }
    };
    if (cfg.select) need_data(cfg.select->inputs, "select");
    if (cfg.network) need_data(cfg.network->inputs, "network");
    if (cfg.cluster) {
        need_graph(cfg.cluster->inputs, "cluster");
        const bool phenotype_seeds = cfg.cluster->method == ClusterMethod::Hybrid ||
                                     (cfg.cluster->method == ClusterMethod::Ppr && cfg.cluster->seed_nodes.empty());
        if (phenotype_seeds) need_data(cfg.cluster->inputs, "cluster");
    }
    if (cfg.embed) {
        need_graph(cfg.embed->inputs, "embed");
        need_data(cfg.embed->inputs, "embed");
    }
    if (cfg.predict) {
        need_graph(cfg.predict->inputs, "predict");
        need_data(cfg.predict->inputs, "predict");
    }
    if (cfg.represent) {
        need_data(cfg.represent->inputs, "represent");
        if (!cfg.represent->inputs.embedding && !cfg.embed) {
            throw ConfigError("stage 'represent' needs an embedding from stage 'embed': add an 'embed' block or "
                              "set represent.inputs.embedding");
        }
    }
}

} // namespace

RunSummary execute_run(const RunConfig& cfg, std::ostream& log) {
    check_wiring(cfg);
    const fs::path out = cfg.output_dir;
    const fs::path staging = out / ".staging";
    fs::create_directories(out);
    fs::remove_all(staging);
    fs::create_directories(staging);
    const std::string started = utc_now();

    Runner runner(cfg, staging, log);
    try {
        runner.run();
    } catch (const std::exception& e) {
        json failure = {{"format_version", kFormatVersion},
                        {"failed_stage", runner.current()},
                        {"error", e.what()},
                        {"started_at", started},
                        {"finished_at", utc_now()},
                        {"config", to_json(cfg)}};
        std::ofstream f(staging / "failure_manifest.json", std::ios::binary);
        f << failure.dump(2) << '\n';
        throw;
    }

    for (const auto& name : cfg.stage_names()) {
        fs::remove_all(out / name);
        fs::rename(staging / name, out / name);
    }
    json manifest = {{"format_version", kFormatVersion},
                     {"started_at", started},
                     {"finished_at", utc_now()},
                     {"stages", cfg.stage_names()},
                     {"artifacts", records_json(runner.artifacts())},
                     {"config", to_json(cfg)}};
    {
        std::ofstream f(staging / "run_manifest.json", std::ios::binary);
        f << manifest.dump(2) << '\n';
    }
    fs::rename(staging / "run_manifest.json", out / "run_manifest.json");
    fs::remove_all(staging);

    RunSummary summary;
    for (const auto& a : runner.artifacts()) {
        summary.artifacts.push_back(a.path);
    }
    return summary;
}

} // namespace omicsnet
