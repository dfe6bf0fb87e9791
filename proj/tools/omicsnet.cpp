// Command-line front end for the omicsnet library.

#include "omicsnet/errors.hpp"
#include "omicsnet/parallel.hpp"
#include "omicsnet/run.hpp"
#include "omicsnet/text.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace omicsnet;

namespace {

// "mrna=path.csv" or a bare path, whose stem becomes the tag
json matrix_spec(const std::string& text, bool features_as_rows) {
    const auto eq = text.find('=');
    std::string tag, path;
    if (eq == std::string::npos) {
        path = text;
        tag = fs::path(text).stem().string();
    } else {
        tag = text.substr(0, eq);
        path = text.substr(eq + 1);
    }
    return {{"path", path}, {"modality", tag}, {"orientation", features_as_rows ? "features_as_rows" : "subjects_as_rows"}};
}

json matrices_json(const std::vector<std::string>& specs, bool features_as_rows) {
    json out = json::array();
    for (const auto& s : specs) {
        out.push_back(matrix_spec(s, features_as_rows));
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto& f : split_csv_line(text)) {
        if (!trim(f).empty()) {
            out.push_back(trim(f));
        }
    }
    return out;
}

std::vector<std::size_t> size_list(const std::string& text, const char* flag) {
    std::vector<std::size_t> out;
    for (const auto& f : split_list(text)) {
        const auto v = parse_double(f);
        if (!v || *v < 0 || *v != std::floor(*v)) {
            throw ConfigError(std::string(flag) + ": '" + f + "' is not a non-negative integer");
        }
        out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
}

std::vector<double> double_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& f : split_list(text)) {
        const auto v = parse_double(f);
        if (!v) {
            throw ConfigError(std::string(flag) + ": '" + f + "' is not a number");
        }
        out.push_back(*v);
    }
    return out;
}

// shared flags describing where a stage reads its data
struct InputFlags {
    std::vector<std::string> matrices;
    bool features_as_rows = false;
    std::string clinical, phenotype, phenotype_kind = "categorical", graph, embedding;

    void add_matrices(CLI::App* app, bool required) {
        auto* o = app->add_option("--matrix", matrices, "Omics matrix as TAG=PATH (repeatable); subjects as rows");
        if (required) {
            o->required();
        }
        app->add_flag("--features-as-rows", features_as_rows, "Matrices store features as rows");
    }
    void add_phenotype(CLI::App* app) {
        app->add_option("--clinical", clinical, "Clinical table (text columns are one-hot encoded)");
        app->add_option("--phenotype", phenotype, "Phenotype CSV: subject,<value>");
        app->add_option("--phenotype-kind", phenotype_kind, "categorical or continuous")->capture_default_str();
    }
    void add_graph(CLI::App* app, bool required) {
        auto* o = app->add_option("--graph", graph, "Edge-list CSV (node order read from <stem>.nodes.csv)");
        if (required) {
            o->required();
        }
    }

    json to_json() const {
        json in = json::object();
        if (!matrices.empty()) in["matrices"] = matrices_json(matrices, features_as_rows);
        if (!clinical.empty()) in["clinical"] = clinical;
        if (!phenotype.empty()) in["phenotype"] = phenotype;
        in["phenotype_kind"] = phenotype_kind;
        if (!graph.empty()) in["graph"] = graph;
        if (!embedding.empty()) in["embedding"] = embedding;
        return in;
    }
};

struct Common {
    std::string out = "omicsnet_out";
    std::uint64_t seed = 0;

    void add(CLI::App* app, bool seeded = true) {
        app->add_option("--out", out, "Output directory")->capture_default_str();
        if (seeded) {
            app->add_option("--seed", seed, "Global seed; stage seeds are derived from it")->capture_default_str();
        }
    }
};

int run_stage(const Common& common, const std::string& stage, json block) {
    json cfg = {{"seed", common.seed}, {"output_dir", common.out}, {stage, std::move(block)}};
    const RunConfig rc = parse_run_config(cfg, fs::current_path());
    const RunSummary s = execute_run(rc, std::cerr);
    for (const auto& a : s.artifacts) {
        std::cout << (rc.output_dir / a).string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"omicsnet: multi-omics feature networks, GNN embeddings and phenotype prediction"};
    app.require_subcommand(1);
    std::size_t threads = 1;
    app.add_option("--threads", threads, "Worker thread cap (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::function<int()> action;

    // run
    auto* run = app.add_subcommand("run", "Execute the stages of a JSON run configuration");
    std::string config_path, override_out;
    run->add_option("config", config_path, "Run configuration file")->required();
    run->add_option("--output-dir", override_out, "Override output_dir from the configuration");
    run->callback([&] {
        action = [&] {
            RunConfig rc = load_run_config(config_path);
            if (!override_out.empty()) {
                rc.output_dir = fs::absolute(override_out).lexically_normal();
            }
            execute_run(rc, std::cerr);
            std::cout << (rc.output_dir / "run_manifest.json").string() << '\n';
            return 0;
        };
    });

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load, align and validate omics matrices with a phenotype");
    Common ingest_c;
    std::vector<std::string> ingest_omics;
    bool ingest_rows = false;
    std::string ingest_clin, ingest_pheno, ingest_kind = "categorical", ingest_aliquots = "average";
    bool ingest_norm = false;
    std::string ingest_delim = "-";
    std::size_t ingest_fields = 3;
    ingest_c.add(ingest, false);
    ingest->add_option("--omics", ingest_omics, "Omics matrix as TAG=PATH (repeatable)")->required();
    ingest->add_flag("--features-as-rows", ingest_rows, "Matrices store features as rows");
    ingest->add_option("--clinical", ingest_clin, "Clinical table");
    ingest->add_option("--phenotype", ingest_pheno, "Phenotype CSV: subject,<value>")->required();
    ingest->add_option("--phenotype-kind", ingest_kind, "categorical or continuous")->capture_default_str();
    ingest->add_option("--aliquots", ingest_aliquots, "Duplicate subject rows: average or error")->capture_default_str();
    ingest->add_flag("--normalize-ids", ingest_norm, "Truncate subject IDs to their leading fields");
    ingest->add_option("--id-delimiter", ingest_delim, "Field delimiter for --normalize-ids")->capture_default_str();
    ingest->add_option("--id-fields", ingest_fields, "Fields kept by --normalize-ids")->capture_default_str();
    ingest->callback([&] {
        action = [&] {
            json b = {{"omics", matrices_json(ingest_omics, ingest_rows)},
                      {"phenotype", ingest_pheno},
                      {"phenotype_kind", ingest_kind},
                      {"aliquots", ingest_aliquots}};
            if (!ingest_clin.empty()) b["clinical"] = ingest_clin;
            if (ingest_norm) b["normalize_ids"] = {{"delimiter", ingest_delim}, {"keep_fields", ingest_fields}};
            return run_stage(ingest_c, "ingest", b);
        };
    });

    // select
    auto* sel = app.add_subcommand("select", "Score and keep the top features of each omics matrix");
    Common sel_c;
    InputFlags sel_in;
    std::string sel_method = "anova";
    SelectStage sel_d;
    sel_c.add(sel);
    sel_in.add_matrices(sel, true);
    sel_in.add_phenotype(sel);
    sel->add_option("--method", sel_method, "anova, correlation, variance or random_forest")->capture_default_str();
    sel->add_option("--top-k", sel_d.top_k, "Features kept per matrix")->capture_default_str();
    sel->add_option("--trees", sel_d.forest.n_trees, "Random forest size")->capture_default_str();
    sel->add_option("--max-depth", sel_d.forest.max_depth, "Tree depth limit (0 = none)")->capture_default_str();
    sel->add_option("--min-leaf", sel_d.forest.min_leaf, "Minimum samples per leaf")->capture_default_str();
    sel->add_option("--mtry", sel_d.forest.mtry, "Features tried per split (0 = sqrt(p))")->capture_default_str();
    sel->callback([&] {
        action = [&] {
            return run_stage(sel_c, "select",
                             {{"inputs", sel_in.to_json()},
                              {"method", sel_method},
                              {"top_k", sel_d.top_k},
                              {"n_trees", sel_d.forest.n_trees},
                              {"max_depth", sel_d.forest.max_depth},
                              {"min_leaf", sel_d.forest.min_leaf},
                              {"mtry", sel_d.forest.mtry}});
        };
    });

    // build-net
    auto* net = app.add_subcommand("build-net", "Build a feature network from omics matrices");
    Common net_c;
    InputFlags net_in;
    NetworkStage net_d;
    std::string net_method = "knn", net_metric = "cosine", net_mode = "union", net_corr = "pearson",
                net_prune = "none", net_betas;
    double net_prune_value = 0.0;
    net_c.add(net, false);
    net_in.add_matrices(net, true);
    net->add_option("--method", net_method, "knn, snn, similarity, correlation or soft_threshold")
        ->capture_default_str();
    net->add_option("--k", net_d.k, "Neighbours per feature (knn, snn)")->capture_default_str();
    net->add_option("--metric", net_metric, "cosine or euclidean (knn, similarity)")->capture_default_str();
    net->add_option("--mode", net_mode, "kNN symmetrization: union or mutual")->capture_default_str();
    net->add_option("--correlation", net_corr, "pearson or spearman")->capture_default_str();
    net->add_option("--prune", net_prune, "none, threshold or top_fraction")->capture_default_str();
    net->add_option("--prune-value", net_prune_value, "Threshold or kept fraction for --prune")->capture_default_str();
    net->add_option("--beta-grid", net_betas, "Comma-separated soft-threshold powers (default 1..20)");
    net->add_option("--target-r2", net_d.target_r2, "Scale-free fit target")->capture_default_str();
    net->add_option("--bins", net_d.n_bins, "Connectivity bins for the scale-free fit")->capture_default_str();
    net->callback([&] {
        action = [&] {
            json b = {{"inputs", net_in.to_json()},
                      {"method", net_method},
                      {"k", net_d.k},
                      {"metric", net_metric},
                      {"mode", net_mode},
                      {"correlation", net_corr},
                      {"prune", {{"kind", net_prune}, {"value", net_prune_value}}},
                      {"target_r2", net_d.target_r2},
                      {"n_bins", net_d.n_bins}};
            if (!net_betas.empty()) b["beta_grid"] = double_list(net_betas, "--beta-grid");
            return run_stage(net_c, "network", b);
        };
    });

    // cluster
    auto* clu = app.add_subcommand("cluster", "Detect feature communities (louvain, ppr, hybrid)");
    Common clu_c;
    InputFlags clu_in;
    ClusterStage clu_d;
    std::string clu_method = "louvain";
    clu_c.add(clu);
    clu_in.add_graph(clu, true);
    clu_in.add_matrices(clu, false);
    clu_in.add_phenotype(clu);
    clu->add_option("--method", clu_method, "louvain, ppr or hybrid")->capture_default_str();
    clu->add_option("--resolution", clu_d.resolution, "Modularity resolution")->capture_default_str();
    clu->add_option("--damping", clu_d.ppr.damping, "PPR damping")->capture_default_str();
    clu->add_option("--tolerance", clu_d.ppr.tol, "PPR L1 convergence tolerance")->capture_default_str();
    clu->add_option("--max-iter", clu_d.ppr.max_iter, "PPR iteration limit")->capture_default_str();
    clu->add_option("--seed-node", clu_d.seed_nodes, "PPR seed node (repeatable; default: phenotype seeds)");
    clu->add_option("--mass", clu_d.mass_fraction, "Hybrid: PPR mass retained")->capture_default_str();
    clu->callback([&] {
        action = [&] {
            return run_stage(clu_c, "cluster",
                             {{"inputs", clu_in.to_json()},
                              {"method", clu_method},
                              {"resolution", clu_d.resolution},
                              {"damping", clu_d.ppr.damping},
                              {"tolerance", clu_d.ppr.tol},
                              {"max_iterations", clu_d.ppr.max_iter},
                              {"seed_nodes", clu_d.seed_nodes},
                              {"mass_fraction", clu_d.mass_fraction}});
        };
    });

    // embed
    auto* emb = app.add_subcommand("embed", "Train a GNN and export feature embeddings");
    Common emb_c;
    InputFlags emb_in;
    EmbedStage emb_d;
    std::string emb_layer = "gcn", emb_obj = "reconstruction", emb_hidden = "64";
    emb_c.add(emb);
    emb_in.add_graph(emb, true);
    emb_in.add_matrices(emb, true);
    emb_in.add_phenotype(emb);
    emb->add_option("--layer", emb_layer, "gcn, gat, sage or gin")->capture_default_str();
    emb->add_option("--hidden", emb_hidden, "Comma-separated hidden widths (empty for none)")->capture_default_str();
    emb->add_option("--dim", emb_d.embed_dim, "Embedding width")->capture_default_str();
    emb->add_option("--heads", emb_d.heads, "GAT attention heads")->capture_default_str();
    emb->add_option("--objective", emb_obj, "reconstruction or regression")->capture_default_str();
    emb->add_option("--lr", emb_d.lr, "Learning rate")->capture_default_str();
    emb->add_option("--momentum", emb_d.momentum, "SGD momentum")->capture_default_str();
    emb->add_option("--epochs", emb_d.epochs, "Training epochs")->capture_default_str();
    emb->callback([&] {
        action = [&] {
            return run_stage(emb_c, "embed",
                             {{"inputs", emb_in.to_json()},
                              {"layer", emb_layer},
                              {"hidden", size_list(emb_hidden, "--hidden")},
                              {"embed_dim", emb_d.embed_dim},
                              {"heads", emb_d.heads},
                              {"objective", emb_obj},
                              {"lr", emb_d.lr},
                              {"momentum", emb_d.momentum},
                              {"epochs", emb_d.epochs}});
        };
    });

    // predict
    auto* pre = app.add_subcommand("predict", "Joint GNN + classifier phenotype prediction over repeated splits");
    Common pre_c;
    InputFlags pre_in;
    DpmonConfig pre_d;
    std::string pre_gnn = "gcn", pre_red = "mean", pre_int = "feature_weight", pre_gnn_hidden = "64",
                pre_cls_hidden = "128", pre_split = "0.7,0.15,0.15", pre_seeds;
    bool pre_no_clin = false, pre_last = false;
    std::string tune_gnn, tune_dim, tune_lr, tune_epochs, tune_red, tune_int;
    std::size_t tune_max = 0;
    pre_c.add(pre);
    pre_in.add_graph(pre, true);
    pre_in.add_matrices(pre, true);
    pre_in.add_phenotype(pre);
    pre->add_option("--gnn", pre_gnn, "gcn, gat, sage or gin")->capture_default_str();
    pre->add_option("--gnn-hidden", pre_gnn_hidden, "Comma-separated GNN hidden widths")->capture_default_str();
    pre->add_option("--dim", pre_d.embed_dim, "Embedding width")->capture_default_str();
    pre->add_option("--heads", pre_d.gat_heads, "GAT attention heads")->capture_default_str();
    pre->add_option("--reduction", pre_red, "mean, max or autoencoder")->capture_default_str();
    pre->add_option("--integration", pre_int, "feature_weight or concatenate")->capture_default_str();
    pre->add_option("--weight-offset", pre_d.weight_offset, "Shift added to min-max weights")->capture_default_str();
    pre->add_option("--classifier-hidden", pre_cls_hidden, "Comma-separated classifier widths")->capture_default_str();
    pre->add_option("--lr", pre_d.lr, "Adam learning rate")->capture_default_str();
    pre->add_option("--epochs", pre_d.epochs, "Training epochs")->capture_default_str();
    pre->add_option("--split", pre_split, "Train,validation,test fractions")->capture_default_str();
    pre->add_option("--seeds", pre_seeds, "Comma-separated split seeds (default: 10 derived from --seed)");
    pre->add_flag("--no-clinical", pre_no_clin, "Leave clinical covariates out of the classifier");
    pre->add_flag("--last-epoch", pre_last, "Keep final parameters instead of the best validation epoch");
    pre->add_option("--tune-gnn", tune_gnn, "Tuning grid: layer kinds");
    pre->add_option("--tune-dim", tune_dim, "Tuning grid: embedding widths");
    pre->add_option("--tune-lr", tune_lr, "Tuning grid: learning rates");
    pre->add_option("--tune-epochs", tune_epochs, "Tuning grid: epoch counts");
    pre->add_option("--tune-reduction", tune_red, "Tuning grid: reductions");
    pre->add_option("--tune-integration", tune_int, "Tuning grid: integrations");
    pre->add_option("--tune-max", tune_max, "Evaluate a seeded random subset of this size (0 = all)")
        ->capture_default_str();
    pre->callback([&] {
        action = [&] {
            const auto split = double_list(pre_split, "--split");
            if (split.size() != 3) {
                throw ConfigError("--split needs three fractions");
            }
            json b = {{"inputs", pre_in.to_json()},
                      {"gnn", pre_gnn},
                      {"gnn_hidden", size_list(pre_gnn_hidden, "--gnn-hidden")},
                      {"embed_dim", pre_d.embed_dim},
                      {"gat_heads", pre_d.gat_heads},
                      {"reduction", pre_red},
                      {"integration", pre_int},
                      {"weight_offset", pre_d.weight_offset},
                      {"classifier_hidden", size_list(pre_cls_hidden, "--classifier-hidden")},
                      {"lr", pre_d.lr},
                      {"epochs", pre_d.epochs},
                      {"split", {{"train", split[0]}, {"validation", split[1]}, {"test", split[2]}}},
                      {"include_clinical", !pre_no_clin},
                      {"restore_best_validation", !pre_last}};
            if (!pre_seeds.empty()) b["seeds"] = size_list(pre_seeds, "--seeds");
            const bool tuning = !(tune_gnn + tune_dim + tune_lr + tune_epochs + tune_red + tune_int).empty();
            if (tuning) {
                b["tuning"] = {{"gnn", split_list(tune_gnn)},
                               {"embed_dim", size_list(tune_dim, "--tune-dim")},
                               {"lr", double_list(tune_lr, "--tune-lr")},
                               {"epochs", size_list(tune_epochs, "--tune-epochs")},
                               {"reduction", split_list(tune_red)},
                               {"integration", split_list(tune_int)},
                               {"max_configs", tune_max}};
            }
            return run_stage(pre_c, "predict", b);
        };
    });

    // represent
    auto* rep = app.add_subcommand("represent", "Project subjects through feature embeddings (S = X E)");
    Common rep_c;
    InputFlags rep_in;
    std::string rep_norm = "none";
    rep_c.add(rep, false);
    rep_in.add_matrices(rep, true);
    rep->add_option("--embedding", rep_in.embedding, "Embedding CSV: node,e1..ed")->required();
    rep->add_option("--normalize", rep_norm, "none or row_unit")->capture_default_str();
    rep->callback([&] {
        action = [&] {
            return run_stage(rep_c, "represent", {{"inputs", rep_in.to_json()}, {"normalize", rep_norm}});
        };
    });

    // export-coords
    auto* exp = app.add_subcommand("export-coords", "Write 2-D PCA coordinates of an embedding as node,x,y");
    std::string exp_in, exp_out;
    exp->add_option("--embedding", exp_in, "Embedding CSV: node,e1..ed")->required();
    exp->add_option("--out", exp_out, "Output CSV")->required();
    exp->callback([&] {
        action = [&] {
            std::ifstream in(exp_in);
            if (!in) {
                throw DataError("cannot open " + exp_in);
            }
            const EmbeddingMatrix e = read_embedding_csv(in);
            const Matrix xy = pca_coords(e.values);
            std::ofstream out(exp_out, std::ios::binary);
            out << "node,x,y\n";
            for (std::size_t i = 0; i < e.node_names.size(); ++i) {
                out << e.node_names[i] << ',' << format_double(xy(i, 0)) << ',' << format_double(xy(i, 1)) << '\n';
            }
            if (!out) {
                throw DataError("cannot write " + exp_out);
            }
            return 0;
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Write a planted-signal synthetic cohort");
    SyntheticCohortConfig sim_d;
    std::string sim_out = "synthetic";
    sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
    sim->add_option("--seed", sim_d.seed, "Generator seed")->capture_default_str();
    sim->add_option("--subjects", sim_d.n_subjects, "Number of subjects")->capture_default_str();
    sim->add_option("--classes", sim_d.n_classes, "Number of classes")->capture_default_str();
    sim->add_option("--informative", sim_d.n_informative, "Informative features")->capture_default_str();
    sim->add_option("--effect", sim_d.effect, "Class shift of informative features (noise SDs)")
        ->capture_default_str();
    sim->callback([&] {
        action = [&] {
            const SyntheticCohort c = make_planted_cohort(sim_d);
            fs::create_directories(sim_out);
            for (const auto& m : c.modalities) {
                save_omics_csv(fs::path(sim_out) / (m.modality + ".csv"), m);
            }
            save_phenotype_csv(fs::path(sim_out) / "phenotype.csv", c.phenotype);
            std::ofstream inf(fs::path(sim_out) / "informative.txt", std::ios::binary);
            for (const auto& f : c.informative) {
                inf << f << '\n';
            }
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        set_max_threads(threads);
        return action ? action() : 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
