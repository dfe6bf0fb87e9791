// Acceptance checks, one PASS/FAIL line each. Exit status is the number of failures.

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "runs.hpp"

#include "omicsnet/community.hpp"
#include "omicsnet/featselect.hpp"
#include "omicsnet/netbuild.hpp"
#include "omicsnet/omics.hpp"
#include "omicsnet/pipeline.hpp"
#include "omicsnet/run.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

using namespace omicsnet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

template <class Fn>
void criterion(int id, const char* name, Fn&& fn) {
    try {
        std::ostringstream detail;
        const bool ok = fn(detail);
        report(id, name, ok, detail.str());
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

bool gradients(std::ostream& out) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (auto kind : {LayerKind::Gcn, LayerKind::Gat, LayerKind::Sage, LayerKind::Gin}) {
        double kind_worst = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(seed);
            const auto g = testing::random_graph(6, 0.5, rng);
            kind_worst = std::max(kind_worst, gradcheck::encoder_error(kind, g, seed));
        }
        out << to_string(kind) << " " << kind_worst << "; ";
        worst = std::max(worst, kind_worst);
    }
    const double t = seconds_since(t0);
    out << "worst " << worst << " (limit 1e-4), " << t << " s";
    return worst < 1e-4 && t < 60.0;
}

bool louvain_oracle(std::ostream& out) {
    const auto t0 = Clock::now();
    const auto g = testing::two_triangles();
    double best = -1.0;
    std::vector<std::size_t> arg;
    for (const auto& p : oracle::all_partitions(6)) {
        const double q = oracle::modularity(g, p);
        if (q > best + 1e-15) {
            best = q;
            arg = p;
        }
    }
    const auto p = louvain(g, 0);
    const bool exact = std::abs(p.modularity - 5.0 / 14.0) < 1e-12 && p.assignment == arg;
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto pp = testing::planted_partition(4, 8, 0.9, 0.05, rng);
        good += oracle::ari(louvain(pp.graph, seed).assignment, pp.labels) >= 0.9;
    }
    const double t = seconds_since(t0);
    out << "Q " << p.modularity << " vs optimum " << best << "; planted ARI>=0.9 in " << good << "/10; " << t
        << " s";
    return exact && good >= 9 && t < 30.0;
}

bool ppr_checks(std::ostream& out) {
    const FeatureGraph pair({"a", "b"}, {{0, 1, 1.0}});
    const std::vector<double> s2{1.0, 0.0};
    const auto two = personalized_pagerank(pair, s2);
    const bool closed = std::abs(two.scores[0] - 0.54054) < 1e-5 && std::abs(two.scores[1] - 0.45946) < 1e-5;

    double worst_sum = 0.0, worst_res = 0.0;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testing::random_graph(25, 0.15, rng);
        std::vector<double> s(25, 0.0);
        s[trial % 25] = 0.5;
        s[(trial * 7 + 3) % 25] += 0.5;
        const auto p = personalized_pagerank(g, s);
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.scores.begin(), p.scores.end(), 0.0) - 1.0));
        // ||p - ((1-d)s + d W^T p)||_1 with dangling mass sent back to s
        const Matrix a = oracle::dense(g);
        std::vector<double> rhs(25, 0.0);
        double dangling = 0.0;
        for (std::size_t i = 0; i < 25; ++i) {
            double deg = 0.0;
            for (std::size_t j = 0; j < 25; ++j) deg += a(i, j);
            if (deg == 0.0) {
                dangling += p.scores[i];
                continue;
            }
            for (std::size_t j = 0; j < 25; ++j) rhs[j] += 0.85 * p.scores[i] * a(i, j) / deg;
        }
        double r = 0.0;
        for (std::size_t j = 0; j < 25; ++j) r += std::abs(p.scores[j] - rhs[j] - 0.15 * s[j] - 0.85 * dangling * s[j]);
        worst_res = std::max(worst_res, r);
    }
    out << "2-node (" << two.scores[0] << ", " << two.scores[1] << "); worst |sum-1| " << worst_sum
        << "; worst residual " << worst_res;
    return closed && worst_sum < 1e-10 && worst_res < 1e-9;
}

bool network_oracles(std::ostream& out) {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto x = testing::omics(testing::random_matrix(12, 30, rng));
        if (trial % 2) {
            for (double& v : x.values.data()) v = std::abs(v) + 0.1;
        }
        const Matrix pe = oracle::pairwise(x, oracle::Assoc::Pearson);
        const Matrix cs = oracle::pairwise(x, oracle::Assoc::Cosine);
        const Matrix es = oracle::pairwise(x, oracle::Assoc::Euclid);
        Matrix cubed = pe;
        for (double& v : cubed.data()) v = v * v * v;
        const std::vector<double> three{3.0};
        const double diffs[] = {
            oracle::max_graph_diff(correlation_network(x, CorrelationMethod::Pearson), pe),
            oracle::max_graph_diff(correlation_network(x, CorrelationMethod::Spearman),
                                   oracle::pairwise(x, oracle::Assoc::Spearman)),
            oracle::max_graph_diff(similarity_network(x, SimilarityMetric::Cosine), cs),
            oracle::max_graph_diff(similarity_network(x, SimilarityMetric::Euclidean), es),
            oracle::max_graph_diff(soft_threshold_network(x, three, 2.0).graph, cubed),
            oracle::max_graph_diff(knn_graph(x, 5, SimilarityMetric::Cosine), oracle::knn_weights(x, 5, cs)),
            oracle::max_graph_diff(knn_graph(x, 4, SimilarityMetric::Euclidean), oracle::knn_weights(x, 4, es)),
            oracle::max_graph_diff(snn_graph(x, 6), oracle::snn_weights(x, 6)),
        };
        for (double d : diffs) worst = std::max(worst, d);
    }
    bool beta_one = true;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = testing::omics(testing::random_matrix(20, 30, rng));
        const std::vector<double> one{1.0};
        const auto st = soft_threshold_network(x, one);
        const auto cn = correlation_network(x, CorrelationMethod::Pearson);
        beta_one = beta_one && st.graph.num_edges() == cn.num_edges();
        for (std::size_t e = 0; beta_one && e < cn.num_edges(); ++e) {
            const auto& a = st.graph.edges()[e];
            const auto& b = cn.edges()[e];
            beta_one = a.i == b.i && a.j == b.j && a.weight == b.weight;
        }
    }
    out << "worst deviation " << worst << " (limit 1e-10); beta=1 identical: " << (beta_one ? "yes" : "no");
    return worst < 1e-10 && beta_one;
}

bool anova_t(std::ostream& out) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> size(3, 25);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int na = size(rng);
        const int nb = size(rng);
        std::vector<double> a(na), b(nb);
        Matrix m(na + nb, 1);
        std::vector<std::string> labels;
        const double shift = n(rng);
        for (int i = 0; i < na; ++i) {
            m(i, 0) = a[i] = n(rng);
            labels.push_back("a");
        }
        for (int i = 0; i < nb; ++i) {
            m(na + i, 0) = b[i] = n(rng) + shift;
            labels.push_back("b");
        }
        const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
        const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
        double ss = 0.0;
        for (double v : a) ss += (v - ma) * (v - ma);
        for (double v : b) ss += (v - mb) * (v - mb);
        const double t = (ma - mb) / std::sqrt(ss / (na + nb - 2.0) * (1.0 / na + 1.0 / nb));
        const auto y = PhenotypeVector::categorical(testing::names("s", na + nb), labels);
        const double f = anova_f_scores(testing::omics(m), y)[0].score;
        worst = std::max(worst, testing::rel_err(f, t * t));
    }
    out << "worst relative error " << worst << " over 100 instances";
    return worst < 1e-10;
}

// bundled cohort through the default selection and network settings
struct Bundled {
    AlignedDataset data;
    FeatureGraph graph;
};

Bundled bundled_cohort() {
    const std::string dir = OMICSNET_DATA "/synthetic/";
    std::vector<OmicsMatrix> mats;
    for (const char* m : {"mrna", "methylation", "mirna"}) {
        mats.push_back(load_omics_csv(dir + m + ".csv", m, Orientation::SubjectsAsRows));
    }
    const auto y = load_phenotype_csv(dir + "phenotype.csv", PhenotypeKind::Categorical);
    Bundled b;
    b.data = align_cohort(mats, y, AliquotPolicy::Error);
    std::vector<std::string> tags;
    for (auto& m : b.data.modalities) {
        const auto keep = top_k(anova_f_scores(m, b.data.phenotype), std::min(kDefaultTopK, m.n_features()));
        m = select_features(m, keep);
        tags.push_back(m.modality);
    }
    b.graph = knn_graph(concat_modalities(b.data, tags), kDefaultKnnK);
    return b;
}

bool planted_signal(std::ostream& out) {
    const auto t0 = Clock::now();
    auto b = bundled_cohort();
    std::size_t features = 0;
    for (const auto& m : b.data.modalities) features += m.n_features();
    DpmonConfig cfg;
    cfg.seeds.resize(10);
    std::iota(cfg.seeds.begin(), cfg.seeds.end(), 0);
    const auto real = predict_phenotype(b.data, b.graph, cfg);
    b.data.phenotype = shuffled_labels(b.data.phenotype, 99);
    const auto shuffled = predict_phenotype(b.data, b.graph, cfg);
    const double t = seconds_since(t0);
    const double acc = real.accuracy.mean;
    const double base = real.majority_rate.mean;
    const double gap = shuffled.accuracy.mean - shuffled.majority_rate.mean;
    out << b.data.subject_ids().size() << " subjects, " << features << " features; accuracy " << acc << " +/- "
        << real.accuracy.std << " vs majority " << base << "; shuffled " << shuffled.accuracy.mean << " vs majority "
        << shuffled.majority_rate.mean << "; " << t << " s";
    return acc >= 0.85 && acc - base >= 0.15 && std::abs(gap) <= 0.1 && t < 600.0;
}

bool determinism(std::ostream& out) {
    testing::TempDir tmp("acceptance_runs");
    std::ostringstream log;
    const auto t0 = Clock::now();
    execute_run(testing::example_config(tmp.path / "first"), log);
    execute_run(testing::example_config(tmp.path / "second"), log);
    const auto a = testing::tree(tmp.path / "first", false);
    const auto b = testing::tree(tmp.path / "second", false);
    std::size_t differing = 0;
    for (const auto& [path, bytes] : a) {
        const auto it = b.find(path);
        differing += it == b.end() || it->second != bytes;
    }
    out << a.size() << " artifacts, " << differing << " differ, " << (a.size() == b.size() ? "same" : "different")
        << " file sets; " << seconds_since(t0) << " s for two runs";
    return !a.empty() && a.size() == b.size() && differing == 0;
}

OmicsMatrix fuzzed_omics(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 30);
    std::uniform_int_distribution<int> kind(0, 9);
    std::normal_distribution<double> n;
    std::uniform_int_distribution<int> expo(-300, 300);
    const std::size_t rows = dim(rng), cols = dim(rng);
    OmicsMatrix m;
    m.modality = "fuzz";
    for (std::size_t i = 0; i < rows; ++i) m.subject_ids.push_back("TCGA-" + std::to_string(rng() % 100000) + "-" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) m.feature_names.push_back("g" + std::to_string(j) + "|" + std::to_string(rng() % 1000));
    m.values = Matrix(rows, cols);
    for (double& v : m.values.data()) {
        switch (kind(rng)) {
        case 0: v = std::numeric_limits<double>::quiet_NaN(); break;
        case 1: v = 0.0; break;
        case 2: v = n(rng) * std::pow(10.0, expo(rng)); break;
        case 3: v = std::round(n(rng) * 1000.0); break;
        case 4: v = std::numeric_limits<double>::denorm_min() * (rng() % 1000 + 1); break;
        default: v = n(rng);
        }
    }
    return m;
}

bool round_trips(std::ostream& out) {
    std::mt19937_64 rng(8);
    int omics_ok = 0, graph_ok = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = fuzzed_omics(rng);
        std::ostringstream first;
        write_omics_csv(first, m);
        std::istringstream in(first.str());
        const auto back = read_omics_csv(in, "fuzz", Orientation::SubjectsAsRows);
        std::ostringstream second;
        write_omics_csv(second, back);
        omics_ok += first.str() == second.str();

        std::uniform_int_distribution<std::size_t> size(2, 60);
        std::uniform_real_distribution<double> density(0.0, 0.6);
        const auto g = testing::random_graph(size(rng), density(rng), rng);
        std::ostringstream e1;
        write_edge_list(e1, g);
        std::istringstream ein(e1.str());
        const auto gb = read_edge_list(ein, g.node_names());
        std::ostringstream e2;
        write_edge_list(e2, gb);
        graph_ok += e1.str() == e2.str();
    }
    out << "omics " << omics_ok << "/100, edge lists " << graph_ok << "/100 byte-identical";
    return omics_ok == 100 && graph_ok == 100;
}

} // namespace

int main() {
    criterion(1, "gradient correctness", gradients);
    criterion(2, "louvain oracle", louvain_oracle);
    criterion(3, "ppr conservation and fixed point", ppr_checks);
    criterion(4, "network builder oracles", network_oracles);
    criterion(5, "anova equals squared t", anova_t);
    criterion(6, "planted signal end to end", planted_signal);
    criterion(7, "determinism", determinism);
    criterion(8, "round trips", round_trips);
    return failures;
}
