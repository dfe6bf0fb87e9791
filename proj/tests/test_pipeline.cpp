#include "cohort.hpp"
#include "helpers.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

using namespace omicsnet;

namespace {

double max_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows() == b.rows());
    REQUIRE(a.cols() == b.cols());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

Matrix naive_product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
    return out;
}

DpmonConfig quick_config() {
    DpmonConfig cfg;
    cfg.gnn_hidden = {16};
    cfg.embed_dim = 8;
    cfg.classifier_hidden = {32};
    cfg.epochs = 60;
    cfg.seeds = {0, 1, 2};
    return cfg;
}

std::string report_csv(const PredictionReport& r) {
    std::ostringstream os;
    write_report_csv(os, r);
    return os.str();
}

// softmax regression by batch gradient descent, an independent learnability check
double logistic_accuracy(const Matrix& x, const std::vector<std::size_t>& y, std::size_t k,
                         const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
    const std::size_t p = x.cols();
    Matrix w(p + 1, k);
    for (int it = 0; it < 500; ++it) {
        Matrix grad(p + 1, k);
        for (std::size_t i : train) {
            std::vector<double> z(k, 0.0);
            for (std::size_t c = 0; c < k; ++c) {
                z[c] = w(p, c);
                for (std::size_t j = 0; j < p; ++j) z[c] += x(i, j) * w(j, c);
            }
            const double mx = *std::max_element(z.begin(), z.end());
            double s = 0.0;
            for (double& v : z) s += (v = std::exp(v - mx));
            for (std::size_t c = 0; c < k; ++c) {
                const double d = z[c] / s - (y[i] == c ? 1.0 : 0.0);
                for (std::size_t j = 0; j < p; ++j) grad(j, c) += d * x(i, j);
                grad(p, c) += d;
            }
        }
        for (std::size_t q = 0; q < w.size(); ++q) w.data()[q] -= 0.5 * grad.data()[q] / train.size();
    }
    std::size_t hit = 0;
    for (std::size_t i : test) {
        std::size_t best = 0;
        double best_z = -1e300;
        for (std::size_t c = 0; c < k; ++c) {
            double z = w(p, c);
            for (std::size_t j = 0; j < p; ++j) z += x(i, j) * w(j, c);
            if (z > best_z) {
                best_z = z;
                best = c;
            }
        }
        hit += best == y[i];
    }
    return static_cast<double>(hit) / test.size();
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("metrics hand arithmetic") {
    const std::vector<std::size_t> t{0, 0, 1};
    const std::vector<std::size_t> p{0, 0, 0};
    const auto m = compute_metrics(t, p, 2);
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(m.per_class_f1[0] == doctest::Approx(0.8));
    CHECK(m.per_class_f1[1] == 0.0);
    CHECK(m.f1_macro == doctest::Approx(0.4));
    CHECK(m.f1_weighted == doctest::Approx(2.0 / 3.0 * 0.8));

    const auto perfect = compute_metrics(t, t, 2);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1_macro == 1.0);
    CHECK(perfect.f1_weighted == 1.0);

    const std::vector<std::size_t> bt{0, 0, 1, 1};
    const std::vector<std::size_t> bp{0, 1, 1, 1};
    const auto b = compute_metrics(bt, bp, 2);
    CHECK(b.f1_weighted == doctest::Approx(b.f1_macro).epsilon(1e-15));

    const std::vector<std::size_t> empty;
    CHECK_THROWS_AS(compute_metrics(empty, empty, 2), DataError);
    const std::vector<std::size_t> bad{5};
    const std::vector<std::size_t> ok{0};
    CHECK_THROWS_AS(compute_metrics(bad, ok, 2), DataError);
}

TEST_CASE("metrics match a brute-force tally") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> len(1, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + trial % 4;
        std::uniform_int_distribution<std::size_t> lab(0, k - 1);
        const std::size_t n = len(rng);
        std::vector<std::size_t> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = lab(rng);
            p[i] = lab(rng);
        }
        const auto m = compute_metrics(t, p, k);
        double correct = 0, macro = 0, weighted = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double tp = 0, fp = 0, fn = 0, support = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += t[i] == c && p[i] == c;
                fp += t[i] != c && p[i] == c;
                fn += t[i] == c && p[i] != c;
                support += t[i] == c;
                CHECK(m.confusion[t[i]][p[i]] > 0);
            }
            const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
            CHECK(m.per_class_f1[c] == doctest::Approx(f1).epsilon(1e-15));
            macro += f1 / k;
            weighted += f1 * support / n;
            correct += tp;
        }
        CHECK(m.accuracy == doctest::Approx(correct / n).epsilon(1e-15));
        CHECK(m.f1_macro == doctest::Approx(macro).epsilon(1e-13));
        CHECK(m.f1_weighted == doctest::Approx(weighted).epsilon(1e-13));
        CHECK(m.f1_macro <= *std::max_element(m.per_class_f1.begin(), m.per_class_f1.end()));
        const auto again = metrics_from_confusion(m.confusion);
        CHECK(again.accuracy == m.accuracy);
        CHECK(again.f1_macro == m.f1_macro);
        CHECK(again.f1_weighted == m.f1_weighted);
    }
}

TEST_CASE("summary uses the sample standard deviation") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    const std::vector<double> one{0.7};
    CHECK(summarize(one).std == 0.0);
}

TEST_CASE("embedding reductions") {
    const Matrix e{{1, 3}, {2, 4}};
    const auto mean = reduce_embeddings(e, ReductionMode::Mean, 0);
    CHECK(mean.raw == std::vector<double>{2, 3});
    CHECK(mean.weights == std::vector<double>{0.5, 1.5});
    const auto mx = reduce_embeddings(e, ReductionMode::Max, 0);
    CHECK(mx.raw == std::vector<double>{3, 4});
    const auto flat = reduce_embeddings(Matrix{{1, 1}, {1, 1}}, ReductionMode::Mean, 0);
    CHECK(flat.weights == std::vector<double>{1.0, 1.0});
    CHECK(parse_reduction("autoencoder") == ReductionMode::Autoencoder);
    CHECK_THROWS_AS(parse_reduction("median"), ConfigError);
}

TEST_CASE("autoencoder recovers a rank-one embedding") {
    std::mt19937_64 rng(2);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix u = testing::random_matrix(30, 1, rng);
        const Matrix v = testing::random_matrix(1, 8, rng, 3.0);
        const Matrix e = matmul(u, v);
        const auto ae = train_bottleneck_autoencoder(e, seed);
        REQUIRE(ae.loss_curve.size() > 1);
        CHECK(ae.loss_curve.back() < 0.01 * ae.loss_curve.front());
        // bottleneck tracks the latent factor up to sign and scale
        const auto code = ae.encode(e);
        std::vector<double> uu(u.data().begin(), u.data().end());
        double mu = 0, mc = 0;
        for (std::size_t i = 0; i < 30; ++i) {
            mu += uu[i] / 30;
            mc += code[i] / 30;
        }
        double suc = 0, suu = 0, scc = 0;
        for (std::size_t i = 0; i < 30; ++i) {
            suc += (uu[i] - mu) * (code[i] - mc);
            suu += (uu[i] - mu) * (uu[i] - mu);
            scc += (code[i] - mc) * (code[i] - mc);
        }
        CHECK(std::abs(suc) / std::sqrt(suu * scc) > 0.99);
    }
    const auto red = reduce_embeddings(testing::random_matrix(10, 4, rng), ReductionMode::Autoencoder, 3);
    for (double w : red.weights) {
        CHECK(w >= 0.5);
        CHECK(w <= 1.5);
    }
}

TEST_CASE("integration") {
    std::mt19937_64 rng(3);
    const Matrix x = testing::random_matrix(6, 4, rng);
    const std::vector<double> ones(4, 1.0);
    CHECK(integrate_feature_weight(x, ones) == x);
    const std::vector<double> w{2, 3};
    CHECK(integrate_feature_weight(identity(2), w) == Matrix{{2, 0}, {0, 3}});
    const Matrix e = testing::random_matrix(4, 3, rng);
    const Matrix cat = integrate_concatenate(x, e);
    CHECK(cat.cols() == 7);
    CHECK(max_diff(cat, [&] {
              Matrix want(6, 7);
              const Matrix s = naive_product(x, e);
              for (std::size_t i = 0; i < 6; ++i) {
                  for (std::size_t j = 0; j < 4; ++j) want(i, j) = x(i, j);
                  for (std::size_t j = 0; j < 3; ++j) want(i, 4 + j) = s(i, j);
              }
              return want;
          }()) < 1e-12);
    const std::vector<double> short_w{1.0};
    CHECK_THROWS(integrate_feature_weight(x, short_w));
}

TEST_CASE("subject representation") {
    std::mt19937_64 rng(4);
    const Matrix e = testing::random_matrix(8, 3, rng);
    CHECK(subject_representation(identity(8), e) == e);
    CHECK(subject_representation(testing::random_matrix(5, 8, rng), Matrix(8, 3)) == Matrix(5, 3));
    const Matrix x = testing::random_matrix(5, 8, rng);
    CHECK(max_diff(subject_representation(x, e), naive_product(x, e)) < 1e-12);

    const Matrix e2 = testing::random_matrix(8, 3, rng);
    Matrix combo(8, 3);
    for (std::size_t i = 0; i < combo.size(); ++i) combo.data()[i] = 1.7 * e.data()[i] - 0.4 * e2.data()[i];
    Matrix lin = subject_representation(x, e);
    const Matrix s2 = subject_representation(x, e2);
    for (std::size_t i = 0; i < lin.size(); ++i) lin.data()[i] = 1.7 * lin.data()[i] - 0.4 * s2.data()[i];
    CHECK(max_diff(subject_representation(x, combo), lin) < 1e-10);

    const Matrix unit = subject_representation(x, e, RowNormalization::RowUnit);
    for (std::size_t i = 0; i < 5; ++i) {
        double n = 0;
        for (double v : unit.row(i)) n += v * v;
        CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS(subject_representation(testing::random_matrix(5, 7, rng), e));

    const auto om = testing::omics(x, "m", "v");
    EmbeddingMatrix em;
    em.node_names = om.feature_names;
    em.values = e;
    const auto rep = subject_representation(om, em, RowNormalization::None);
    CHECK(rep.feature_names == std::vector<std::string>{"e1", "e2", "e3"});
    CHECK(rep.subject_ids == om.subject_ids);
    em.node_names[0] = "other";
    CHECK_THROWS_AS(subject_representation(om, em, RowNormalization::None), DataError);
}

TEST_CASE("pca coordinates") {
    const Matrix line{{-2, 0}, {0, 0}, {2, 0}, {4, 0}};
    const Matrix c = pca_coords(line);
    REQUIRE(c.cols() == 2);
    CHECK(max_diff(c, Matrix{{-3, 0}, {-1, 0}, {1, 0}, {3, 0}}) < 1e-12);
    const Matrix flipped{{2, 0}, {0, 0}, {-2, 0}, {-4, 0}};
    CHECK(max_diff(pca_coords(flipped), Matrix{{3, 0}, {1, 0}, {-1, 0}, {-3, 0}}) < 1e-12);

    // column order does not matter once signs are fixed
    std::mt19937_64 rng(5);
    const Matrix e = testing::random_matrix(20, 4, rng);
    Matrix perm(20, 4);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 4; ++j) perm(i, j) = e(i, (j + 1) % 4);
    CHECK(max_diff(pca_coords(e), pca_coords(perm)) < 1e-9);

    // 2-d input: a rotation, so pairwise distances survive
    const Matrix flat = testing::random_matrix(10, 2, rng);
    const Matrix pc = pca_coords(flat);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            const double d0 = std::hypot(flat(i, 0) - flat(j, 0), flat(i, 1) - flat(j, 1));
            const double d1 = std::hypot(pc(i, 0) - pc(j, 0), pc(i, 1) - pc(j, 1));
            CHECK(std::abs(d0 - d1) < 1e-10);
        }
    }
}

TEST_CASE("stratified split") {
    std::vector<std::size_t> y;
    for (std::size_t i = 0; i < 100; ++i) y.push_back(i < 60 ? 0 : (i < 90 ? 1 : 2));
    const auto s = stratified_split(y, 3, 0.7, 0.15, 4);
    std::set<std::size_t> all;
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
        std::set<std::size_t> classes;
        for (std::size_t i : *part) {
            classes.insert(y[i]);
            CHECK(all.insert(i).second);
        }
        CHECK(classes.size() == 3);
    }
    CHECK(all.size() == 100);
    // per class: 60 -> 9/9, 30 -> 5/5 (4.5 rounds away from zero), 10 -> 2/2
    CHECK(s.validation.size() == 9 + 5 + 2);
    CHECK(s.test.size() == 9 + 5 + 2);
    const auto again = stratified_split(y, 3, 0.7, 0.15, 4);
    CHECK(again.train == s.train);
    CHECK(stratified_split(y, 3, 0.7, 0.15, 5).train != s.train);

    const std::vector<std::size_t> tiny{0, 0, 0, 1, 1};
    CHECK_THROWS_AS(stratified_split(tiny, 2, 0.7, 0.15, 0), DataError);
}

TEST_CASE("config validation") {
    DpmonConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.train_fraction = 0.9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.gat_heads = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("node matrix resolves qualified and bare names") {
    const auto c = testing::planted_cohort();
    const std::vector<std::string> nodes{"mirna:mirna_03", "mrna_01"};
    const auto m = node_matrix(c.data, nodes);
    CHECK(m.n_features() == 2);
    CHECK(m.values(5, 1) == c.data.modality("mrna").values(5, 0));
    const std::vector<std::string> missing{"mrna:nope"};
    CHECK_THROWS_AS(node_matrix(c.data, missing), DataError);
}

TEST_CASE("planted signal is learnable by plain logistic regression") {
    const auto c = testing::planted_cohort();
    const auto x = node_matrix(c.data, c.informative);
    const auto y = c.data.phenotype.labels();
    const auto split = stratified_split(y, 3, 0.7, 0.15, 0);
    std::vector<std::size_t> rest = split.validation;
    rest.insert(rest.end(), split.test.begin(), split.test.end());
    CHECK(logistic_accuracy(x.values, y, 3, split.train, rest) > 0.9);
}

TEST_CASE("prediction beats the majority rate and is reproducible") {
    const auto c = testing::planted_cohort();
    const auto cfg = quick_config();
    const auto r = predict_phenotype(c.data, c.graph, cfg);
    REQUIRE(r.per_seed.size() == 3);
    CHECK(r.accuracy.mean > r.majority_rate.mean + 0.15);
    for (const auto& s : r.per_seed) {
        const auto m = metrics_from_confusion(s.test.confusion);
        CHECK(m.accuracy == s.test.accuracy);
        CHECK(s.best_epoch <= cfg.epochs);
    }
    CHECK(report_csv(predict_phenotype(c.data, c.graph, cfg)) == report_csv(r));
    CHECK(report_summary(r).find("+/-") != std::string::npos);

    auto concat = cfg;
    concat.integration = IntegrationMode::Concatenate;
    concat.reduction = ReductionMode::Max;
    CHECK_NOTHROW(predict_phenotype(c.data, c.graph, concat));
}

TEST_CASE("prediction needs a categorical phenotype") {
    auto c = testing::planted_cohort();
    std::vector<double> v(c.data.phenotype.size(), 1.0);
    c.data.phenotype = PhenotypeVector::continuous(c.data.phenotype.subject_ids, v);
    CHECK_THROWS_AS(predict_phenotype(c.data, c.graph, quick_config()), DataError);
}

TEST_CASE("grid expansion order") {
    DpmonConfig base;
    TuningGrid grid;
    grid.gnn_kinds = {LayerKind::Gcn, LayerKind::Sage};
    grid.lrs = {0.1, 0.01, 0.001};
    const auto all = expand_grid(base, grid);
    REQUIRE(all.size() == 6);
    CHECK(all[0].gnn_kind == LayerKind::Gcn);
    CHECK(all[0].lr == 0.1);
    CHECK(all[1].lr == 0.01);
    CHECK(all[3].gnn_kind == LayerKind::Sage);
    CHECK(all[5].embed_dim == base.embed_dim);

    grid.max_configs = 4;
    grid.seed = 9;
    const auto some = expand_grid(base, grid);
    CHECK(some.size() == 4);
    CHECK(expand_grid(base, grid).size() == 4);
    std::size_t pos = 0;
    for (const auto& cfg : some) {
        while (pos < all.size() && all[pos].summary() != cfg.summary()) ++pos;
        CHECK(pos < all.size()); // subset, in grid order
    }
}

TEST_CASE("tuning picks the working configuration") {
    const auto c = testing::planted_cohort();
    auto base = quick_config();
    base.seeds = {0, 1};

    TuningGrid single;
    const auto one = tune_hyperparameters(c.data, c.graph, base, single);
    CHECK(one.leaderboard.size() == 1);
    CHECK(one.best.summary() == base.summary());

    TuningGrid two;
    two.lrs = {0.0, 0.01};
    const auto t = tune_hyperparameters(c.data, c.graph, base, two);
    CHECK(t.leaderboard.size() == 2);
    CHECK(t.best.lr == 0.01);
    std::ostringstream os;
    write_leaderboard_csv(os, t);
    CHECK(os.str().rfind("index,val_f1_macro,accuracy,f1_macro,config\n", 0) == 0);
}

TEST_CASE("synthetic cohort") {
    const auto a = make_planted_cohort();
    const auto b = make_planted_cohort();
    REQUIRE(a.modalities.size() == 3);
    CHECK(a.modalities[0].values == b.modalities[0].values);
    CHECK(a.informative.size() == 10);
    CHECK(a.phenotype.size() == 200);
    std::size_t features = 0;
    for (const auto& m : a.modalities) features += m.n_features();
    CHECK(features == 60);
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t l : a.phenotype.labels()) ++counts[l];
    CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);

    const auto s = shuffled_labels(a.phenotype, 1);
    auto sorted_a = a.phenotype.labels();
    auto sorted_s = s.labels();
    std::sort(sorted_a.begin(), sorted_a.end());
    std::sort(sorted_s.begin(), sorted_s.end());
    CHECK(sorted_a == sorted_s);
    CHECK(s.labels() != a.phenotype.labels());
}

} // TEST_SUITE
