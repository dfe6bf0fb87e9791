#include "helpers.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/featselect.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

using namespace omicsnet;

namespace {

OmicsMatrix column(std::vector<double> v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
        m(i, 0) = v[i];
    }
    return testing::omics(m);
}

PhenotypeVector groups(const std::vector<int>& g) {
    std::vector<std::string> labels;
    for (int v : g) {
        labels.push_back("g" + std::to_string(v));
    }
    return PhenotypeVector::categorical(testing::names("s", g.size()), labels);
}

PhenotypeVector outcome(std::vector<double> y) {
    auto ids = testing::names("s", y.size());
    return PhenotypeVector::continuous(std::move(ids), std::move(y));
}

const FeatureScore& by_name(const ScoreList& s, const std::string& name) {
    return *std::find_if(s.begin(), s.end(), [&](const FeatureScore& f) { return f.feature_name == name; });
}

void check_rank_invariant(const ScoreList& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i].rank == i + 1);
        if (i > 0) {
            CHECK(s[i - 1].score >= s[i].score);
        }
    }
}

// pooled two-sample t
double t_stat(const std::vector<double>& a, const std::vector<double>& b) {
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const double ma = mean(a);
    const double mb = mean(b);
    double ss = 0.0;
    for (double v : a) ss += (v - ma) * (v - ma);
    for (double v : b) ss += (v - mb) * (v - mb);
    const double na = a.size();
    const double nb = b.size();
    const double sp2 = ss / (na + nb - 2.0);
    return (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
}

} // namespace

TEST_SUITE("featselect") {

TEST_CASE("variance textbook values") {
    const auto s = variance_scores(column({1, 2, 3}));
    CHECK(s[0].score == 1.0);

    Matrix m{{1, 5}, {2, 5}, {3, 5}};
    const auto t = variance_scores(testing::omics(m));
    CHECK(t[1].feature_name == "f01");
    CHECK(t[1].score == 0.0);
    CHECK_THROWS_AS(variance_scores(column({1})), DataError);
}

TEST_CASE("variance matches a two-pass oracle") {
    std::mt19937_64 rng(1);
    const auto x = testing::omics(testing::random_matrix(10, 50, rng, 3.0));
    const auto s = variance_scores(x);
    check_rank_invariant(s);
    for (std::size_t c = 0; c < 50; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 10; ++i) mean += x.values(i, c);
        mean /= 10.0;
        double ss = 0.0;
        for (std::size_t i = 0; i < 10; ++i) ss += (x.values(i, c) - mean) * (x.values(i, c) - mean);
        CHECK(testing::rel_err(by_name(s, x.feature_names[c]).score, ss / 9.0) < 1e-12);
    }
}

TEST_CASE("anova closed-form examples") {
    CHECK(anova_f_scores(column({1, 2, 3, 4}), groups({0, 0, 1, 1}))[0].score == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(anova_f_scores(column({1, 3, 3, 1}), groups({0, 0, 1, 1}))[0].score == 0.0);
    const auto inf = anova_f_scores(column({1, 1, 2, 2}), groups({0, 0, 1, 1}));
    CHECK(std::isinf(inf[0].score));
    CHECK(inf[0].degenerate);

    Matrix m{{1, 1}, {2, 1}, {3, 2}, {4, 2}};
    const auto both = anova_f_scores(testing::omics(m), groups({0, 0, 1, 1}));
    CHECK(both[0].feature_name == "f01"); // +inf first
}

TEST_CASE("anova errors") {
    CHECK_THROWS_AS(anova_f_scores(column({1, 2}), groups({0, 1})), DataError);
    auto y = groups({0, 0, 1, 1});
    y.class_names.push_back("empty");
    CHECK_THROWS_AS(anova_f_scores(column({1, 2, 3, 4}), y), DataError);
}

TEST_CASE("two-group anova equals squared t") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> size(3, 20);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int na = size(rng);
        const int nb = size(rng);
        std::vector<double> a(na), b(nb), all;
        std::vector<int> g;
        for (auto& v : a) { v = n(rng); all.push_back(v); g.push_back(0); }
        const double shift = n(rng);
        for (auto& v : b) { v = n(rng) + shift; all.push_back(v); g.push_back(1); }
        const double f = anova_f_scores(column(all), groups(g))[0].score;
        const double t = t_stat(a, b);
        CHECK(testing::rel_err(f, t * t) < 1e-10);
    }
}

TEST_CASE("continuous outcome is binned into quartiles") {
    const auto y = outcome({8, 1, 5, 3, 2, 7, 4, 6});
    const auto b = quartile_bins(y);
    CHECK(b.n_classes() == 4);
    CHECK(b.labels() == std::vector<std::size_t>{3, 0, 2, 1, 0, 3, 1, 2});
    CHECK_NOTHROW(anova_f_scores(column({1, 2, 3, 4, 5, 6, 7, 8}), y));
}

TEST_CASE("correlation ranking") {
    CHECK(correlation_ranking(column({1, 2, 3}), outcome({1, 2, 4}))[0].score == doctest::Approx(0.98198).epsilon(1e-4));
    const std::vector<double> y{0.3, -1.0, 2.2, 0.7, 5.0};
    std::vector<double> neg;
    for (double v : y) neg.push_back(-v);
    CHECK(correlation_ranking(column(y), outcome(y))[0].score == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(correlation_ranking(column(neg), outcome(y))[0].score == doctest::Approx(1.0).epsilon(1e-14));
    const auto flat = correlation_ranking(column({2, 2, 2, 2, 2}), outcome(y));
    CHECK(flat[0].score == 0.0);
    CHECK(flat[0].degenerate);
    CHECK_THROWS_AS(correlation_ranking(column({1, 2, 3}), outcome({1, 1, 1})), DataError);
}

TEST_CASE("selectors are invariant to subject order") {
    std::mt19937_64 rng(4);
    const auto x = testing::omics(testing::random_matrix(30, 8, rng));
    std::vector<int> g(30);
    std::vector<double> yc(30);
    std::normal_distribution<double> n;
    for (std::size_t i = 0; i < 30; ++i) {
        g[i] = static_cast<int>(i % 3);
        yc[i] = n(rng);
    }
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    OmicsMatrix xp = x;
    std::vector<int> gp(30);
    std::vector<double> ycp(30);
    for (std::size_t i = 0; i < 30; ++i) {
        std::copy(x.values.row(perm[i]).begin(), x.values.row(perm[i]).end(), xp.values.row(i).begin());
        gp[i] = g[perm[i]];
        ycp[i] = yc[perm[i]];
    }
    auto same = [](const ScoreList& a, const ScoreList& b) {
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(testing::rel_err(a[k].score, by_name(b, a[k].feature_name).score) < 1e-12);
        }
    };
    same(variance_scores(x), variance_scores(xp));
    same(anova_f_scores(x, groups(g)), anova_f_scores(xp, groups(gp)));
    same(correlation_ranking(x, outcome(yc)), correlation_ranking(xp, outcome(ycp)));
}

TEST_CASE("forest importance") {
    SUBCASE("single feature gets everything") {
        std::vector<double> v;
        std::vector<int> g;
        for (int i = 0; i < 20; ++i) {
            v.push_back(i);
            g.push_back(i < 10 ? 0 : 1);
        }
        const auto s = rf_importance(column(v), groups(g));
        CHECK(s[0].score == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("separating feature beats noise for every seed") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n;
        Matrix m(40, 2);
        std::vector<int> g(40);
        for (std::size_t i = 0; i < 40; ++i) {
            g[i] = i < 20 ? 0 : 1;
            m(i, 0) = g[i] ? 5.0 + n(rng) * 0.1 : n(rng) * 0.1;
            m(i, 1) = n(rng);
        }
        const auto x = testing::omics(m);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            ForestConfig cfg;
            cfg.seed = seed;
            const auto s = rf_importance(x, groups(g), cfg);
            CHECK(by_name(s, "f00").score > by_name(s, "f01").score);
            double total = 0.0;
            for (const auto& f : s) {
                CHECK(f.score >= 0.0);
                total += f.score;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("column permutation permutes importances") {
        std::mt19937_64 rng(8);
        const auto x = testing::omics(testing::random_matrix(30, 6, rng));
        std::vector<int> g(30);
        for (std::size_t i = 0; i < 30; ++i) {
            g[i] = x.values(i, 2) + 0.5 * x.values(i, 4) > 0 ? 1 : 0;
        }
        std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
        OmicsMatrix xp = x;
        for (std::size_t c = 0; c < 6; ++c) {
            xp.feature_names[c] = x.feature_names[perm[c]];
            for (std::size_t i = 0; i < 30; ++i) {
                xp.values(i, c) = x.values(i, perm[c]);
            }
        }
        ForestConfig cfg;
        cfg.seed = 3;
        cfg.n_trees = 30;
        const auto a = rf_importance(x, groups(g), cfg);
        const auto b = rf_importance(xp, groups(g), cfg);
        for (const auto& f : a) {
            CHECK(testing::rel_err(f.score, by_name(b, f.feature_name).score) < 1e-12);
        }
    }
    SUBCASE("regression forest on continuous outcome") {
        std::mt19937_64 rng(9);
        const auto x = testing::omics(testing::random_matrix(50, 4, rng));
        std::vector<double> y(50);
        for (std::size_t i = 0; i < 50; ++i) {
            y[i] = 3.0 * x.values(i, 1);
        }
        const auto s = rf_importance(x, outcome(y));
        CHECK(s[0].feature_name == "f01");
    }
    SUBCASE("too few subjects") {
        CHECK_THROWS_AS(rf_importance(column({1, 2, 3, 4}), groups({0, 0, 1, 1})), DataError);
    }
}

TEST_CASE("top_k") {
    ScoreList s{{"b", 1.0, 0, false}, {"a", 1.0, 0, false}, {"c", 3.0, 0, false}, {"d", 0.5, 0, false}};
    const auto ranked = rank_scores(s);
    check_rank_invariant(ranked);
    CHECK(top_k(ranked, 4) == std::vector<std::string>{"c", "a", "b", "d"});
    CHECK(top_k(ranked, 2) == std::vector<std::string>{"c", "a"});
    CHECK_THROWS_AS(top_k(ranked, 5), DataError);
    CHECK(kDefaultTopK == 6000);

    std::mt19937_64 rng(10);
    const auto v = variance_scores(testing::omics(testing::random_matrix(8, 40, rng)));
    for (std::size_t k = 1; k < 40; ++k) {
        const auto small = top_k(v, k);
        const auto big = top_k(v, k + 1);
        CHECK(std::equal(small.begin(), small.end(), big.begin()));
    }
}

TEST_CASE("selection overlap") {
    const std::vector<std::string> a{"x", "y", "z"};
    const std::vector<std::string> b{"p", "q"};
    const std::vector<std::vector<std::string>> same{a, a};
    CHECK(selection_overlap(same)[0].count == 3);
    const std::vector<std::vector<std::string>> disjoint{a, b};
    CHECK(selection_overlap(disjoint)[0].count == 0);

    std::mt19937_64 rng(11);
    std::vector<std::string> pool;
    for (int i = 0; i < 1000; ++i) {
        pool.push_back("g" + std::to_string(i));
    }
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<std::string>> lists;
        for (int k = 0; k < 3; ++k) {
            auto p = pool;
            std::shuffle(p.begin(), p.end(), rng);
            p.resize(100);
            lists.push_back(p);
        }
        const auto got = selection_overlap(lists);
        REQUIRE(got.size() == 4);
        for (const auto& o : got) {
            std::unordered_set<std::string> acc(lists[o.lists[0]].begin(), lists[o.lists[0]].end());
            for (std::size_t q = 1; q < o.lists.size(); ++q) {
                std::unordered_set<std::string> next;
                for (const auto& name : lists[o.lists[q]]) {
                    if (acc.count(name)) {
                        next.insert(name);
                    }
                }
                acc = std::move(next);
            }
            CHECK(o.count == acc.size());
        }
    }
}

} // TEST_SUITE
