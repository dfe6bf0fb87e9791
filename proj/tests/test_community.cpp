#include "helpers.hpp"
#include "oracles.hpp"

#include "omicsnet/community.hpp"
#include "omicsnet/errors.hpp"

#include <doctest.h>

#include <numeric>
#include <set>
#include <sstream>

using namespace omicsnet;

namespace {

FeatureGraph scaled(const FeatureGraph& g, double s) {
    std::vector<Edge> e = g.edges();
    for (auto& x : e) {
        x.weight *= s;
    }
    return FeatureGraph(g.node_names(), e);
}

// residual of the fixed-point equation, dangling mass returned to the seed
double ppr_residual(const FeatureGraph& g, const std::vector<double>& s, const std::vector<double>& p, double d) {
    const std::size_t n = g.num_nodes();
    const Matrix a = oracle::dense(g);
    std::vector<double> rhs(n, 0.0);
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg == 0.0) {
            dangling += p[i];
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) rhs[j] += d * p[i] * a(i, j) / deg;
    }
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        rhs[j] += (1.0 - d) * s[j] + d * dangling * s[j];
        r += std::abs(p[j] - rhs[j]);
    }
    return r;
}

} // namespace

TEST_SUITE("community") {

TEST_CASE("modularity closed forms") {
    const auto g = testing::two_triangles();
    const std::vector<std::size_t> one(6, 0);
    CHECK(std::abs(modularity(g, one)) < 1e-15);
    const std::vector<std::size_t> tri{0, 0, 0, 1, 1, 1};
    CHECK(std::abs(modularity(g, tri) - 5.0 / 14.0) < 1e-12);
    CHECK(std::abs(modularity(scaled(g, 7.3), tri) - 5.0 / 14.0) < 1e-12);

    const FeatureGraph empty({"a", "b"}, {});
    const std::vector<std::size_t> two{0, 1};
    CHECK_THROWS_AS(modularity(empty, two), DataError);
    const std::vector<std::size_t> short_assign{0};
    CHECK_THROWS_AS(modularity(g, short_assign), DataError);
}

TEST_CASE("modularity matches the double-loop oracle") {
    std::mt19937_64 rng(1);
    int checked = 0;
    while (checked < 50) {
        const auto g = testing::random_graph(12, 0.3, rng);
        if (g.num_edges() == 0) continue;
        std::uniform_int_distribution<std::size_t> lab(0, 3);
        std::vector<std::size_t> c(12);
        for (auto& v : c) v = lab(rng);
        CHECK(std::abs(modularity(g, c) - oracle::modularity(g, c)) < 1e-12);
        CHECK(std::abs(modularity(g, c, 0.5) - oracle::modularity(g, c, 0.5)) < 1e-12);
        CHECK(std::abs(modularity(scaled(g, 7.3), c) - modularity(g, c)) < 1e-12);
        ++checked;
    }
}

TEST_CASE("louvain separates disjoint triangles for any seed") {
    const auto g = testing::two_triangles(false);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = louvain(g, seed);
        CHECK(p.assignment == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});
        CHECK(p.num_communities() == 2);
    }
}

TEST_CASE("louvain reaches the exhaustive optimum on the bridged triangles") {
    const auto g = testing::two_triangles();
    const auto parts = oracle::all_partitions(6);
    CHECK(parts.size() == 203);
    double best = -1.0;
    std::vector<std::size_t> arg;
    for (const auto& p : parts) {
        const double q = oracle::modularity(g, p);
        if (q > best + 1e-15) {
            best = q;
            arg = p;
        }
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = louvain(g, seed);
        CHECK(std::abs(p.modularity - 5.0 / 14.0) < 1e-12);
        CHECK(std::abs(p.modularity - best) < 1e-12);
        CHECK(p.assignment == arg);
    }
}

TEST_CASE("louvain recovers planted blocks") {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto pp = testing::planted_partition(4, 8, 0.9, 0.05, rng);
        const auto p = louvain(pp.graph, seed);
        const double ari = adjusted_rand_index(p.assignment, pp.labels);
        CHECK(std::abs(ari - oracle::ari(p.assignment, pp.labels)) < 1e-12);
        good += ari >= 0.9;
    }
    CHECK(good >= 9);
}

TEST_CASE("louvain invariants") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testing::random_graph(25, 0.15, rng);
        if (g.num_edges() == 0) continue;
        const auto p = louvain(g, trial);
        // contiguous IDs by first appearance
        std::size_t next = 0;
        for (std::size_t c : p.assignment) {
            CHECK(c <= next);
            if (c == next) ++next;
        }
        CHECK(std::abs(p.modularity - oracle::modularity(g, p.assignment)) < 1e-12);
        for (std::size_t l = 1; l < p.level_modularity.size(); ++l) {
            CHECK(p.level_modularity[l] >= p.level_modularity[l - 1] - 1e-12);
        }
        std::vector<std::size_t> singletons(g.num_nodes());
        std::iota(singletons.begin(), singletons.end(), 0);
        CHECK(p.modularity >= modularity(g, singletons) - 1e-12);
        // same seed, same answer
        CHECK(louvain(g, trial).assignment == p.assignment);
    }
}

TEST_CASE("resolution controls module size") {
    std::mt19937_64 rng(3);
    const auto pp = testing::planted_partition(4, 8, 0.9, 0.05, rng);
    CHECK(louvain(pp.graph, 0, 0.05).num_communities() <= louvain(pp.graph, 0, 3.0).num_communities());
    CHECK_THROWS_AS(louvain(pp.graph, 0, 0.0), ConfigError);
    CHECK_THROWS_AS(louvain(FeatureGraph({"a", "b"}, {}), 0), DataError);
}

TEST_CASE("ppr closed forms") {
    const FeatureGraph single({"x"}, {});
    const std::vector<double> s1{1.0};
    CHECK(personalized_pagerank(single, s1).scores[0] == doctest::Approx(1.0).epsilon(1e-12));

    const FeatureGraph pair({"a", "b"}, {{0, 1, 1.0}});
    const std::vector<double> s2{1.0, 0.0};
    const auto p = personalized_pagerank(pair, s2);
    // p0 = 0.15 + 0.85 p1, p1 = 0.85 p0
    const double p0 = 0.15 / (1.0 - 0.85 * 0.85);
    CHECK(std::abs(p.scores[0] - p0) < 1e-9);
    CHECK(std::abs(p.scores[1] - 0.85 * p0) < 1e-9);
    CHECK(std::abs(p.scores[0] - 0.54054) < 1e-5);
    CHECK(std::abs(p.scores[1] - 0.45946) < 1e-5);

    // star: hub 0, leaves 1..5, seed uniform over leaves
    std::vector<Edge> star;
    for (std::size_t l = 1; l <= 5; ++l) star.push_back({0, l, 1.0});
    const FeatureGraph sg(testing::names("n", 6), star);
    const std::vector<double> s3{0, 0.2, 0.2, 0.2, 0.2, 0.2};
    const auto ps = personalized_pagerank(sg, s3);
    for (std::size_t l = 2; l <= 5; ++l) {
        CHECK(std::abs(ps.scores[l] - ps.scores[1]) < 1e-12);
    }
}

TEST_CASE("ppr conserves mass and solves the fixed point") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = testing::random_graph(20, 0.1, rng); // some isolated nodes
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> s(20);
        double total = 0.0;
        for (auto& v : s) total += (v = u(rng) < 0.3 ? u(rng) : 0.0);
        if (total == 0.0) continue;
        for (auto& v : s) v /= total;
        const auto p = personalized_pagerank(g, s);
        double sum = 0.0;
        for (double v : p.scores) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-10);
        CHECK(ppr_residual(g, s, p.scores, 0.85) < 1e-9);
        CHECK(p.residual < 1e-10);
    }
}

TEST_CASE("ppr errors") {
    const auto g = testing::two_triangles();
    const std::vector<double> bad_sum{0.5, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(personalized_pagerank(g, bad_sum), DataError);
    const std::vector<double> s{1, 0, 0, 0, 0, 0};
    PprOptions o;
    o.max_iter = 2;
    try {
        personalized_pagerank(g, s, o);
        FAIL("expected non-convergence");
    } catch (const PprConvergenceError& e) {
        CHECK(e.residual() > 0.0);
    }
    o = {};
    o.damping = 1.0;
    CHECK_THROWS_AS(personalized_pagerank(g, s, o), ConfigError);
}

TEST_CASE("hybrid: full mass equals plain louvain on the reachable set") {
    std::mt19937_64 rng(5);
    const auto pp = testing::planted_partition(3, 6, 0.9, 0.1, rng);
    auto x = testing::omics(testing::random_matrix(30, 18, rng), "m", "v");
    std::vector<double> yv(30);
    for (std::size_t i = 0; i < 30; ++i) yv[i] = x.values(i, 0) + x.values(i, 7);
    const auto y = PhenotypeVector::continuous(x.subject_ids, yv);
    const auto h = hybrid_ppr_louvain(pp.graph, x, y, 1.0, 7);
    std::set<std::size_t> positive;
    for (std::size_t v = 0; v < 18; ++v) {
        if (h.ppr.scores[v] > 0.0) positive.insert(v);
    }
    CHECK(std::set<std::size_t>(h.retained.begin(), h.retained.end()) == positive);
    const auto plain = louvain(pp.graph.induced(h.retained), 7);
    CHECK(h.partition.assignment == plain.assignment);
    CHECK(std::abs(h.retained_mass - 1.0) < 1e-10);
}

TEST_CASE("hybrid keeps the phenotype hub and the cut is minimal") {
    std::mt19937_64 rng(6);
    const std::size_t leaves = 12;
    auto x = testing::omics(testing::random_matrix(40, leaves + 1, rng), "m", "v");
    std::vector<double> yv(40);
    for (std::size_t i = 0; i < 40; ++i) yv[i] = x.values(i, 0);
    const auto y = PhenotypeVector::continuous(x.subject_ids, yv);
    std::vector<Edge> star;
    for (std::size_t l = 1; l <= leaves; ++l) star.push_back({0, l, 1.0});
    const FeatureGraph g(x.feature_names, star);

    for (double mass : {0.2, 0.5, 0.8}) {
        const auto h = hybrid_ppr_louvain(g, x, y, mass, 1);
        CHECK(std::find(h.retained.begin(), h.retained.end(), 0) != h.retained.end());
        CHECK(h.retained.front() == 0);
        double sum = 0.0;
        for (std::size_t v : h.retained) sum += h.ppr.scores[v];
        CHECK(sum >= mass - 1e-12);
        CHECK(sum - h.ppr.scores[h.retained.back()] < mass);
        for (std::size_t k = 1; k < h.retained.size(); ++k) {
            CHECK(h.ppr.scores[h.retained[k - 1]] >= h.ppr.scores[h.retained[k]]);
        }
    }

    const auto flat = PhenotypeVector::continuous(x.subject_ids, std::vector<double>(40, 1.0));
    CHECK_THROWS_AS(hybrid_ppr_louvain(g, x, flat, 0.5, 1), DataError);
}

TEST_CASE("partition csv") {
    const auto g = testing::two_triangles();
    std::ostringstream os;
    write_partition_csv(os, g, louvain(g, 0));
    CHECK(os.str() == "node,community\na,0\nb,0\nc,0\nd,1\ne,1\nf,1\n");
}

} // TEST_SUITE
