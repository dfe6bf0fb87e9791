#include "helpers.hpp"

#include "omicsnet/digest.hpp"
#include "omicsnet/parallel.hpp"
#include "omicsnet/seeding.hpp"
#include "omicsnet/stats.hpp"
#include "omicsnet/text.hpp"

#include <doctest.h>

#include <atomic>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

using namespace omicsnet;

TEST_SUITE("core") {

TEST_CASE("format_double round-trips random doubles exactly") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::uint64_t> bits;
    int checked = 0;
    while (checked < 5000) {
        const std::uint64_t b = bits(rng);
        double v;
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) {
            continue;
        }
        const auto back = parse_double(format_double(v));
        REQUIRE(back.has_value());
        CHECK(std::memcmp(&*back, &v, sizeof v) == 0);
        ++checked;
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("parse_double is strict") {
    CHECK(parse_double("1e3") == 1000.0);
    CHECK(parse_double("+2.5") == 2.5);
    CHECK_FALSE(parse_double("").has_value());
    CHECK_FALSE(parse_double("1.0x").has_value());
    CHECK_FALSE(parse_double("nan").has_value());
    CHECK_FALSE(parse_double("inf").has_value());
    CHECK_FALSE(parse_double("abc").has_value());
}

TEST_CASE("split_csv_line keeps empty fields and strips CR") {
    const auto f = split_csv_line("a,,b,\r");
    REQUIRE(f.size() == 4);
    CHECK(f[0] == "a");
    CHECK(f[1].empty());
    CHECK(f[2] == "b");
    CHECK(f[3].empty());
}

TEST_CASE("matmul matches a triple loop") {
    std::mt19937_64 rng(2);
    const Matrix a = testing::random_matrix(4, 7, rng);
    const Matrix b = testing::random_matrix(7, 3, rng);
    const Matrix c = matmul(a, b);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 7; ++k) {
                acc += a(i, k) * b(k, j);
            }
            CHECK(c(i, j) == doctest::Approx(acc).epsilon(1e-14));
        }
    }
    CHECK(transpose(transpose(a)) == a);
    CHECK(matmul(identity(4), a) == a);
}

TEST_CASE("variance and pearson against textbook values") {
    const std::vector<double> x{1, 2, 3};
    CHECK(stats::variance(x) == doctest::Approx(1.0));
    CHECK(stats::mean(x) == doctest::Approx(2.0));
    const std::vector<double> y{1, 2, 4};
    // r = 3 / sqrt(2 * 14/3)
    CHECK(stats::pearson(x, y) == doctest::Approx(3.0 / std::sqrt(2.0 * 14.0 / 3.0)).epsilon(1e-12));
    const std::vector<double> flat{5, 5, 5};
    CHECK(stats::pearson(x, flat) == 0.0);
}

TEST_CASE("average ranks share ties") {
    const std::vector<double> x{10, 20, 10, 30};
    const auto r = stats::average_ranks(x);
    CHECK(r == std::vector<double>{1.5, 3, 1.5, 4});
}

TEST_CASE("derive_seed separates stages and is reproducible") {
    CHECK(derive_seed(1, "network") == derive_seed(1, "network"));
    CHECK(derive_seed(1, "network") != derive_seed(1, "cluster"));
    CHECK(derive_seed(1, "network") != derive_seed(2, "network"));
    CHECK(derive_seed(1, "network") < (1ULL << 31));
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("parallel_for visits each index once for any thread cap") {
    for (std::size_t threads : {1, 2, 5}) {
        set_max_threads(threads);
        std::vector<std::atomic<int>> hits(97);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) {
            CHECK(h.load() == 1);
        }
    }
    set_max_threads(3);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
        if (i == 7) throw std::runtime_error("boom");
    }), std::runtime_error);
    set_max_threads(1);
}

}
