#include <cmath>
#include <set>

#include "doctest.h"
#include "rbaird/random.hpp"

using namespace rbaird;

TEST_CASE("derive_seed separates paths and is stable") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    CHECK(derive_seed(1, {}) != derive_seed(1, {0}));
}

TEST_CASE("uniform draws stay in [0,1) and have mean near 1/2") {
    Rng rng(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // Standard error of the mean is sqrt(1/12 / n).
    CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("below covers its range uniformly") {
    Rng rng(11);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
    const double p = 1.0 / 7.0, sigma = std::sqrt(n * p * (1 - p));
    for (int c : counts) CHECK(std::abs(c - n * p) < 3.0 * sigma);
}

TEST_CASE("categorical never returns a zero-weight index") {
    Rng rng(3);
    const std::vector<double> w{0.0, 2.0, 0.0, 1.0, 0.0};
    std::set<std::size_t> seen;
    for (int i = 0; i < 5000; ++i) seen.insert(rng.categorical(w));
    CHECK(seen == std::set<std::size_t>{1, 3});
}

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}
