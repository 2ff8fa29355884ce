#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "smellmap/rng.hpp"

using namespace smellmap;

TEST_SUITE("rng") {

TEST_CASE("same seed gives the same stream, different seeds diverge") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_equal_to_c = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next();
        all_equal = all_equal && va == b.next();
        any_equal_to_c = any_equal_to_c || va == c.next();
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_to_c);
}

TEST_CASE("below stays in range and covers small supports") {
    Rng rng(7);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.below(5);
        REQUIRE(v < 5);
        ++seen[v];
    }
    for (const int count : seen) CHECK(count > 200);
}

TEST_CASE("uniform lies in the half-open unit interval") {
    Rng rng(8);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.05);
    CHECK(hi > 0.95);
}

TEST_CASE("normal has roughly standard moments") {
    Rng rng(9);
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("poisson matches its mean") {
    Rng rng(10);
    const double mean = 3.5;
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(mean));
    CHECK(sum / n == doctest::Approx(mean).epsilon(0.03));
}

TEST_CASE("shuffle is a permutation and depends on the seed") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto a = v, b = v, c = v;
    Rng(1).shuffle(a);
    Rng(1).shuffle(b);
    Rng(2).shuffle(c);
    CHECK(a == b);
    CHECK(a != c);
    std::sort(a.begin(), a.end());
    CHECK(a == v);
}

TEST_CASE("forked seeds give independent-looking children") {
    Rng parent(99);
    Rng childx(parent.fork());
    Rng childy(parent.fork());
    int equal = 0;
    for (int i = 0; i < 64; ++i) {
        if (childx.next() == childy.next()) ++equal;
    }
    CHECK(equal == 0);
}

}  // TEST_SUITE
