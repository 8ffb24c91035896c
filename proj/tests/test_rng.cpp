#include <doctest.h>

#include <cmath>
#include <vector>

#include "evoter/rng.hpp"

using namespace evoter;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are deterministic and derivation separates them") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive(1, 2, 3) == derive(derive(1, 2), 3));
    CHECK(derive(1, 2, 3) != derive(1, 3, 2));
    Rng c(derive(42, 1)), d(derive(42, 2));
    CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform_below is unbiased at small moduli") {
    Rng r(7);
    std::vector<int> counts(7, 0);
    const int draws = 140000;
    for (int i = 0; i < draws; ++i) ++counts[r.uniform_below(7)];
    double chi2 = 0, expect = draws / 7.0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 22.46); // chi-square(6) at significance 1e-3
}

TEST_CASE("real01 and exponential have the right ranges and moments") {
    Rng r(9);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        double x = r.real01();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        sum += x;
    }
    CHECK(std::abs(sum / 100000 - 0.5) < 0.01);
    double esum = 0;
    for (int i = 0; i < 100000; ++i) esum += r.exponential(2.0);
    CHECK(std::abs(esum / 100000 - 0.5) < 0.02);
}

TEST_CASE("geometric_failures matches the closed-form tail") {
    Rng r(11);
    double q = 0.2;
    const int draws = 200000;
    int ge3 = 0;
    for (int i = 0; i < draws; ++i)
        if (r.geometric_failures(q) >= 3) ++ge3;
    // P(X >= 3) = (1-q)^3 = 0.512
    CHECK(std::abs((double)ge3 / draws - 0.512) < 0.01);
    CHECK(Rng(1).geometric_failures(1.0) == 0);
}

TEST_SUITE_END();
