#include <doctest.h>

#include <cmath>
#include <vector>

#include "evoter/dynamics.hpp"
#include "evoter/spectral.hpp"

using namespace evoter;

namespace {

NetState complete_graph(std::uint32_t n) {
    std::vector<Bond> bonds;
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v = u + 1; v < n; ++v) bonds.emplace_back(u, v);
    std::vector<std::uint8_t> ops(n, 0);
    for (VertexId v = 0; v < n; v += 2) ops[v] = 1;
    return NetState::build(n, ops, bonds);
}

NetState two_cliques_bridged(std::uint32_t half, bool bridge) {
    std::vector<Bond> bonds;
    for (VertexId u = 0; u < half; ++u)
        for (VertexId v = u + 1; v < half; ++v) bonds.emplace_back(u, v);
    for (VertexId u = half; u < 2 * half; ++u)
        for (VertexId v = u + 1; v < 2 * half; ++v) bonds.emplace_back(u, v);
    if (bridge) bonds.emplace_back(0, half);
    std::vector<std::uint8_t> ops(2 * half, 0);
    for (VertexId v = half; v < 2 * half; ++v) ops[v] = 1;
    return NetState::build(2 * half, ops, bonds);
}

} // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("complete graph: lambda = (beta/(2n)) * n = 1 at beta = 2") {
    for (std::uint32_t n : {4u, 8u, 32u, 100u}) {
        auto r = spectral_gap(complete_graph(n), 2.0);
        CHECK(!r.disconnected);
        CHECK(std::abs(r.lambda - 1.0) < 1e-9);
    }
}

TEST_CASE("disconnected graphs report a zero gap with a flag") {
    auto r = spectral_gap(two_cliques_bridged(4, false), 2.0);
    CHECK(r.disconnected);
    CHECK(r.lambda == 0.0);

    // An isolated vertex also makes the full generator reducible.
    NetState iso = NetState::build(3, {0, 1, 0}, {Bond(0, 1)});
    CHECK(spectral_gap(iso, 2.0).disconnected);
}

TEST_CASE("bridging a disjoint union makes the gap strictly positive") {
    for (std::uint32_t half : {3u, 4u, 6u}) {
        auto off = spectral_gap(two_cliques_bridged(half, false), 2.0);
        CHECK(off.lambda == 0.0);
        auto on = spectral_gap(two_cliques_bridged(half, true), 2.0);
        CHECK(!on.disconnected);
        CHECK(on.lambda > 1e-9);
    }
}

TEST_CASE("iterative path agrees with the dense solver") {
    Rng rng(8);
    NetState s = NetState::sample(120, rng);
    auto dense = spectral_gap(s, 3.0);
    auto iter = spectral_gap(s, 3.0, 16); // force the power-iteration path
    REQUIRE(!dense.disconnected);
    CHECK(iter.iterations > 0);
    CHECK(std::abs(iter.lambda - dense.lambda) < 1e-5 * dense.lambda + 1e-9);
}

TEST_CASE("G(n,1/2) at n=200 satisfies the mixing floor lambda >= beta*eps14") {
    StoppingConfig cfg;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Rng rng(derive(71, seed));
        NetState s = NetState::sample(200, rng);
        auto r = spectral_gap(s, 50.0);
        REQUIRE(!r.disconnected);
        CHECK(r.lambda >= 50.0 * cfg.eps14);
    }
}

TEST_CASE("cheeger: two cliques joined by one edge, exact h = 1/32") {
    NetState s = two_cliques_bridged(4, true); // n = 8
    auto r = cheeger(s, 2.0, CheegerMode::Exact);
    CHECK(r.h == doctest::Approx(1.0 / 32.0));
    CHECK(r.s_size == 4);
}

TEST_CASE("cheeger: complete-graph closed form, checked by enumeration at n=8") {
    // Minimizing cut has |S| = floor(n/2): h = beta * ceil(n/2) / (2n).
    for (std::uint32_t n : {5u, 8u}) {
        double beta = 2.0;
        double expect = beta * std::ceil(n / 2.0) / (2.0 * n);
        auto r = cheeger(complete_graph(n), beta, CheegerMode::Exact);
        CHECK(r.h == doctest::Approx(expect));
        auto rs = cheeger(complete_graph(n), beta, CheegerMode::Sampled);
        CHECK(rs.h == doctest::Approx(expect)); // prefix cuts reach the optimum here
    }
    CHECK_THROWS_AS(cheeger(complete_graph(20), 1.0, CheegerMode::Exact), std::length_error);
}

TEST_CASE("cheeger_sampled is an upper bound for cheeger_exact (100 random states, n=12)") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive(7200, seed));
        NetState s = NetState::sample(12, rng);
        if (s.edge_count() == 0) continue;
        ChainRng chain{seed};
        for (int i = 0; i < 30 && !is_absorbed(s, Rewiring::Random); ++i)
            step(s, ModelVariant{Rewiring::Random, ClockKind::Direct}, 3.0, chain);
        auto exact = cheeger(s, 2.0, CheegerMode::Exact);
        auto sampled = cheeger(s, 2.0, CheegerMode::Sampled);
        CHECK(sampled.h >= exact.h - 1e-12);
        ++checked;
    }
    CHECK(checked >= 95);
}

TEST_CASE("Cheeger sandwich: h^2/(2 beta D_max / n) <= lambda <= 2h") {
    // Exact h on small states, sampled h on a larger ER state; the upper
    // bound with a sampled h only loosens, the lower bound has wide margin.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive(7300, seed));
        NetState s = NetState::sample(12, rng);
        if (component_count(s) > 1) continue;
        double beta = 2.0;
        auto lam = spectral_gap(s, beta);
        auto h = cheeger(s, beta, CheegerMode::Exact);
        double dmax = (double)degree_extremes(s).d_max;
        CHECK(lam.lambda >= h.h * h.h / (2.0 * beta * dmax / s.n) - 1e-9);
        CHECK(lam.lambda <= 2.0 * h.h + 1e-9);
    }
    Rng rng(1);
    NetState big = NetState::sample(200, rng);
    REQUIRE(component_count(big) == 1);
    double beta = 50.0;
    auto lam = spectral_gap(big, beta);
    auto h = cheeger(big, beta, CheegerMode::Sampled);
    double dmax = (double)degree_extremes(big).d_max;
    CHECK(lam.lambda >= h.h * h.h / (2.0 * beta * dmax / big.n) - 1e-9);
    CHECK(lam.lambda <= 2.0 * h.h + 1e-9);
}

TEST_SUITE_END();
