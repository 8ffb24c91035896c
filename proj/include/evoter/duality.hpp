#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "evoter/dynamics.hpp"
#include "evoter/graph.hpp"
#include "evoter/spectral.hpp"

namespace evoter {

struct WalkPath {
    VertexId start;
    std::vector<std::pair<double, VertexId>> jumps; // (jump time, vertex after the jump)

    VertexId position_at(double time) const {
        VertexId pos = start;
        for (const auto& [t, v] : jumps) {
            if (t > time) break;
            pos = v;
        }
        return pos;
    }
};

// Independent continuous-time walkers on a frozen snapshot: each walker at v
// waits Exp(beta*deg(v)/(2n)), then moves along a uniformly chosen incident
// edge (multiplicity-weighted by construction).
struct WalkEnsemble {
    NetState frozen;
    double rate_per_directed_edge = 0;
    double horizon = 0;
    std::vector<WalkPath> paths;
};

inline WalkEnsemble simulate_walks(const NetState& frozen, const std::vector<VertexId>& starts,
                                   double beta, double horizon, std::uint64_t seed) {
    if (horizon < 0) throw std::invalid_argument("simulate_walks: horizon must be >= 0");
    WalkEnsemble ens;
    ens.frozen = frozen;
    ens.rate_per_directed_edge = beta / (2.0 * (double)frozen.n);
    ens.horizon = horizon;
    ens.paths.reserve(starts.size());
    constexpr std::uint64_t kTagWalk = 0x77616c6bULL;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        Rng rng(derive(seed, kTagWalk, i));
        WalkPath p;
        p.start = starts[i];
        VertexId at = starts[i];
        double t = 0;
        for (;;) {
            std::uint32_t deg = frozen.degree[at];
            if (deg == 0) break;
            t += rng.exponential(ens.rate_per_directed_edge * (double)deg);
            if (t > horizon) break;
            EdgeId e = frozen.incidence[at][rng.uniform_below(deg)];
            at = frozen.placement[e].other(at);
            p.jumps.emplace_back(t, at);
        }
        ens.paths.push_back(std::move(p));
    }
    return ens;
}

// Heat kernel exp(-t L) of the walk generator via symmetric eigendecomposition.
inline Eigen::MatrixXd heat_kernel(const NetState& s, double beta, double time) {
    if (s.n > 512) throw std::length_error("heat_kernel: exact mode needs n <= 512");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled_laplacian(s, beta));
    Eigen::VectorXd decay = (-time * es.eigenvalues().array()).exp();
    return es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose();
}

enum class TvMode { Exact, Empirical };

// Total variation distance between the time-`time` law of the walk started
// at v and the uniform law on V.
inline double tv_to_uniform(const NetState& s, VertexId v, double beta, double time, TvMode mode,
                            std::uint64_t seed = 1, std::size_t walkers = 100000) {
    if (v >= s.n) throw std::invalid_argument("tv_to_uniform: bad vertex");
    double unif = 1.0 / (double)s.n;
    if (mode == TvMode::Exact) {
        Eigen::MatrixXd k = heat_kernel(s, beta, time);
        double tv = 0;
        for (VertexId u = 0; u < s.n; ++u) tv += std::abs(k(v, u) - unif);
        return tv / 2.0;
    }
    std::vector<VertexId> starts(walkers, v);
    WalkEnsemble ens = simulate_walks(s, starts, beta, time, seed);
    std::vector<std::uint64_t> occ(s.n, 0);
    for (const auto& p : ens.paths) ++occ[p.position_at(time)];
    double tv = 0;
    for (VertexId u = 0; u < s.n; ++u) tv += std::abs((double)occ[u] / (double)walkers - unif);
    return tv / 2.0;
}

struct CollisionStats {
    std::size_t walkers = 0;
    std::size_t intersecting = 0;
    double fraction = 0;
};

// A walker is intersecting when its path (the set of vertices it visited,
// start included) shares a vertex with any other walker's path.
inline CollisionStats collision_stats(const WalkEnsemble& ens) {
    CollisionStats cs;
    cs.walkers = ens.paths.size();
    if (cs.walkers == 0) return cs;
    std::vector<std::vector<std::uint32_t>> visitors(ens.frozen.n);
    std::vector<std::vector<VertexId>> visited(cs.walkers);
    for (std::size_t i = 0; i < cs.walkers; ++i) {
        auto& vs = visited[i];
        vs.push_back(ens.paths[i].start);
        for (const auto& [t, v] : ens.paths[i].jumps) vs.push_back(v);
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        for (VertexId v : vs) visitors[v].push_back((std::uint32_t)i);
    }
    for (std::size_t i = 0; i < cs.walkers; ++i) {
        bool hit = false;
        for (VertexId v : visited[i]) {
            if (visitors[v].size() > 1) {
                hit = true;
                break;
            }
        }
        if (hit) ++cs.intersecting;
    }
    cs.fraction = (double)cs.intersecting / (double)cs.walkers;
    return cs;
}

struct DisagreementReport {
    double p_start = 0;          // minority fraction when the test began
    double p_hat = 0;            // minority fraction at measurement time
    double predicted = 0;        // 2 * p_hat * (1 - p_hat)
    double measured_global = 0;  // disagreeing fraction over all edges
    double measured_cut = 0;     // disagreeing fraction among cut-crossing edges
    std::uint64_t cut_crossing = 0;
    std::uint64_t steps_advanced = 0;
    bool absorbed_before_horizon = false;
};

// Advances the starred chain C*n^2/beta steps and compares the disagreeing
// fraction (globally and across a cut fixed before advancing) with the
// product-measure prediction 2p(1-p). The cut defaults to a uniformly random
// balanced cut and is never opinion-dependent at measurement time.
inline DisagreementReport disagreement_fraction_test(
    NetState& s, Rewiring rewiring, double beta, double c, std::uint64_t seed,
    std::optional<std::vector<std::uint8_t>> cut_mask = std::nullopt) {
    if (beta <= 0) throw std::invalid_argument("disagreement_fraction_test: beta must be positive");
    DisagreementReport rep;
    rep.p_start = (double)s.minority() / (double)s.n;

    std::vector<std::uint8_t> cut;
    if (cut_mask) {
        if (cut_mask->size() != s.n)
            throw std::invalid_argument("disagreement_fraction_test: cut mask size != n");
        cut = *cut_mask;
    } else {
        // Uniform random balanced cut, fixed before the chain advances.
        std::vector<VertexId> perm(s.n);
        for (VertexId v = 0; v < s.n; ++v) perm[v] = v;
        Rng rng(derive(seed, 0x637574ULL));
        for (std::uint32_t i = s.n - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.uniform_below((std::uint64_t)i + 1)]);
        cut.assign(s.n, 0);
        for (std::uint32_t i = 0; i < s.n / 2; ++i) cut[perm[i]] = 1;
    }

    auto horizon = (std::uint64_t)std::llround(c * (double)s.n * (double)s.n / beta);
    ModelVariant variant{rewiring, ClockKind::Starred};
    ChainRng chain{seed};
    for (std::uint64_t i = 0; i < horizon; ++i) {
        if (is_absorbed(s, rewiring)) {
            rep.absorbed_before_horizon = true;
            break;
        }
        step(s, variant, beta, chain);
        ++rep.steps_advanced;
    }

    rep.p_hat = (double)s.minority() / (double)s.n;
    rep.predicted = 2.0 * rep.p_hat * (1.0 - rep.p_hat);
    std::size_t nedges = s.edge_count();
    rep.measured_global = nedges ? (double)s.disagree.size() / (double)nedges : 0.0;
    std::uint64_t crossing = 0, crossing_dis = 0;
    for (EdgeId e = 0; e < nedges; ++e) {
        const Bond& b = s.placement[e];
        if (cut[b.a] != cut[b.b]) {
            ++crossing;
            if (s.is_disagreeing(e)) ++crossing_dis;
        }
    }
    rep.cut_crossing = crossing;
    rep.measured_cut = crossing ? (double)crossing_dis / (double)crossing : 0.0;
    return rep;
}

} // namespace evoter
