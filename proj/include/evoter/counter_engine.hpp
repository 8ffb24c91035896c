#pragma once

#include <cstdint>
#include <vector>

#include "evoter/dynamics.hpp"
#include "evoter/graph.hpp"

namespace evoter {

struct CounterStats {
    std::uint64_t used_stubborn = 0; // values >= 25n drawn from the S-side stream
    std::uint64_t rl_ss = 0;         // relabels on a pick with both endpoints in S
    std::uint64_t r_ss = 0;          // picks with both endpoints in S
    std::uint64_t r_st = 0;
    std::uint64_t r_tt = 0;
    std::uint64_t x_draws = 0;       // refills taken from the S-side stream
    std::uint64_t xprime_draws = 0;
    std::uint64_t w_scanned = 0;     // rewiring-target list entries inspected
};

struct CounterRun {
    RunSummary summary;
    CounterStats stats;
};

// Equivalent construction of the rewire-to-random dynamics: every vertex
// carries a geometric countdown of rewiring credits; an update rooted at a
// vertex with counter zero is a relabel and refills the counter, any other
// update rewires to the first legal entry of an i.i.d. uniform vertex list.
// Refills for vertices that started with degree <= 10n and currently hold
// opinion 0 come from one stream, everything else from a second stream; a
// drawn value >= 25n is counted as stubborn. Distribution-equal to the
// step() chain (tested, not assumed).
inline CounterRun counter_engine_run(NetState& s, double beta, std::uint64_t max_steps,
                                     std::uint64_t seed) {
    if (beta < 0 || beta > s.n) throw std::invalid_argument("counter_engine: beta must be in [0, n]");
    CounterRun run;
    RunSummary& r = run.summary;
    CounterStats& cs = run.stats;
    r.n = s.n;
    r.beta = beta;
    r.rewiring = Rewiring::Random;
    r.clock = ClockKind::Direct;
    r.seed = seed;
    if (max_steps == 0) max_steps = default_max_steps(s.n);

    const double q = beta / (double)s.n;
    const std::uint64_t stubborn_at = 25ull * s.n;

    // S is fixed from the starting degrees.
    std::vector<std::uint8_t> in_s(s.n);
    for (VertexId v = 0; v < s.n; ++v) in_s[v] = s.degree[v] <= 10ull * s.n;

    constexpr std::uint64_t kTagX = 0x67656f6d30ULL;
    constexpr std::uint64_t kTagXPrime = 0x67656f6d31ULL;
    constexpr std::uint64_t kTagW = 0x7461726765ULL;
    Rng xs(derive(seed, kTagX));
    Rng xps(derive(seed, kTagXPrime));
    Rng ws(derive(seed, kTagW));
    ChainRng chain{seed};

    auto draw_x = [&]() {
        std::uint64_t k = xs.geometric_failures(q);
        ++cs.x_draws;
        if (k >= stubborn_at) ++cs.used_stubborn;
        return k;
    };
    auto draw_xprime = [&]() {
        ++cs.xprime_draws;
        return xps.geometric_failures(q);
    };

    // Initial counters all come from the second stream, in vertex order.
    std::vector<std::uint64_t> counter(s.n);
    for (VertexId v = 0; v < s.n; ++v) counter[v] = draw_xprime();

    std::uint64_t traj_stride = default_trajectory_stride(s.n);
    r.trajectory.push_back({s.t, s.n1, s.disagree.size()});

    std::uint64_t steps_done = 0;
    for (;;) {
        if (s.disagree.empty()) {
            r.stop_reason = StopReason::Absorbed;
            break;
        }
        if (steps_done >= max_steps) {
            r.stop_reason = StopReason::MaxSteps;
            r.censored = true;
            break;
        }
        Rng dec = chain.decision_stream();
        EdgeId e = s.disagree.items()[dec.uniform_below(s.disagree.size())];
        Bond at = s.placement[e];
        bool both_s = in_s[at.a] && in_s[at.b];
        if (both_s) ++cs.r_ss;
        else if (in_s[at.a] || in_s[at.b]) ++cs.r_st;
        else ++cs.r_tt;

        // The root coin picks the opinion-1 endpoint on heads; endpoints of a
        // disagreeing edge hold opposite opinions, so this is the uniform root.
        bool heads = dec.uniform_below(2);
        VertexId root = (s.opinions[at.a] == (heads ? 1 : 0)) ? at.a : at.b;
        bool s_side = in_s[root] && s.opinions[root] == 0;

        s.t += 1;
        ++steps_done;
        if (counter[root] == 0) {
            ++r.relabel_count;
            if (both_s) ++cs.rl_ss;
            s.flip_opinion(root);
            counter[root] = s_side ? draw_x() : draw_xprime();
        } else {
            --counter[root];
            ++r.rewire_count;
            VertexId w;
            do {
                w = (VertexId)ws.uniform_below(s.n);
                ++cs.w_scanned;
            } while (w == root);
            s.move_edge(e, Bond(root, w));
        }
        if (s.t % traj_stride == 0) r.trajectory.push_back({s.t, s.n1, s.disagree.size()});
    }

    r.tau = s.t;
    r.minority_at_stop = (double)s.minority() / (double)s.n;
    r.n1_at_stop = s.n1;
    r.disagreeing_at_stop = s.disagree.size();
    if (r.trajectory.back().t != s.t) r.trajectory.push_back({s.t, s.n1, s.disagree.size()});
    return run;
}

} // namespace evoter
