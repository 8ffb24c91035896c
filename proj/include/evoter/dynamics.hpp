#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evoter/graph.hpp"
#include "evoter/rng.hpp"

namespace evoter {

enum class Rewiring : std::uint8_t { Random, Same };
enum class ClockKind : std::uint8_t { Direct, Starred, Continuous };

struct ModelVariant {
    Rewiring rewiring = Rewiring::Random;
    ClockKind clock = ClockKind::Direct;
};

inline const char* rewiring_name(Rewiring r) {
    return r == Rewiring::Random ? "rewire-random" : "rewire-same";
}
inline const char* clock_name(ClockKind c) {
    switch (c) {
        case ClockKind::Direct: return "direct";
        case ClockKind::Starred: return "starred";
        default: return "continuous";
    }
}
inline std::optional<Rewiring> parse_rewiring(const std::string& s) {
    if (s == "rewire-random" || s == "random") return Rewiring::Random;
    if (s == "rewire-same" || s == "same") return Rewiring::Same;
    return std::nullopt;
}
inline std::optional<ClockKind> parse_clock(const std::string& s) {
    if (s == "direct") return ClockKind::Direct;
    if (s == "starred") return ClockKind::Starred;
    if (s == "continuous") return ClockKind::Continuous;
    return std::nullopt;
}

enum class StepKind : std::uint8_t { Relabel, Rewire, AgreeingNoOp, Absorbed };
enum class AbsorbReason : std::uint8_t { None, NoDisagreeingEdges, OpinionSingleton };

// What a single transition did, with enough detail to audit.
struct StepOutcome {
    StepKind kind = StepKind::Absorbed;
    AbsorbReason reason = AbsorbReason::None;
    VertexId root = 0;
    std::uint8_t adopted = 0;    // opinion adopted on a relabel
    EdgeId edge = 0;
    Bond from{0, 1}, to{0, 1};
    bool coin_z = false;
    double elapsed = 0.0;        // 1 for discrete clocks, Exp(2N) holding time for Continuous
};

// Absorbing-state test. Rewire-to-same additionally stops when one opinion
// is held by at most one vertex (the uniform draw from C_u \ {u} would be
// undefined there).
inline bool is_absorbed(const NetState& s, Rewiring rewiring) {
    if (s.disagree.empty()) return true;
    return rewiring == Rewiring::Same && (s.n0 <= 1 || s.n1 <= 1);
}

inline AbsorbReason absorb_reason(const NetState& s, Rewiring rewiring) {
    if (s.disagree.empty()) return AbsorbReason::NoDisagreeingEdges;
    if (rewiring == Rewiring::Same && (s.n0 <= 1 || s.n1 <= 1)) return AbsorbReason::OpinionSingleton;
    return AbsorbReason::None;
}

// Per-chain randomness. Every step derives short-lived splitmix64 streams
// from (seed, tag, counter): the clock stream (one per step) carries the
// time-change randomness, the decision stream (one per acting step) carries
// edge, root, Z and target draws in that pinned order. Direct and Starred
// chains with equal seeds therefore realize identical acting decisions,
// which makes the time-change equivalence exactly testable.
struct ChainRng {
    std::uint64_t seed = 0;
    std::uint64_t clock_events = 0;
    std::uint64_t decisions = 0;

    static constexpr std::uint64_t kClockTag = 0x636c6f636bULL;   // "clock"
    static constexpr std::uint64_t kDecisionTag = 0x6465636964ULL; // "decid"

    Rng clock_stream() { return Rng(derive(seed, kClockTag, clock_events++)); }
    Rng decision_stream() { return Rng(derive(seed, kDecisionTag, decisions++)); }
};

// One transition of the chain per the selected variant. Draw order within
// the decision stream: edge, root, Z, target. Starred realizes "choose a
// uniform edge, idle if agreeing" as a Bernoulli(X/N) thinning of the step
// followed by a uniform draw from the disagreeing set, which is the same
// kernel. Continuous is the Starred jump chain with Exp(2N) holding times.
inline StepOutcome step(NetState& s, ModelVariant variant, double beta, ChainRng& chain) {
    if (beta < 0 || beta > s.n) throw std::invalid_argument("step: beta must be in [0, n]");
    StepOutcome out;
    AbsorbReason why = absorb_reason(s, variant.rewiring);
    if (why != AbsorbReason::None) {
        out.kind = StepKind::Absorbed;
        out.reason = why;
        return out;
    }

    std::size_t x = s.disagree.size();
    std::size_t nedges = s.edge_count();
    double elapsed = 1.0;
    bool act = true;
    if (variant.clock != ClockKind::Direct) {
        Rng clk = chain.clock_stream();
        act = clk.bernoulli((double)x / (double)nedges);
        if (variant.clock == ClockKind::Continuous) elapsed = clk.exponential(2.0 * (double)nedges);
    }
    s.t += 1;
    if (!act) {
        out.kind = StepKind::AgreeingNoOp;
        out.elapsed = elapsed;
        return out;
    }

    Rng dec = chain.decision_stream();
    EdgeId e = s.disagree.items()[dec.uniform_below(x)];
    Bond at = s.placement[e];
    VertexId root = dec.uniform_below(2) ? at.b : at.a;
    VertexId other = at.other(root);
    bool z = dec.bernoulli(beta / (double)s.n);

    out.edge = e;
    out.from = at;
    out.root = root;
    out.coin_z = z;
    out.elapsed = elapsed;
    if (z) {
        out.kind = StepKind::Relabel;
        out.adopted = s.opinions[other];
        s.flip_opinion(root);
        out.to = at;
        return out;
    }

    VertexId target;
    if (variant.rewiring == Rewiring::Random) {
        // Uniform over V \ {root}.
        std::uint64_t k = dec.uniform_below(s.n - 1);
        target = (VertexId)(k >= root ? k + 1 : k);
    } else {
        // Uniform over C_root \ {root}; nonempty since min(n0, n1) >= 2 here.
        const IndexedSet& cls = s.by_opinion[s.opinions[root]];
        std::size_t m = cls.size();
        if (m <= 1) {
            out.kind = StepKind::Absorbed;
            out.reason = AbsorbReason::OpinionSingleton;
            return out;
        }
        std::uint64_t k = dec.uniform_below(m - 1);
        // Skip root's own position in the class array.
        std::size_t rpos = 0;
        while (cls.items()[rpos] != root) ++rpos;
        target = cls.items()[k >= rpos ? k + 1 : k];
    }
    out.kind = StepKind::Rewire;
    out.to = Bond(root, target);
    s.move_edge(e, out.to);
    return out;
}

// List-based rewiring target sampler: scan an i.i.d. uniform vertex stream,
// skipping illegal entries (the root, and for rewire-to-same any vertex of
// the wrong opinion). The returned vertex has the same law as the direct
// draw; `consumed` reports how many stream entries were inspected.
struct ListRewireSampler {
    Rng stream;
    std::uint64_t consumed = 0;

    explicit ListRewireSampler(std::uint64_t seed) : stream(seed) {}

    struct Draw {
        VertexId vertex;
        std::uint64_t used;
    };

    Draw draw_random(VertexId root, std::uint32_t n) {
        std::uint64_t used = 0;
        for (;;) {
            auto w = (VertexId)stream.uniform_below(n);
            ++used;
            if (w != root) {
                consumed += used;
                return {w, used};
            }
        }
    }

    std::optional<Draw> draw_same(VertexId root, const NetState& s) {
        if (s.by_opinion[s.opinions[root]].size() <= 1) return std::nullopt; // absorbed signal
        std::uint64_t used = 0;
        for (;;) {
            auto w = (VertexId)stream.uniform_below(s.n);
            ++used;
            if (w != root && s.opinions[w] == s.opinions[root]) {
                consumed += used;
                return Draw{w, used};
            }
        }
    }
};

struct TrajectoryPoint {
    std::uint64_t t;
    std::uint32_t n1;
    std::uint64_t disagreeing;
};

enum class StopReason : std::uint8_t { Absorbed, AbsorbedSingleton, MaxSteps, TauStar, Monitor };

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Absorbed: return "absorbed";
        case StopReason::AbsorbedSingleton: return "absorbed-singleton";
        case StopReason::MaxSteps: return "max-steps";
        case StopReason::TauStar: return "tau-star";
        default: return "monitor";
    }
}

struct TauStarHit {
    double eps;
    bool hit = false;
    std::uint64_t step = 0;
};

struct RunSummary {
    std::uint32_t n = 0;
    double beta = 0;
    Rewiring rewiring = Rewiring::Random;
    ClockKind clock = ClockKind::Direct;
    std::uint64_t seed = 0;
    std::uint64_t tau = 0;          // chain step count at stop
    bool censored = false;          // stopped by max_steps
    StopReason stop_reason = StopReason::Absorbed;
    double minority_at_stop = 0;    // N_*(stop) / n
    std::uint32_t n1_at_stop = 0;
    std::uint64_t disagreeing_at_stop = 0;
    std::uint64_t relabel_count = 0;
    std::uint64_t rewire_count = 0;
    std::uint64_t noop_count = 0;
    double continuous_time = 0;     // accumulated elapsed for the Continuous clock
    std::vector<TauStarHit> tau_star_hits;
    std::vector<TrajectoryPoint> trajectory;
};

inline std::uint64_t default_max_steps(std::uint32_t n) {
    return 20ull * n * n * n;
}
inline std::uint64_t default_trajectory_stride(std::uint32_t n) {
    std::uint64_t s = (std::uint64_t)n * n / 100;
    return s ? s : 1;
}

struct RunConfig {
    std::uint64_t max_steps = 0;                 // 0 -> 20 n^3
    std::vector<double> record_tau_star;         // thresholds to record (first N_* <= eps*n)
    std::vector<double> stop_tau_star;           // subset of thresholds that stop the run
    std::uint64_t trajectory_stride = 0;         // 0 -> max(1, n^2/100)
    std::uint64_t monitor_stride = 0;            // 0 -> monitor disabled
    std::function<bool(const NetState&)> monitor; // return true to stop
};

// Drives step() until the first satisfied stop predicate. The monitor is
// called every monitor_stride steps (including step 0).
inline RunSummary run_until(NetState& s, ModelVariant variant, double beta, const RunConfig& cfg,
                            std::uint64_t seed) {
    RunSummary r;
    r.n = s.n;
    r.beta = beta;
    r.rewiring = variant.rewiring;
    r.clock = variant.clock;
    r.seed = seed;
    std::uint64_t max_steps = cfg.max_steps ? cfg.max_steps : default_max_steps(s.n);
    std::uint64_t traj_stride = cfg.trajectory_stride ? cfg.trajectory_stride : default_trajectory_stride(s.n);

    for (double eps : cfg.record_tau_star) r.tau_star_hits.push_back({eps});
    auto update_tau_star = [&]() -> std::optional<double> {
        double mn = (double)s.minority();
        for (auto& h : r.tau_star_hits) {
            if (!h.hit && mn <= h.eps * (double)s.n) {
                h.hit = true;
                h.step = s.t;
                for (double stop_eps : cfg.stop_tau_star)
                    if (stop_eps == h.eps) return h.eps;
            }
        }
        return std::nullopt;
    };

    ChainRng chain{seed};
    std::uint64_t steps_done = 0;
    std::uint64_t last_traj = std::numeric_limits<std::uint64_t>::max();
    auto record_traj = [&]() {
        if (s.t == last_traj) return;
        last_traj = s.t;
        r.trajectory.push_back({s.t, s.n1, s.disagree.size()});
    };
    record_traj();

    std::optional<StopReason> stop;
    if (auto hit = update_tau_star(); hit) stop = StopReason::TauStar;
    while (!stop) {
        if (cfg.monitor_stride && steps_done % cfg.monitor_stride == 0 && cfg.monitor && cfg.monitor(s)) {
            stop = StopReason::Monitor;
            break;
        }
        AbsorbReason why = absorb_reason(s, variant.rewiring);
        if (why != AbsorbReason::None) {
            stop = why == AbsorbReason::OpinionSingleton ? StopReason::AbsorbedSingleton : StopReason::Absorbed;
            break;
        }
        if (steps_done >= max_steps) {
            stop = StopReason::MaxSteps;
            r.censored = true;
            break;
        }
        StepOutcome o = step(s, variant, beta, chain);
        ++steps_done;
        switch (o.kind) {
            case StepKind::Relabel: ++r.relabel_count; break;
            case StepKind::Rewire: ++r.rewire_count; break;
            case StepKind::AgreeingNoOp: ++r.noop_count; break;
            case StepKind::Absorbed: break;
        }
        if (variant.clock == ClockKind::Continuous) r.continuous_time += o.elapsed;
        if (o.kind == StepKind::Relabel) {
            if (auto hit = update_tau_star(); hit) stop = StopReason::TauStar;
        }
        if (s.t % traj_stride == 0) record_traj();
    }

    r.stop_reason = *stop;
    r.tau = s.t;
    r.minority_at_stop = (double)s.minority() / (double)s.n;
    r.n1_at_stop = s.n1;
    r.disagreeing_at_stop = s.disagree.size();
    record_traj();
    return r;
}

} // namespace evoter
