#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "evoter/dynamics.hpp"
#include "evoter/graph.hpp"
#include "evoter/rng.hpp"

namespace evoter {

struct SweepConfig {
    std::uint64_t master_seed = 1;
    std::vector<std::uint32_t> n_list{100};
    std::vector<double> beta_list{1.0};
    std::vector<std::string> variants{"rewire-random"};
    std::string clock = "direct";
    std::uint32_t seeds_per_cell = 1;
    double eps = 0.05;
    double eps_prime = 0.1;
    std::vector<double> extra_tau_star;
    bool stop_on_tau_star = false; // stop a run once N_* <= eps*n
    std::uint64_t max_steps = 0;   // 0 -> 20 n^3
    std::uint64_t trajectory_stride = 0;
    bool emit_trajectories = false;
    std::string output_dir = "out";
    std::uint32_t threads = 0;

    void validate() const {
        auto fail = [](const std::string& k, const std::string& why) {
            throw std::invalid_argument("SweepConfig: " + k + " " + why);
        };
        if (n_list.empty()) fail("n_list", "must be nonempty");
        for (auto n : n_list)
            if (n < 2) fail("n_list", "entries must be >= 2");
        if (beta_list.empty()) fail("beta_list", "must be nonempty");
        if (variants.empty()) fail("variants", "must be nonempty");
        for (const auto& v : variants)
            if (!parse_rewiring(v)) fail("variants", "unknown variant '" + v + "'");
        if (!parse_clock(clock)) fail("clock", "unknown clock '" + clock + "'");
        if (seeds_per_cell < 1) fail("seeds_per_cell", "must be >= 1");
        if (!(eps > 0 && eps < 0.5)) fail("eps", "must be in (0, 1/2)");
        if (!(eps_prime > eps && eps_prime < 0.5)) fail("eps_prime", "must be in (eps, 1/2)");
        for (auto n : n_list)
            for (double b : beta_list)
                if (b < 0 || b > (double)n)
                    fail("beta_list", "beta must be in [0, n] for every n in n_list");
    }
};

// Per-run seed derivation (documented, order-independent): fold the cell
// coordinates into the master seed with derive(): n, then the bit pattern of
// beta, then the variant index, then the seed index.
inline std::uint64_t cell_seed(std::uint64_t master, std::uint32_t n, double beta,
                               std::uint32_t variant_index, std::uint32_t seed_index) {
    return derive(master, n, std::bit_cast<std::uint64_t>(beta), variant_index, seed_index);
}

inline RunSummary run_one(std::uint32_t n, double beta, Rewiring rewiring, ClockKind clk,
                          std::uint64_t seed, const SweepConfig& cfg) {
    Rng init(derive(seed, (std::uint64_t)0x696e6974ULL)); // "init" stream
    NetState s = NetState::sample(n, init);
    RunConfig rc;
    rc.max_steps = cfg.max_steps;
    rc.record_tau_star = {cfg.eps, cfg.eps_prime};
    for (double e : cfg.extra_tau_star) rc.record_tau_star.push_back(e);
    if (cfg.stop_on_tau_star) rc.stop_tau_star = {cfg.eps};
    rc.trajectory_stride = cfg.trajectory_stride;
    return run_until(s, ModelVariant{rewiring, clk}, beta, rc, seed);
}

// One RunSummary per (n, beta, variant, seed), ordered by those coordinates.
// Cells execute in a work pool; output order does not depend on scheduling.
inline std::vector<RunSummary> sweep(const SweepConfig& cfg) {
    cfg.validate();
    ClockKind clk = *parse_clock(cfg.clock);
    struct Task {
        std::uint32_t n;
        double beta;
        Rewiring rewiring;
        std::uint32_t variant_index;
        std::uint32_t seed_index;
    };
    std::vector<Task> tasks;
    for (std::uint32_t n : cfg.n_list)
        for (double beta : cfg.beta_list)
            for (std::uint32_t vi = 0; vi < cfg.variants.size(); ++vi)
                for (std::uint32_t si = 0; si < cfg.seeds_per_cell; ++si)
                    tasks.push_back({n, beta, *parse_rewiring(cfg.variants[vi]), vi, si});

    std::vector<RunSummary> rows(tasks.size());
    unsigned nthreads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, (unsigned)tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            std::uint64_t seed = cell_seed(cfg.master_seed, t.n, t.beta, t.variant_index, t.seed_index);
            rows[i] = run_one(t.n, t.beta, t.rewiring, clk, seed, cfg);
        }
    };
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty");
    std::sort(xs.begin(), xs.end());
    std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

struct ScalingFit {
    double slope = 0;
    double ci_lo = 0;
    double ci_hi = 0;
    bool lower_bound = false; // some cell was all-censored; slope uses censoring bounds
};

// Least-squares slope of log median(tau) against log n, with a 95% bootstrap
// CI from resampling seeds within each n-cell. Censored runs are dropped
// from medians; a fully censored cell contributes its censoring bound and
// flags the fit as a lower bound.
inline ScalingFit scaling_exponent(const std::vector<RunSummary>& rows, double beta,
                                   Rewiring rewiring, std::uint64_t bootstrap_seed = 1,
                                   int bootstrap_rounds = 1000) {
    std::vector<std::uint32_t> ns;
    for (const auto& r : rows)
        if (r.beta == beta && r.rewiring == rewiring && std::find(ns.begin(), ns.end(), r.n) == ns.end())
            ns.push_back(r.n);
    std::sort(ns.begin(), ns.end());
    if (ns.size() < 2) throw std::invalid_argument("scaling_exponent: need >= 2 distinct n");

    ScalingFit fit;
    std::vector<std::vector<double>> taus(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        std::vector<double> uncensored, censored;
        for (const auto& r : rows) {
            if (r.beta != beta || r.rewiring != rewiring || r.n != ns[i]) continue;
            (r.censored ? censored : uncensored).push_back((double)r.tau);
        }
        if (uncensored.empty()) {
            if (censored.empty()) throw std::invalid_argument("scaling_exponent: empty cell");
            fit.lower_bound = true;
            taus[i] = censored;
        } else {
            if (uncensored.size() < 10 && !fit.lower_bound)
                throw std::invalid_argument("scaling_exponent: need >= 10 uncensored runs per n");
            taus[i] = uncensored;
        }
    }

    auto fit_slope = [&](const std::vector<double>& medians) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        auto m = (double)ns.size();
        for (std::size_t i = 0; i < ns.size(); ++i) {
            double x = std::log((double)ns[i]);
            double y = std::log(medians[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };

    std::vector<double> medians(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) medians[i] = median(taus[i]);
    fit.slope = fit_slope(medians);

    std::vector<double> boots(bootstrap_rounds);
    Rng rng(derive(bootstrap_seed, (std::uint64_t)0x626f6f74ULL));
    std::vector<double> resampled(ns.size());
    for (int b = 0; b < bootstrap_rounds; ++b) {
        for (std::size_t i = 0; i < ns.size(); ++i) {
            std::vector<double> pick(taus[i].size());
            for (auto& p : pick) p = taus[i][rng.uniform_below(taus[i].size())];
            resampled[i] = median(pick);
        }
        boots[b] = fit_slope(resampled);
    }
    std::sort(boots.begin(), boots.end());
    fit.ci_lo = boots[(std::size_t)(0.025 * (bootstrap_rounds - 1))];
    fit.ci_hi = boots[(std::size_t)(0.975 * (bootstrap_rounds - 1))];
    return fit;
}

// Initial states for the split experiment: exactly floor(p*n) opinion-1
// vertices, edge count in [12n^2/50, 13n^2/50] by rejection on the G(n,1/2)
// bond coins.
inline NetState make_gstar(std::uint32_t n, double p, Rng& rng) {
    if (!(p > 0 && p < 0.5)) throw std::invalid_argument("make_gstar: p must be in (0, 1/2)");
    auto m = (std::uint32_t)std::floor(p * (double)n);
    if (m < 1) throw std::invalid_argument("make_gstar: floor(p*n) must be >= 1");
    double lo = 12.0 * (double)n * n / 50.0;
    double hi = 13.0 * (double)n * n / 50.0;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        std::vector<Bond> bonds;
        bonds.reserve((std::size_t)n * n / 4 + n);
        for (VertexId u = 0; u < n; ++u)
            for (VertexId v = u + 1; v < n; ++v)
                if (rng.next_u64() >> 63) bonds.emplace_back(u, v);
        auto cnt = (double)bonds.size();
        if (cnt < lo || cnt > hi) continue;
        std::vector<std::uint8_t> ops(n, 0);
        std::vector<VertexId> perm(n);
        for (VertexId v = 0; v < n; ++v) perm[v] = v;
        for (std::uint32_t i = 0; i < m; ++i) {
            std::uint64_t j = i + rng.uniform_below(n - i);
            std::swap(perm[i], perm[j]);
            ops[perm[i]] = 1;
        }
        return NetState::build(n, ops, bonds);
    }
    throw std::invalid_argument("make_gstar: could not hit the edge-count interval (n too small?)");
}

struct SplitResult {
    std::uint32_t seeds = 0;
    std::uint32_t successes = 0; // runs with tau < tau_*(p/2)
    double success_fraction = 0;
    std::vector<RunSummary> runs;
};

// Probes survival: from G*(p) states, does the rewire-to-random chain absorb
// before the minority fraction halves?
inline SplitResult split_experiment(std::uint32_t n, double beta, double p, std::uint32_t seeds,
                                    std::uint64_t master_seed, std::uint32_t threads = 0) {
    SplitResult res;
    res.seeds = seeds;
    res.runs.resize(seeds);
    std::atomic<std::uint32_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::uint32_t i = next.fetch_add(1);
            if (i >= seeds) return;
            std::uint64_t seed = derive(master_seed, (std::uint64_t)0x73706c6974ULL, i);
            Rng init(derive(seed, (std::uint64_t)0x696e6974ULL));
            NetState s = make_gstar(n, p, init);
            RunConfig rc;
            rc.record_tau_star = {p / 2.0};
            rc.stop_tau_star = {p / 2.0};
            res.runs[i] = run_until(s, ModelVariant{Rewiring::Random, ClockKind::Direct}, beta, rc, seed);
        }
    };
    unsigned nthreads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, seeds);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& r : res.runs)
        if (r.stop_reason == StopReason::Absorbed) ++res.successes;
    res.success_fraction = (double)res.successes / (double)seeds;
    return res;
}

} // namespace evoter
