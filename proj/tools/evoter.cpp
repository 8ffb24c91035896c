// evoter: simulation CLI for the evolving voter model on dense multigraphs.
// Subcommands: run, sweep, observe, duality, selftest.
// Exit codes: 0 ok, 1 selftest failure, 2 invalid configuration,
// 3 censored run under --require-absorption.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evoter/counter_engine.hpp"
#include "evoter/duality.hpp"
#include "evoter/dynamics.hpp"
#include "evoter/graph.hpp"
#include "evoter/harness.hpp"
#include "evoter/io.hpp"
#include "evoter/observables.hpp"
#include "evoter/snapshot.hpp"
#include "evoter/spectral.hpp"

using namespace evoter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSelftest = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCensored = 3;

struct ChainArgs {
    std::uint32_t n = 100;
    double beta = 1.0;
    std::string variant = "rewire-random";
    std::string clock = "direct";
    std::uint64_t seed = 1;
    std::string snapshot_in;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--n", n, "vertex count")->check(CLI::Range(2u, 2000000u));
        cmd->add_option("--beta", beta, "relabelling rate (per-step probability is beta/n)");
        cmd->add_option("--variant", variant, "rewire-random | rewire-same");
        cmd->add_option("--clock", clock, "direct | starred | continuous");
        cmd->add_option("--seed", seed, "chain seed");
        cmd->add_option("--snapshot-in", snapshot_in, "start from a snapshot file instead of G(n,1/2)");
    }

    ModelVariant parse_variant() const {
        auto rw = parse_rewiring(variant);
        if (!rw) throw std::invalid_argument("variant: unknown value '" + variant + "'");
        auto ck = parse_clock(clock);
        if (!ck) throw std::invalid_argument("clock: unknown value '" + clock + "'");
        return {*rw, *ck};
    }

    NetState make_state() const {
        if (!snapshot_in.empty()) {
            std::ifstream in(snapshot_in, std::ios::binary);
            if (!in) throw std::invalid_argument("snapshot-in: cannot open '" + snapshot_in + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            return snapshot_load(ss.str());
        }
        Rng init(derive(seed, (std::uint64_t)0x696e6974ULL));
        return NetState::sample(n, init);
    }

    void check_beta(std::uint32_t actual_n) const {
        if (beta < 0 || beta > (double)actual_n)
            throw std::invalid_argument("beta: must be in [0, n], got " + std::to_string(beta));
    }
};

int cmd_run(const ChainArgs& chain, std::uint64_t max_steps, double eps, double eps_prime,
            const std::vector<double>& extra_tau_star, bool stop_at_tau_star,
            bool require_absorption, const std::string& out_path, const std::string& traj_path,
            const std::string& snapshot_out) {
    NetState s = chain.make_state();
    chain.check_beta(s.n);
    if (!(eps > 0 && eps < eps_prime && eps_prime < 0.5))
        throw std::invalid_argument("eps/eps-prime: need 0 < eps < eps_prime < 1/2");
    RunConfig rc;
    rc.max_steps = max_steps;
    rc.record_tau_star = {eps, eps_prime};
    for (double e : extra_tau_star) rc.record_tau_star.push_back(e);
    if (stop_at_tau_star) rc.stop_tau_star = {eps};
    RunSummary r = run_until(s, chain.parse_variant(), chain.beta, rc, chain.seed);

    std::string line = run_summary_json(r).dump();
    if (out_path.empty()) {
        std::cout << line << '\n';
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::invalid_argument("out: cannot open '" + out_path + "'");
        out << line << '\n';
    }
    if (!traj_path.empty()) {
        std::ofstream out(traj_path, std::ios::binary);
        if (!out) throw std::invalid_argument("traj: cannot open '" + traj_path + "'");
        write_trajectory_csv(out, r);
    }
    if (!snapshot_out.empty()) {
        std::ofstream out(snapshot_out, std::ios::binary);
        if (!out) throw std::invalid_argument("snapshot-out: cannot open '" + snapshot_out + "'");
        out << snapshot_save(s);
    }
    auto bad = s.audit();
    if (!bad.empty()) {
        std::cerr << "state audit failed: " << bad[0] << "\n";
        return kExitSelftest;
    }
    if (require_absorption && r.censored) return kExitCensored;
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir, std::uint32_t threads, bool print_config, bool verbose) {
    ordered_json j = sweep_config_json(SweepConfig{});
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw std::invalid_argument("config: cannot open '" + config_path + "'");
        try {
            j = ordered_json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("config: ") + e.what());
        }
    }
    for (const auto& kv : overrides) apply_override(j, kv);
    SweepConfig cfg = sweep_config_from_json(j);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (threads) cfg.threads = threads;
    cfg.validate();
    if (print_config) {
        std::cout << sweep_config_json(cfg).dump(2) << '\n';
        return kExitOk;
    }
    if (verbose) {
        std::cerr << "sweep: " << cfg.n_list.size() * cfg.beta_list.size() * cfg.variants.size()
                  << " cells x " << cfg.seeds_per_cell << " seeds, master seed " << cfg.master_seed
                  << "\n";
    }
    auto rows = sweep(cfg);
    auto failures = write_sweep_outputs(cfg, rows);
    std::cerr << "wrote " << rows.size() << " runs to " << cfg.output_dir << "\n";
    if (!failures.empty()) {
        for (const auto& f : failures) std::cerr << "output failure: " << f << "\n";
        return kExitSelftest;
    }
    return kExitOk;
}

int cmd_observe(const ChainArgs& chain, std::uint64_t max_steps, std::uint64_t stride,
                int cut_samples, const std::string& out_path, const std::string& report_path) {
    NetState s = chain.make_state();
    chain.check_beta(s.n);
    StoppingConfig cfg;
    if (cut_samples > 0) cfg.cut_sample_count = cut_samples;
    cfg.validate();
    if (stride == 0) {
        stride = (std::uint64_t)s.n * s.n / 50;
        if (stride == 0) stride = 1;
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw std::invalid_argument("out: cannot open '" + out_path + "'");
        out = &file;
    }
    *out << "t,lambda,h_upper,dmax,dmin,M,L_sampled\n";

    MonitorAccumulator acc;
    std::uint64_t rows = 0;
    auto emit = [&](const NetState& state) {
        Rng cuts(derive(chain.seed, (std::uint64_t)0x6d6f6eULL, state.t));
        MonitorReport rep = monitor(state, cfg, cuts);
        acc.fold(rep, state.t);
        auto lam = spectral_gap(state, chain.beta);
        double h = 0;
        if (state.edge_count() > 0)
            h = cheeger(state, chain.beta, state.n <= 16 ? CheegerMode::Exact : CheegerMode::Sampled).h;
        *out << state.t << ',' << csv_double(lam.lambda) << ',' << csv_double(h) << ','
             << rep.degrees.d_max << ',' << rep.degrees.d_min << ',' << rep.max_mult << ','
             << csv_double(rep.l_value) << '\n';
        ++rows;
        return false; // never stops the run
    };

    RunConfig rc;
    rc.max_steps = max_steps;
    rc.monitor_stride = stride;
    rc.monitor = emit;
    RunSummary r = run_until(s, chain.parse_variant(), chain.beta, rc, chain.seed);

    if (!report_path.empty()) {
        Rng cuts(derive(chain.seed, (std::uint64_t)0x6d6f6eULL, s.t));
        ordered_json rep = monitor_report_json(monitor(s, cfg, cuts), s.t);
        ordered_json doc;
        doc["run"] = run_summary_json(r);
        doc["rows"] = rows;
        ordered_json fired = ordered_json::object();
        for (const auto& [name, t] : acc.first_fired) fired[name] = t;
        doc["first_fired"] = fired;
        doc["final"] = rep;
        std::ofstream rf(report_path, std::ios::binary);
        if (!rf) throw std::invalid_argument("report: cannot open '" + report_path + "'");
        rf << doc.dump(2) << '\n';
    }
    auto bad = s.audit();
    if (!bad.empty()) {
        std::cerr << "state audit failed: " << bad[0] << "\n";
        return kExitSelftest;
    }
    return kExitOk;
}

int cmd_duality(const ChainArgs& chain, const std::string& tv_times, std::uint32_t walkers,
                double horizon, bool collisions, bool disagreement, double c_scale,
                std::uint32_t tv_walkers, const std::string& out_path) {
    NetState s = chain.make_state();
    chain.check_beta(s.n);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw std::invalid_argument("out: cannot open '" + out_path + "'");
        out = &file;
    }

    if (!tv_times.empty()) {
        std::vector<double> times;
        std::stringstream ss(tv_times);
        std::string item;
        while (std::getline(ss, item, ',')) times.push_back(std::stod(item));
        *out << "time,tv\n";
        for (double t : times) {
            double tv = s.n <= 512 ? tv_to_uniform(s, 0, chain.beta, t, TvMode::Exact)
                                   : tv_to_uniform(s, 0, chain.beta, t, TvMode::Empirical, chain.seed,
                                                   tv_walkers);
            *out << csv_double(t) << ',' << csv_double(tv) << '\n';
        }
    }
    if (collisions) {
        std::vector<VertexId> starts;
        Rng pick(derive(chain.seed, (std::uint64_t)0x7374617274ULL));
        std::vector<VertexId> perm(s.n);
        for (VertexId v = 0; v < s.n; ++v) perm[v] = v;
        for (std::uint32_t i = 0; i < std::min(walkers, s.n); ++i) {
            std::uint64_t j = i + pick.uniform_below(s.n - i);
            std::swap(perm[i], perm[j]);
            starts.push_back(perm[i]);
        }
        auto ens = simulate_walks(s, starts, chain.beta, horizon, chain.seed);
        auto cs = collision_stats(ens);
        ordered_json j;
        j["walkers"] = cs.walkers;
        j["intersecting"] = cs.intersecting;
        j["fraction"] = cs.fraction;
        j["horizon"] = horizon;
        *out << j.dump() << '\n';
    }
    if (disagreement) {
        auto rw = chain.parse_variant().rewiring;
        auto rep = disagreement_fraction_test(s, rw, chain.beta, c_scale, chain.seed);
        ordered_json j;
        j["p_start"] = rep.p_start;
        j["p_hat"] = rep.p_hat;
        j["predicted"] = rep.predicted;
        j["measured_global"] = rep.measured_global;
        j["measured_cut"] = rep.measured_cut;
        j["cut_crossing"] = rep.cut_crossing;
        j["steps_advanced"] = rep.steps_advanced;
        j["absorbed_before_horizon"] = rep.absorbed_before_horizon;
        *out << j.dump() << '\n';
    }
    return kExitOk;
}

int cmd_selftest(const std::string& inject) {
    struct Check {
        std::string name;
        bool ok;
    };
    std::vector<Check> checks;
    auto record = [&](const std::string& name, bool ok) {
        checks.push_back({name, ok});
        std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    };

    // Audit fuzz over randomized op sequences.
    {
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 10 && ok; ++seed) {
            Rng rng(derive(31337, seed));
            NetState s = NetState::sample(12, rng);
            std::size_t nedges = s.edge_count();
            for (int i = 0; i < 400; ++i) {
                switch (rng.uniform_below(2)) {
                    case 0: s.flip_opinion((VertexId)rng.uniform_below(12)); break;
                    default: {
                        if (nedges == 0) break;
                        VertexId u = (VertexId)rng.uniform_below(12);
                        VertexId v = (VertexId)rng.uniform_below(12);
                        if (u != v) s.move_edge((EdgeId)rng.uniform_below(nedges), Bond(u, v));
                    }
                }
            }
            if (inject == "audit" && seed == 3 && !s.disagree.empty())
                s.disagree.remove(s.disagree.items()[0]);
            ok = s.audit().empty() && s.edge_count() == nedges;
        }
        record("audit-fuzz", ok);
    }

    // One-step kernel against exact enumeration on a fixed 4-vertex state.
    {
        NetState s = NetState::build(4, {0, 0, 1, 1},
                                     {Bond(0, 2), Bond(1, 2), Bond(2, 3), Bond(0, 1)});
        bool ok = true;
        for (Rewiring rw : {Rewiring::Random, Rewiring::Same}) {
            for (ClockKind ck : {ClockKind::Direct, ClockKind::Starred}) {
                std::map<std::string, double> expected, emp;
                double beta = 2.0;
                // Enumeration (independent of step()).
                std::vector<EdgeId> pool;
                for (EdgeId e = 0; e < s.edge_count(); ++e)
                    if (ck == ClockKind::Starred || s.is_disagreeing(e)) pool.push_back(e);
                for (EdgeId e : pool) {
                    double p_edge = 1.0 / (double)pool.size();
                    if (!s.is_disagreeing(e)) {
                        expected["noop"] += p_edge;
                        continue;
                    }
                    Bond bd = s.placement[e];
                    for (VertexId root : {bd.a, bd.b}) {
                        double p_root = p_edge / 2.0;
                        std::ostringstream rk;
                        rk << "relabel root=" << root << " adopt=" << (int)s.opinions[bd.other(root)];
                        expected[rk.str()] += p_root * beta / s.n;
                        std::vector<VertexId> targets;
                        for (VertexId v = 0; v < s.n; ++v) {
                            if (v == root) continue;
                            if (rw == Rewiring::Same && s.opinions[v] != s.opinions[root]) continue;
                            targets.push_back(v);
                        }
                        for (VertexId v : targets) {
                            Bond to(root, v);
                            std::ostringstream wk;
                            wk << "rewire e=" << e << " to=(" << to.a << "," << to.b << ")";
                            expected[wk.str()] += p_root * (1.0 - beta / s.n) / (double)targets.size();
                        }
                    }
                }
                const int trials = 20000;
                for (int i = 0; i < trials; ++i) {
                    NetState copy = s;
                    ChainRng chain{derive(606, (std::uint64_t)rw, (std::uint64_t)ck, (std::uint64_t)i)};
                    StepOutcome o = step(copy, ModelVariant{rw, ck}, beta, chain);
                    std::ostringstream k;
                    if (o.kind == StepKind::Relabel)
                        k << "relabel root=" << o.root << " adopt=" << (int)o.adopted;
                    else if (o.kind == StepKind::Rewire)
                        k << "rewire e=" << o.edge << " to=(" << o.to.a << "," << o.to.b << ")";
                    else
                        k << "noop";
                    emp[k.str()] += 1.0 / trials;
                }
                for (const auto& [k, p] : expected)
                    if (std::abs(p - (emp.count(k) ? emp[k] : 0.0)) > 0.015) ok = false;
                for (const auto& [k, p] : emp)
                    if (!expected.count(k)) ok = false;
            }
        }
        record("kernel-enumeration", ok);
    }

    // Spectral gap of K_n.
    {
        std::vector<Bond> bonds;
        for (VertexId u = 0; u < 64; ++u)
            for (VertexId v = u + 1; v < 64; ++v) bonds.emplace_back(u, v);
        NetState kn = NetState::build(64, std::vector<std::uint8_t>(64, 0), bonds);
        auto r = spectral_gap(kn, 2.0);
        record("kn-spectral-gap", std::abs(r.lambda - 1.0) < 1e-9);
    }

    // n=2 closed form.
    {
        double sum = 0;
        const int seeds = 10000;
        for (int i = 0; i < seeds; ++i) {
            NetState s2 = NetState::build(2, {0, 1}, {Bond(0, 1)});
            RunConfig rc;
            rc.max_steps = 1 << 20;
            sum += (double)run_until(s2, ModelVariant{Rewiring::Random, ClockKind::Direct}, 1.0, rc,
                                     derive(717, i))
                       .tau;
        }
        record("n2-closed-form", std::abs(sum / seeds - 2.0) < 0.1);
    }

    // Engine equivalence, reduced replication (500 vs 500).
    {
        std::vector<double> a, b;
        for (int i = 0; i < 500; ++i) {
            Rng ia(derive(811, i));
            NetState s1 = NetState::sample(40, ia);
            RunConfig rc;
            a.push_back((double)run_until(s1, ModelVariant{Rewiring::Random, ClockKind::Direct}, 2.0,
                                          rc, derive(812, i))
                            .tau);
            Rng ib(derive(813, i));
            NetState s2 = NetState::sample(40, ib);
            b.push_back((double)counter_engine_run(s2, 2.0, 0, derive(814, i)).summary.tau);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        double d = 0;
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            double x = std::min(a[i], b[j]);
            while (i < a.size() && a[i] == x) ++i;
            while (j < b.size() && b[j] == x) ++j;
            d = std::max(d, std::abs((double)i / a.size() - (double)j / b.size()));
        }
        double crit = std::sqrt(-std::log(0.0005) / 2.0) * std::sqrt(2.0 / 500.0);
        record("engine-equivalence-ks", d < crit);
    }

    std::vector<std::string> failed;
    for (const auto& c : checks)
        if (!c.ok) failed.push_back(c.name);
    if (!failed.empty()) {
        std::cout << "selftest FAILED:";
        for (const auto& f : failed) std::cout << ' ' << f;
        std::cout << "\n";
        return kExitSelftest;
    }
    std::cout << "selftest passed (" << checks.size() << " checks)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolving voter model on dense random multigraphs"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "progress notes on stderr");

    // run
    auto* run = app.add_subcommand("run", "single chain, RunSummary JSON on stdout");
    ChainArgs run_chain;
    run_chain.add_to(run);
    std::uint64_t run_max_steps = 0;
    double run_eps = 0.05, run_eps_prime = 0.1;
    std::vector<double> run_extra_tau;
    bool run_stop_tau = false, run_require_absorption = false;
    std::string run_out, run_traj, run_snapshot_out;
    run->add_option("--max-steps", run_max_steps, "step budget (0 = 20 n^3)");
    run->add_option("--eps", run_eps, "tau_* threshold (recorded)");
    run->add_option("--eps-prime", run_eps_prime, "second tau_* threshold (recorded)");
    run->add_option("--tau-star", run_extra_tau, "extra tau_* thresholds to record");
    run->add_flag("--stop-at-tau-star", run_stop_tau, "stop once N_* <= eps*n");
    run->add_flag("--require-absorption", run_require_absorption, "exit 3 if the run is censored");
    run->add_option("--out", run_out, "write the JSON line here instead of stdout");
    run->add_option("--traj", run_traj, "write trajectory CSV (t,n1,disagreeing)");
    run->add_option("--snapshot-out", run_snapshot_out, "write the final state snapshot");

    // sweep
    auto* sw = app.add_subcommand("sweep", "grid of runs; writes runs.jsonl, summary.csv");
    std::string sw_config, sw_out;
    std::vector<std::string> sw_sets;
    std::uint32_t sw_threads = 0;
    bool sw_print = false;
    sw->add_option("--config", sw_config, "JSON config file (keys: master_seed, n_list, beta_list, "
                                          "variants, clock, seeds_per_cell, eps, eps_prime, "
                                          "extra_tau_star, stop_on_tau_star, max_steps, "
                                          "trajectory_stride, emit_trajectories, output_dir, threads)");
    sw->add_option("--set", sw_sets, "override config keys, key=value (lists comma-separated)");
    sw->add_option("--out", sw_out, "output directory (overrides config output_dir)");
    sw->add_option("--threads", sw_threads, "worker threads (0 = hardware)");
    sw->add_flag("--print-config", sw_print, "print the normalized config and exit");

    // observe
    auto* ob = app.add_subcommand("observe", "run a chain and emit the stopping-time monitor CSV");
    ChainArgs ob_chain;
    ob_chain.add_to(ob);
    std::uint64_t ob_max_steps = 0, ob_stride = 0;
    int ob_cut_samples = 0;
    std::string ob_out, ob_report;
    ob->add_option("--max-steps", ob_max_steps, "step budget (0 = 20 n^3)");
    ob->add_option("--stride", ob_stride, "monitor stride in steps (0 = n^2/50)");
    ob->add_option("--cut-samples", ob_cut_samples, "random cuts per L_sampled call");
    ob->add_option("--out", ob_out, "CSV destination (default stdout)");
    ob->add_option("--report", ob_report, "write the accumulated monitor report JSON here");

    // duality
    auto* du = app.add_subcommand("duality", "random-walk duality checks on a frozen state");
    ChainArgs du_chain;
    du_chain.add_to(du);
    std::string du_tv, du_out;
    std::uint32_t du_walkers = 20, du_tv_walkers = 100000;
    double du_horizon = 1.0, du_c = 10.0;
    bool du_coll = false, du_dis = false;
    du->add_option("--tv-times", du_tv, "comma-separated times; emits CSV time,tv");
    du->add_option("--walkers", du_walkers, "walker count for --collisions");
    du->add_option("--horizon", du_horizon, "walk horizon for --collisions");
    du->add_flag("--collisions", du_coll, "simulate walkers and report path intersections");
    du->add_flag("--disagreement", du_dis, "advance C n^2/beta starred steps, compare with 2p(1-p)");
    du->add_option("--C", du_c, "horizon scale for --disagreement");
    du->add_option("--tv-walkers", du_tv_walkers, "walkers for empirical TV (n > 512)");
    du->add_option("--out", du_out, "destination (default stdout)");

    // selftest
    auto* st = app.add_subcommand("selftest", "fast integrity checks; nonzero exit on failure");
    std::string st_inject;
    st->add_option("--inject", st_inject, "testing hook: force a named check to fail (audit)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed())
            return cmd_run(run_chain, run_max_steps, run_eps, run_eps_prime, run_extra_tau,
                           run_stop_tau, run_require_absorption, run_out, run_traj, run_snapshot_out);
        if (sw->parsed()) return cmd_sweep(sw_config, sw_sets, sw_out, sw_threads, sw_print, verbose);
        if (ob->parsed())
            return cmd_observe(ob_chain, ob_max_steps, ob_stride, ob_cut_samples, ob_out, ob_report);
        if (du->parsed())
            return cmd_duality(du_chain, du_tv, du_walkers, du_horizon, du_coll, du_dis, du_c,
                               du_tv_walkers, du_out);
        if (st->parsed()) return cmd_selftest(st_inject);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSelftest;
    }
    return kExitOk;
}
