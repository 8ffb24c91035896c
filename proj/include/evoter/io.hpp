#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoter/dynamics.hpp"
#include "evoter/harness.hpp"
#include "evoter/observables.hpp"

namespace evoter {

using ordered_json = nlohmann::ordered_json;

// Fixed-width round-trippable float for CSV cells.
inline std::string csv_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline ordered_json run_summary_json(const RunSummary& r) {
    ordered_json j;
    j["n"] = r.n;
    j["beta"] = r.beta;
    j["variant"] = rewiring_name(r.rewiring);
    j["clock"] = clock_name(r.clock);
    j["seed"] = r.seed;
    j["tau"] = r.tau;
    j["censored"] = r.censored;
    j["stop_reason"] = stop_reason_name(r.stop_reason);
    j["minority_at_stop"] = r.minority_at_stop;
    j["n1_at_stop"] = r.n1_at_stop;
    j["disagreeing_at_stop"] = r.disagreeing_at_stop;
    j["relabel_count"] = r.relabel_count;
    j["rewire_count"] = r.rewire_count;
    j["noop_count"] = r.noop_count;
    if (r.clock == ClockKind::Continuous) j["continuous_time"] = r.continuous_time;
    ordered_json hits = ordered_json::object();
    for (const auto& h : r.tau_star_hits) {
        ordered_json v;
        v["hit"] = h.hit;
        if (h.hit) v["step"] = h.step;
        hits[ordered_json(h.eps).dump()] = v;
    }
    j["tau_star"] = hits;
    return j;
}

inline void write_trajectory_csv(std::ostream& out, const RunSummary& r) {
    out << "t,n1,disagreeing\n";
    for (const auto& p : r.trajectory) out << p.t << ',' << p.n1 << ',' << p.disagreeing << '\n';
}

inline ordered_json monitor_report_json(const MonitorReport& rep, std::uint64_t t) {
    ordered_json j;
    j["t"] = t;
    ordered_json entries = ordered_json::array();
    for (const auto& e : rep.entries) {
        ordered_json je;
        je["name"] = e.name;
        je["fired"] = e.fired;
        if (e.fired) je["witness"] = e.witness;
        entries.push_back(je);
    }
    j["stopping_times"] = entries;
    j["L"] = rep.l_value;
    j["L_prime"] = rep.l_prime_value;
    j["max_multiplicity"] = rep.max_mult;
    j["d_max"] = rep.degrees.d_max;
    j["d_min"] = rep.degrees.d_min;
    return j;
}

inline ordered_json sweep_config_json(const SweepConfig& c) {
    ordered_json j;
    j["master_seed"] = c.master_seed;
    j["n_list"] = c.n_list;
    j["beta_list"] = c.beta_list;
    j["variants"] = c.variants;
    j["clock"] = c.clock;
    j["seeds_per_cell"] = c.seeds_per_cell;
    j["eps"] = c.eps;
    j["eps_prime"] = c.eps_prime;
    j["extra_tau_star"] = c.extra_tau_star;
    j["stop_on_tau_star"] = c.stop_on_tau_star;
    j["max_steps"] = c.max_steps;
    j["trajectory_stride"] = c.trajectory_stride;
    j["emit_trajectories"] = c.emit_trajectories;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j;
}

inline SweepConfig sweep_config_from_json(const ordered_json& j) {
    SweepConfig c;
    static const std::vector<std::string> known = {
        "master_seed", "n_list", "beta_list", "variants", "clock", "seeds_per_cell",
        "eps", "eps_prime", "extra_tau_star", "stop_on_tau_star", "max_steps",
        "trajectory_stride", "emit_trajectories", "output_dir", "threads"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
    try {
        if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("n_list")) c.n_list = j["n_list"].get<std::vector<std::uint32_t>>();
        if (j.contains("beta_list")) c.beta_list = j["beta_list"].get<std::vector<double>>();
        if (j.contains("variants")) c.variants = j["variants"].get<std::vector<std::string>>();
        if (j.contains("clock")) c.clock = j["clock"].get<std::string>();
        if (j.contains("seeds_per_cell")) c.seeds_per_cell = j["seeds_per_cell"].get<std::uint32_t>();
        if (j.contains("eps")) c.eps = j["eps"].get<double>();
        if (j.contains("eps_prime")) c.eps_prime = j["eps_prime"].get<double>();
        if (j.contains("extra_tau_star")) c.extra_tau_star = j["extra_tau_star"].get<std::vector<double>>();
        if (j.contains("stop_on_tau_star")) c.stop_on_tau_star = j["stop_on_tau_star"].get<bool>();
        if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<std::uint64_t>();
        if (j.contains("trajectory_stride")) c.trajectory_stride = j["trajectory_stride"].get<std::uint64_t>();
        if (j.contains("emit_trajectories")) c.emit_trajectories = j["emit_trajectories"].get<bool>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("threads")) c.threads = j["threads"].get<std::uint32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return c;
}

// Dotted-key override, e.g. "beta_list=0.5,2" or "seeds_per_cell=10".
inline void apply_override(ordered_json& j, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override: expected key=value in '" + kv + "'");
    std::string key = kv.substr(0, eq);
    std::string val = kv.substr(eq + 1);
    auto parse_scalar = [](const std::string& v) -> ordered_json {
        if (v == "true") return true;
        if (v == "false") return false;
        try {
            std::size_t pos = 0;
            if (v.find_first_of(".eE") != std::string::npos) {
                double d = std::stod(v, &pos);
                if (pos == v.size()) return d;
            } else {
                long long i = std::stoll(v, &pos);
                if (pos == v.size()) return i;
            }
        } catch (...) {
        }
        return v;
    };
    if (val.find(',') != std::string::npos) {
        ordered_json arr = ordered_json::array();
        std::stringstream ss(val);
        std::string item;
        while (std::getline(ss, item, ',')) arr.push_back(parse_scalar(item));
        j[key] = arr;
    } else if (j.contains(key) && j[key].is_array()) {
        j[key] = ordered_json::array({parse_scalar(val)});
    } else {
        j[key] = parse_scalar(val);
    }
}

struct CellSummary {
    std::uint32_t n = 0;
    double beta = 0;
    std::string variant;
    std::string clock;
    std::uint32_t seeds = 0;
    std::uint32_t uncensored = 0;
    std::uint32_t censored = 0;
    double median_tau = 0;
    double mean_tau = 0;
    double mean_minority = 0;
    double frac_tau_star_eps = 0;
    double frac_tau_star_eps_prime = 0;
};

inline std::vector<CellSummary> summarize_cells(const std::vector<RunSummary>& rows) {
    std::map<std::tuple<std::uint32_t, double, std::string, std::string>, std::vector<const RunSummary*>> cells;
    for (const auto& r : rows)
        cells[{r.n, r.beta, rewiring_name(r.rewiring), clock_name(r.clock)}].push_back(&r);
    std::vector<CellSummary> out;
    for (const auto& [key, rs] : cells) {
        CellSummary c;
        std::tie(c.n, c.beta, c.variant, c.clock) = key;
        c.seeds = (std::uint32_t)rs.size();
        std::vector<double> taus;
        double tau_sum = 0, min_sum = 0;
        std::uint32_t hit0 = 0, hit1 = 0;
        for (const RunSummary* r : rs) {
            if (r->censored) ++c.censored; else ++c.uncensored;
            taus.push_back((double)r->tau);
            tau_sum += (double)r->tau;
            min_sum += r->minority_at_stop;
            if (r->tau_star_hits.size() > 0 && r->tau_star_hits[0].hit) ++hit0;
            if (r->tau_star_hits.size() > 1 && r->tau_star_hits[1].hit) ++hit1;
        }
        c.median_tau = median(taus);
        c.mean_tau = tau_sum / (double)rs.size();
        c.mean_minority = min_sum / (double)rs.size();
        c.frac_tau_star_eps = (double)hit0 / (double)rs.size();
        c.frac_tau_star_eps_prime = (double)hit1 / (double)rs.size();
        out.push_back(c);
    }
    return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
    out << "n,beta,variant,clock,seeds,uncensored,censored,median_tau,mean_tau,"
           "mean_minority_at_stop,frac_tau_star_eps,frac_tau_star_eps_prime\n";
    for (const auto& c : cells) {
        out << c.n << ',' << csv_double(c.beta) << ',' << c.variant << ',' << c.clock << ',' << c.seeds
            << ',' << c.uncensored << ',' << c.censored << ',' << csv_double(c.median_tau) << ','
            << csv_double(c.mean_tau) << ',' << csv_double(c.mean_minority) << ','
            << csv_double(c.frac_tau_star_eps) << ',' << csv_double(c.frac_tau_star_eps_prime) << '\n';
    }
}

// Writes runs.jsonl, summary.csv and (optionally) trajectories/*.csv under
// cfg.output_dir. Rows are emitted in cell order, so equal configs give
// byte-identical files. Per-file I/O failures are collected and returned
// rather than aborting the remaining writes.
inline std::vector<std::string> write_sweep_outputs(const SweepConfig& cfg,
                                                    const std::vector<RunSummary>& rows) {
    namespace fs = std::filesystem;
    std::vector<std::string> failures;
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(fs::path(cfg.output_dir) / "runs.jsonl", std::ios::binary);
        if (!out) {
            failures.push_back("runs.jsonl: cannot open for writing");
        } else {
            for (const auto& r : rows) out << run_summary_json(r).dump() << '\n';
        }
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "summary.csv", std::ios::binary);
        if (!out) failures.push_back("summary.csv: cannot open for writing");
        else write_summary_csv(out, summarize_cells(rows));
    }
    if (cfg.emit_trajectories) {
        fs::create_directories(fs::path(cfg.output_dir) / "trajectories");
        for (const auto& r : rows) {
            std::ostringstream name;
            name << "n" << r.n << "_beta" << csv_double(r.beta) << "_" << rewiring_name(r.rewiring) << "_"
                 << clock_name(r.clock) << "_seed" << r.seed << ".csv";
            std::ofstream out(fs::path(cfg.output_dir) / "trajectories" / name.str(), std::ios::binary);
            if (!out) {
                failures.push_back("trajectories/" + name.str() + ": cannot open for writing");
                continue;
            }
            write_trajectory_csv(out, r);
        }
    }
    return failures;
}

} // namespace evoter
