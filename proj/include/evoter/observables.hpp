#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "evoter/graph.hpp"
#include "evoter/rng.hpp"

namespace evoter {

// The stopping-time parameter family plus monitor knobs. Defaults are
// calibrated so the monitor is informative at n ~ 100..500; validate()
// enforces the orderings between them.
struct StoppingConfig {
    double eps = 0.05;
    double eps_prime = 0.1;
    double eps2 = 0.04;   // cut-size qualifier: min(|S|,|T|) >= eps2*n
    double eps3 = 0.03;   // tau2 at L >= eps3^2, tau2' at L' >= 2*eps3
    double eps4 = 0.6;    // tau3 at M >= eps4*log n (natural log)
    double eps7 = 0.005;  // product-measure tolerance band
    double eps14 = 2e-5;  // mixing floor: lambda >= beta*eps14
    double c1 = 100.0;    // balancedness scale; tau4 at a non-c1-balanced vertex
    double c2 = 2.0;      // tau5' degree ceiling D_max > c2*n
    double delta = 1e-7;
    double c = 10.0;      // duality horizon scale (times C*n^2/beta)
    int cut_sample_count = 200;

    void validate() const {
        auto fail = [](const std::string& k, const std::string& why) {
            throw std::invalid_argument("StoppingConfig: " + k + " " + why);
        };
        for (auto [v, k] : {std::pair{eps, "eps"}, {eps_prime, "eps_prime"}, {eps2, "eps2"},
                            {eps3, "eps3"}, {eps4, "eps4"}, {eps7, "eps7"}, {eps14, "eps14"},
                            {c1, "c1"}, {c2, "c2"}, {delta, "delta"}, {c, "c"}})
            if (!(v > 0)) fail(k, "must be positive");
        if (!(eps < eps_prime)) fail("eps", "must be < eps_prime");
        if (!(eps_prime < 0.5)) fail("eps_prime", "must be < 1/2");
        if (!(eps2 < eps)) fail("eps2", "must be < eps");
        if (!(eps3 < eps2)) fail("eps3", "must be < eps2");
        if (!(eps7 < eps3)) fail("eps7", "must be < eps3");
        if (!(eps4 < 1.0)) fail("eps4", "must be < 1");
        if (!(eps14 < eps * eps / 100.0)) fail("eps14", "must be < eps^2/100");
        if (!(delta < eps3 / (10000.0 * c2))) fail("delta", "must be < eps3/(10000*c2)");
        if (cut_sample_count < 1) fail("cut_sample_count", "must be >= 1");
    }
};

// Per-cut counts and deviation statistics.
struct CutStat {
    std::uint32_t s_size = 0, t_size = 0;
    std::uint64_t n_ss = 0, n_st = 0, n_tt = 0;
    double k_st = 0;        // ((N_SS - |S|^2/4)/N)^2 + ((N_TT - |T|^2/4)/N)^2
    double lprime_term = 0; // max(|N_ST - |S||T|/2|, |N_SS - |S|^2/4|) / N
};

inline CutStat cut_stats(const NetState& s, const std::vector<std::uint8_t>& in_s) {
    if (in_s.size() != s.n) throw std::invalid_argument("cut_stats: mask size != n");
    CutStat c;
    for (VertexId v = 0; v < s.n; ++v)
        if (in_s[v]) ++c.s_size;
    c.t_size = s.n - c.s_size;
    if (c.s_size == 0 || c.t_size == 0) throw std::invalid_argument("cut_stats: S must be a proper nonempty subset");
    std::size_t nedges = s.edge_count();
    if (nedges == 0) throw std::invalid_argument("cut_stats: empty graph (N = 0)");
    for (const Bond& b : s.placement) {
        int k = (int)in_s[b.a] + (int)in_s[b.b];
        if (k == 2) ++c.n_ss;
        else if (k == 1) ++c.n_st;
        else ++c.n_tt;
    }
    double n_d = (double)nedges;
    double dss = ((double)c.n_ss - (double)c.s_size * c.s_size / 4.0) / n_d;
    double dtt = ((double)c.n_tt - (double)c.t_size * c.t_size / 4.0) / n_d;
    double dst = ((double)c.n_st - (double)c.s_size * c.t_size / 2.0) / n_d;
    c.k_st = dss * dss + dtt * dtt;
    c.lprime_term = std::max(std::abs(dst), std::abs(dss));
    return c;
}

struct CutExtremum {
    double value = 0;
    std::vector<std::uint8_t> cut;  // membership mask of the witnessing S
    std::string label;              // "opinion", "prefix(k)", "random", "exact"
};

namespace detail {

struct CutCounts {
    std::uint32_t s_size;
    std::uint64_t n_ss, n_st, n_tt;
};

inline CutCounts mask_counts(const NetState& s, std::uint32_t mask) {
    CutCounts c{(std::uint32_t)std::popcount(mask), 0, 0, 0};
    for (const Bond& b : s.placement) {
        int k = ((mask >> b.a) & 1) + ((mask >> b.b) & 1);
        if (k == 2) ++c.n_ss;
        else if (k == 1) ++c.n_st;
        else ++c.n_tt;
    }
    return c;
}

inline double k_of(const CutCounts& c, std::uint32_t n, double nedges) {
    double dss = ((double)c.n_ss - (double)c.s_size * c.s_size / 4.0) / nedges;
    std::uint32_t t = n - c.s_size;
    double dtt = ((double)c.n_tt - (double)t * t / 4.0) / nedges;
    return dss * dss + dtt * dtt;
}

inline double lprime_of(const CutCounts& c, std::uint32_t n, double nedges) {
    std::uint32_t t = n - c.s_size;
    double dss = ((double)c.n_ss - (double)c.s_size * c.s_size / 4.0) / nedges;
    double dst = ((double)c.n_st - (double)c.s_size * t / 2.0) / nedges;
    return std::max(std::abs(dst), std::abs(dss));
}

inline std::vector<std::uint8_t> mask_to_cut(std::uint32_t mask, std::uint32_t n) {
    std::vector<std::uint8_t> cut(n, 0);
    for (std::uint32_t v = 0; v < n; ++v) cut[v] = (mask >> v) & 1;
    return cut;
}

// Degree-sorted vertex order (descending degree, ties by id).
inline std::vector<VertexId> degree_order(const NetState& s) {
    std::vector<VertexId> order(s.n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](VertexId a, VertexId b) { return s.degree[a] > s.degree[b]; });
    return order;
}

// For every prefix size k of `order`, counts of edges inside/crossing the
// prefix, computed in one O(N + n) sweep.
struct PrefixCounts {
    std::vector<std::uint64_t> n_ss; // index k: edges with both endpoints among first k
    std::vector<std::uint64_t> n_tt; // edges with no endpoint among first k
    std::vector<std::uint64_t> n_st;
};

inline PrefixCounts prefix_counts(const NetState& s, const std::vector<VertexId>& order) {
    std::vector<std::uint32_t> rank(s.n);
    for (std::uint32_t i = 0; i < s.n; ++i) rank[order[i]] = i;
    std::vector<std::uint64_t> by_hi(s.n + 1, 0), by_lo(s.n + 1, 0);
    for (const Bond& b : s.placement) {
        std::uint32_t r1 = std::min(rank[b.a], rank[b.b]);
        std::uint32_t r2 = std::max(rank[b.a], rank[b.b]);
        ++by_hi[r2];
        ++by_lo[r1];
    }
    PrefixCounts pc;
    pc.n_ss.assign(s.n + 1, 0);
    pc.n_tt.assign(s.n + 1, 0);
    pc.n_st.assign(s.n + 1, 0);
    std::uint64_t nedges = s.edge_count();
    // N_SS(k) = #edges with max-rank < k; N_TT(k) = #edges with min-rank >= k.
    std::uint64_t acc = 0;
    for (std::uint32_t k = 0; k <= s.n; ++k) {
        pc.n_ss[k] = acc;
        if (k < s.n) acc += by_hi[k];
    }
    std::uint64_t suf = 0;
    for (std::int64_t k = s.n; k >= 0; --k) {
        pc.n_tt[k] = suf;
        if (k > 0) suf += by_lo[k - 1];
    }
    for (std::uint32_t k = 0; k <= s.n; ++k) pc.n_st[k] = nedges - pc.n_ss[k] - pc.n_tt[k];
    return pc;
}

} // namespace detail

struct ExactCutMax {
    double l = 0;
    std::vector<std::uint8_t> l_cut;
    double l_prime = 0;
    std::vector<std::uint8_t> l_prime_cut;
};

// Exact maxima over all qualifying cuts by 2^n enumeration (n <= 16).
inline ExactCutMax cut_maxima_exact(const NetState& s, double eps2) {
    if (s.n > 16) throw std::length_error("L_exact: n > 16; use L_sampled");
    if (s.edge_count() == 0) throw std::invalid_argument("L_exact: empty graph (N = 0)");
    ExactCutMax best;
    best.l = -1;
    best.l_prime = -1;
    double nedges = (double)s.edge_count();
    std::uint32_t full = (s.n == 32) ? 0xffffffffu : ((1u << s.n) - 1);
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        auto cc = detail::mask_counts(s, mask);
        std::uint32_t mn = std::min(cc.s_size, s.n - cc.s_size);
        if ((double)mn < eps2 * (double)s.n) continue;
        double k = detail::k_of(cc, s.n, nedges);
        if (k > best.l) {
            best.l = k;
            best.l_cut = detail::mask_to_cut(mask, s.n);
        }
        double lp = detail::lprime_of(cc, s.n, nedges);
        if (lp > best.l_prime) {
            best.l_prime = lp;
            best.l_prime_cut = detail::mask_to_cut(mask, s.n);
        }
    }
    if (best.l < 0) throw std::invalid_argument("L_exact: no qualifying cut (eps2 too large)");
    return best;
}

inline std::pair<double, std::vector<std::uint8_t>> l_exact(const NetState& s, double eps2) {
    auto m = cut_maxima_exact(s, eps2);
    return {m.l, m.l_cut};
}

inline std::pair<double, std::vector<std::uint8_t>> l_prime_exact(const NetState& s, double eps2) {
    auto m = cut_maxima_exact(s, eps2);
    return {m.l_prime, m.l_prime_cut};
}

struct SampledCutMax {
    CutExtremum l;        // lower bound for L
    CutExtremum l_prime;  // lower bound for L'
    int cuts_seen = 0;
};

// Lower-bound estimates of L and L' from a sampled cut family: the opinion
// cut plus `samples` uniform random qualifying cuts. Degree-sorted prefix
// cuts are deliberately not in this family: their K deviation is biased
// upward on every G(n,1/2)-like state, which would fire tau2 on states the
// monitor must treat as unexceptional.
inline SampledCutMax cut_maxima_sampled(const NetState& s, double eps2, int samples, Rng& rng) {
    if (s.edge_count() == 0) throw std::invalid_argument("L_sampled: empty graph (N = 0)");
    SampledCutMax best;
    best.l.value = 0;
    best.l_prime.value = 0;
    double nedges = (double)s.edge_count();
    auto qualifies = [&](std::uint32_t s_size) {
        return (double)std::min(s_size, s.n - s_size) >= eps2 * (double)s.n && s_size > 0 && s_size < s.n;
    };
    auto consider = [&](std::uint32_t s_size, std::uint64_t n_ss, std::uint64_t n_st, std::uint64_t n_tt,
                        const std::string& label, const std::vector<std::uint8_t>* cut) {
        detail::CutCounts cc{s_size, n_ss, n_st, n_tt};
        ++best.cuts_seen;
        double k = detail::k_of(cc, s.n, nedges);
        if (k > best.l.value || best.cuts_seen == 1) {
            best.l.value = k;
            best.l.label = label;
            if (cut) best.l.cut = *cut;
        }
        double lp = detail::lprime_of(cc, s.n, nedges);
        if (lp > best.l_prime.value || best.cuts_seen == 1) {
            best.l_prime.value = lp;
            best.l_prime.label = label;
            if (cut) best.l_prime.cut = *cut;
        }
    };

    // Opinion cut: S = current opinion-0 set, when it qualifies.
    if (qualifies(s.n0)) {
        std::vector<std::uint8_t> cut(s.n);
        for (VertexId v = 0; v < s.n; ++v) cut[v] = s.opinions[v] == 0;
        auto cs = cut_stats(s, cut);
        consider(cs.s_size, cs.n_ss, cs.n_st, cs.n_tt, "opinion", &cut);
    }
    // Uniform random qualifying cuts.
    std::vector<std::uint8_t> cut(s.n);
    for (int i = 0; i < samples; ++i) {
        std::uint32_t s_size = 0;
        int tries = 0;
        do {
            s_size = 0;
            for (VertexId v = 0; v < s.n; ++v) {
                cut[v] = (std::uint8_t)(rng.next_u64() >> 63);
                s_size += cut[v];
            }
        } while (!qualifies(s_size) && ++tries < 1000);
        if (!qualifies(s_size)) break;
        auto cs = cut_stats(s, cut);
        consider(cs.s_size, cs.n_ss, cs.n_st, cs.n_tt, "random", &cut);
    }
    return best;
}

struct MaxMultiplicity {
    std::uint32_t value = 0;
    Bond bond{0, 1};
};

inline MaxMultiplicity max_multiplicity(const NetState& s) {
    MaxMultiplicity m;
    for (const auto& [key, count] : s.multiplicity) {
        if (count > m.value) {
            m.value = count;
            m.bond = Bond((VertexId)(key >> 32), (VertexId)(key & 0xffffffffu));
        }
    }
    return m;
}

struct BalanceReport {
    bool balanced = true;
    std::uint32_t violating_k = 0;
    std::uint64_t count_at_k = 0;
};

// v is eps-balanced when #{u : M_uv = k} <= eps * 10^-k * n for every k >= 1.
inline BalanceReport is_balanced(const NetState& s, VertexId v, double eps_bal) {
    if (eps_bal <= 0) throw std::invalid_argument("is_balanced: eps must be positive");
    std::unordered_map<VertexId, std::uint32_t> per_neighbor;
    per_neighbor.reserve(s.incidence[v].size());
    for (EdgeId e : s.incidence[v]) ++per_neighbor[s.placement[e].other(v)];
    std::map<std::uint32_t, std::uint64_t> profile;
    for (const auto& [u, m] : per_neighbor) ++profile[m];
    BalanceReport r;
    for (const auto& [k, count] : profile) {
        if ((double)count > eps_bal * std::pow(10.0, -(double)k) * (double)s.n) {
            r.balanced = false;
            r.violating_k = k;
            r.count_at_k = count;
            return r;
        }
    }
    return r;
}

struct DegreeExtremes {
    std::uint32_t d_max = 0;
    VertexId argmax = 0;
    std::uint32_t d_min = 0;
    VertexId argmin = 0;
};

inline DegreeExtremes degree_extremes(const NetState& s) {
    DegreeExtremes d;
    d.d_min = s.degree[0];
    for (VertexId v = 0; v < s.n; ++v) {
        if (s.degree[v] > d.d_max) {
            d.d_max = s.degree[v];
            d.argmax = v;
        }
        if (s.degree[v] < d.d_min) {
            d.d_min = s.degree[v];
            d.argmin = v;
        }
    }
    return d;
}

struct MonitorEntry {
    std::string name;
    bool fired = false;
    std::string witness;
};

struct MonitorReport {
    std::vector<MonitorEntry> entries;
    double l_value = 0;       // L (exact for n <= 16, sampled lower bound otherwise)
    double l_prime_value = 0;
    std::uint32_t max_mult = 0;
    DegreeExtremes degrees;

    const MonitorEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
    bool fired(const std::string& name) const {
        const MonitorEntry* e = find(name);
        return e && e->fired;
    }
    bool any_fired() const {
        for (const auto& e : entries)
            if (e.fired) return true;
        return false;
    }
};

// Evaluates all eight strong/weak stopping conditions plus tau_*(eps) and
// tau_*(eps') on a snapshot. L-based conditions use the exact maximization
// for n <= 16 and the sampled lower bound otherwise.
inline MonitorReport monitor(const NetState& s, const StoppingConfig& cfg, Rng& rng) {
    MonitorReport rep;
    auto add = [&](const std::string& name, bool fired, const std::string& witness) {
        rep.entries.push_back({name, fired, fired ? witness : std::string()});
    };
    std::ostringstream w;

    // tau_*
    double minority = (double)s.minority();
    w.str("");
    w << "N_*=" << s.minority();
    add("tau_star", minority <= cfg.eps * s.n, w.str());
    add("tau_star_prime", minority <= cfg.eps_prime * s.n, w.str());

    // Cuts
    std::string l_label, lp_label;
    if (s.edge_count() == 0) {
        rep.l_value = 0;
        rep.l_prime_value = 0;
        l_label = lp_label = "empty-graph";
    } else if (s.n <= 16) {
        auto m = cut_maxima_exact(s, cfg.eps2);
        rep.l_value = m.l;
        rep.l_prime_value = m.l_prime;
        l_label = lp_label = "exact";
    } else {
        auto m = cut_maxima_sampled(s, cfg.eps2, cfg.cut_sample_count, rng);
        rep.l_value = m.l.value;
        rep.l_prime_value = m.l_prime.value;
        l_label = m.l.label;
        lp_label = m.l_prime.label;
    }
    w.str("");
    w << "L=" << rep.l_value << " via " << l_label;
    add("tau2", rep.l_value >= cfg.eps3 * cfg.eps3, w.str());
    w.str("");
    w << "L'=" << rep.l_prime_value << " via " << lp_label;
    add("tau2_weak", rep.l_prime_value >= 2.0 * cfg.eps3, w.str());

    // Edge multiplicity
    auto mm = max_multiplicity(s);
    rep.max_mult = mm.value;
    double logn = std::log((double)s.n);
    w.str("");
    w << "M=" << mm.value << " at bond (" << mm.bond.a << "," << mm.bond.b << ")";
    add("tau3", (double)mm.value >= cfg.eps4 * logn, w.str());
    add("tau3_weak", (double)mm.value >= 2.0 * cfg.eps4 * logn, w.str());

    // Balancedness
    bool strong_fired = false, weak_fired = false;
    std::string strong_w, weak_w;
    for (VertexId v = 0; v < s.n && !(strong_fired && weak_fired); ++v) {
        if (!strong_fired) {
            auto b = is_balanced(s, v, cfg.c1);
            if (!b.balanced) {
                strong_fired = true;
                std::ostringstream ww;
                ww << "vertex " << v << " not " << cfg.c1 << "-balanced at k=" << b.violating_k;
                strong_w = ww.str();
            }
        }
        if (!weak_fired) {
            auto b = is_balanced(s, v, 2.0 * cfg.c1);
            if (!b.balanced) {
                weak_fired = true;
                std::ostringstream ww;
                ww << "vertex " << v << " not " << 2.0 * cfg.c1 << "-balanced at k=" << b.violating_k;
                weak_w = ww.str();
            }
        }
    }
    add("tau4", strong_fired, strong_w);
    add("tau4_weak", weak_fired, weak_w);

    // Degrees
    rep.degrees = degree_extremes(s);
    w.str("");
    w << "D_max=" << rep.degrees.d_max << " at " << rep.degrees.argmax << ", D_min=" << rep.degrees.d_min
      << " at " << rep.degrees.argmin;
    bool tau5 = (double)rep.degrees.d_max > (1.0 - cfg.eps / 2.0) * s.n ||
                (double)rep.degrees.d_min < cfg.eps * s.n / 2.0;
    bool tau5w = (double)rep.degrees.d_max > cfg.c2 * s.n || (double)rep.degrees.d_min < cfg.eps * s.n / 4.0;
    add("tau5", tau5, w.str());
    add("tau5_weak", tau5w, w.str());
    return rep;
}

// Tracks first firing steps across monitor calls along a run.
struct MonitorAccumulator {
    std::map<std::string, std::uint64_t> first_fired;

    void fold(const MonitorReport& rep, std::uint64_t t) {
        for (const auto& e : rep.entries)
            if (e.fired && !first_fired.count(e.name)) first_fired[e.name] = t;
    }
};

} // namespace evoter
