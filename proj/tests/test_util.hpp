#pragma once

// Shared oracles for the unit and acceptance suites. Everything here derives
// expected values independently of the implementation paths it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evoter/dynamics.hpp"
#include "evoter/graph.hpp"

namespace testutil {

using namespace evoter;

// Two-sample Kolmogorov-Smirnov statistic. Ties are processed as blocks so
// the ECDF gap is only evaluated between distinct values.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
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
    return d;
}

// Critical value at significance alpha for the two-sample test.
inline double ks_critical(double alpha, std::size_t m, std::size_t n) {
    double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    return c * std::sqrt((double)(m + n) / ((double)m * (double)n));
}

// One-sample KS against a cdf.
template <typename Cdf>
inline double ks_one_sample(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - (double)i / xs.size()));
        d = std::max(d, std::abs((double)(i + 1) / xs.size() - f));
    }
    return d;
}

inline std::string outcome_key(const StepOutcome& o) {
    std::ostringstream s;
    switch (o.kind) {
        case StepKind::Relabel:
            s << "relabel root=" << o.root << " adopt=" << (int)o.adopted;
            break;
        case StepKind::Rewire:
            s << "rewire e=" << o.edge << " to=(" << o.to.a << "," << o.to.b << ")";
            break;
        case StepKind::AgreeingNoOp:
            s << "noop";
            break;
        case StepKind::Absorbed:
            s << "absorbed";
            break;
    }
    return s.str();
}

// Exact one-step outcome distribution for a small state, enumerated directly
// from the transition rules: pick an edge per the clock, pick the root
// uniformly among its endpoints, relabel with probability beta/n, otherwise
// rewire to a target drawn per the variant.
inline std::map<std::string, double> enumerate_kernel(const NetState& s, Rewiring rewiring,
                                                      ClockKind clock, double beta) {
    std::map<std::string, double> dist;
    double n = s.n;
    std::vector<EdgeId> chooseable;
    double p_edge;
    if (clock == ClockKind::Direct) {
        for (EdgeId e = 0; e < s.edge_count(); ++e)
            if (s.is_disagreeing(e)) chooseable.push_back(e);
        p_edge = 1.0 / (double)chooseable.size();
    } else {
        for (EdgeId e = 0; e < s.edge_count(); ++e) chooseable.push_back(e);
        p_edge = 1.0 / (double)s.edge_count();
    }
    for (EdgeId e : chooseable) {
        if (!s.is_disagreeing(e)) {
            dist["noop"] += p_edge;
            continue;
        }
        const Bond& bond = s.placement[e];
        for (VertexId root : {bond.a, bond.b}) {
            double p_root = p_edge * 0.5;
            VertexId other = bond.other(root);
            {
                StepOutcome o;
                o.kind = StepKind::Relabel;
                o.root = root;
                o.adopted = s.opinions[other];
                dist[outcome_key(o)] += p_root * (beta / n);
            }
            std::vector<VertexId> targets;
            if (rewiring == Rewiring::Random) {
                for (VertexId v = 0; v < s.n; ++v)
                    if (v != root) targets.push_back(v);
            } else {
                for (VertexId v = 0; v < s.n; ++v)
                    if (v != root && s.opinions[v] == s.opinions[root]) targets.push_back(v);
            }
            for (VertexId v : targets) {
                StepOutcome o;
                o.kind = StepKind::Rewire;
                o.edge = e;
                o.to = Bond(root, v);
                dist[outcome_key(o)] += p_root * (1.0 - beta / n) / (double)targets.size();
            }
        }
    }
    return dist;
}

// Empirical one-step outcome frequencies over `trials` fresh copies.
inline std::map<std::string, double> empirical_kernel(const NetState& s, Rewiring rewiring,
                                                      ClockKind clock, double beta, int trials,
                                                      std::uint64_t seed) {
    std::map<std::string, double> freq;
    for (int i = 0; i < trials; ++i) {
        NetState copy = s;
        ChainRng chain{derive(seed, (std::uint64_t)i)};
        StepOutcome o = step(copy, ModelVariant{rewiring, clock}, beta, chain);
        freq[outcome_key(o)] += 1.0 / (double)trials;
    }
    return freq;
}

// Max absolute per-outcome deviation between two distributions.
inline double kernel_distance(const std::map<std::string, double>& a,
                              const std::map<std::string, double>& b) {
    double worst = 0;
    for (const auto& [k, p] : a) {
        auto it = b.find(k);
        worst = std::max(worst, std::abs(p - (it == b.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, p] : b)
        if (!a.count(k)) worst = std::max(worst, p);
    return worst;
}

// Fixed 4-vertex state used by the kernel-exactness checks: opinions
// (0,0,1,1), edges (0,2), (1,2), (2,3), (0,1); two disagreeing edges.
inline NetState kernel_test_state() {
    return NetState::build(4, {0, 0, 1, 1}, {Bond(0, 2), Bond(1, 2), Bond(2, 3), Bond(0, 1)});
}

// n=2 state with one disagreeing edge: absorption needs a relabel, so tau is
// Geometric(beta/2).
inline NetState two_vertex_state() {
    return NetState::build(2, {0, 1}, {Bond(0, 1)});
}

} // namespace testutil
