#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "evoter/rng.hpp"

namespace evoter {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

// Unordered pair of distinct vertices, stored as (min, max). Self-loops are
// not representable: the constructor rejects a == b.
struct Bond {
    VertexId a = 0;
    VertexId b = 0;

    Bond() = default;
    Bond(VertexId u, VertexId v) {
        if (u == v) throw std::invalid_argument("Bond: self-loop (u == v)");
        a = u < v ? u : v;
        b = u < v ? v : u;
    }

    std::uint64_t key() const { return ((std::uint64_t)a << 32) | b; }
    bool operator==(const Bond& o) const { return a == o.a && b == o.b; }
    bool operator!=(const Bond& o) const { return !(*this == o); }
    bool contains(VertexId v) const { return v == a || v == b; }
    VertexId other(VertexId v) const { return v == a ? b : a; }
};

// Dynamic set of ids with O(1) insert, remove, membership and uniform sample
// (dense array plus position map, swap-remove).
class IndexedSet {
  public:
    explicit IndexedSet(std::size_t universe = 0) : pos_(universe, -1) {}

    void reset(std::size_t universe) {
        items_.clear();
        pos_.assign(universe, -1);
    }

    bool contains(std::uint32_t x) const { return pos_[x] >= 0; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::vector<std::uint32_t>& items() const { return items_; }

    void insert(std::uint32_t x) {
        if (pos_[x] >= 0) return;
        pos_[x] = (std::int64_t)items_.size();
        items_.push_back(x);
    }

    void remove(std::uint32_t x) {
        std::int64_t i = pos_[x];
        if (i < 0) return;
        std::uint32_t last = items_.back();
        items_[(std::size_t)i] = last;
        pos_[last] = i;
        items_.pop_back();
        pos_[x] = -1;
    }

    std::uint32_t sample(Rng& rng) const { return items_[rng.uniform_below(items_.size())]; }

  private:
    std::vector<std::uint32_t> items_;
    std::vector<std::int64_t> pos_;
};

// Full Markov-chain state: labelled multigraph on n fixed vertices with
// binary opinions. Edges are fixed identities that migrate between bonds;
// the disagreeing-edge index supports O(1) uniform sampling. Single-writer:
// one logical owner mutates it, snapshots are plain copies.
struct NetState {
    std::uint32_t n = 0;
    std::vector<std::uint8_t> opinions;            // vertex -> {0,1}
    std::vector<Bond> placement;                   // edge -> bond
    std::vector<std::vector<EdgeId>> incidence;    // vertex -> incident edge ids
    std::vector<std::array<std::uint32_t, 2>> slot; // edge -> positions in incidence of (a, b)
    std::unordered_map<std::uint64_t, std::uint32_t> multiplicity; // bond key -> count, zero entries erased
    std::vector<std::uint32_t> degree;             // edge-multiplicity degree
    IndexedSet disagree;                           // disagreeing edge ids
    IndexedSet by_opinion[2];                      // vertices holding each opinion
    std::uint32_t n0 = 0, n1 = 0;
    std::uint64_t t = 0;

    std::size_t edge_count() const { return placement.size(); }
    std::uint32_t minority() const { return n0 < n1 ? n0 : n1; }

    bool is_disagreeing(EdgeId e) const {
        const Bond& b = placement[e];
        return opinions[b.a] != opinions[b.b];
    }

    std::uint32_t bond_multiplicity(VertexId u, VertexId v) const {
        if (u == v) return 0;
        auto it = multiplicity.find(Bond(u, v).key());
        return it == multiplicity.end() ? 0 : it->second;
    }

    // Builds a state from explicit parts; derived structures are recomputed.
    static NetState build(std::uint32_t n, const std::vector<std::uint8_t>& opinions,
                          const std::vector<Bond>& bonds) {
        if (n < 2) throw std::invalid_argument("NetState: n must be >= 2");
        if (opinions.size() != n) throw std::invalid_argument("NetState: opinions size != n");
        NetState s;
        s.n = n;
        s.opinions = opinions;
        s.incidence.assign(n, {});
        s.degree.assign(n, 0);
        s.disagree.reset(bonds.size());
        s.by_opinion[0].reset(n);
        s.by_opinion[1].reset(n);
        s.placement.reserve(bonds.size());
        s.slot.reserve(bonds.size());
        s.multiplicity.reserve(bonds.size());
        for (VertexId v = 0; v < n; ++v) {
            if (opinions[v] > 1) throw std::invalid_argument("NetState: opinion not in {0,1}");
            s.by_opinion[opinions[v]].insert(v);
            if (opinions[v]) ++s.n1; else ++s.n0;
        }
        for (const Bond& b : bonds) {
            if (b.a >= n || b.b >= n) throw std::invalid_argument("NetState: bond endpoint out of range");
            EdgeId e = (EdgeId)s.placement.size();
            s.placement.push_back(b);
            s.slot.push_back({(std::uint32_t)s.incidence[b.a].size(), (std::uint32_t)s.incidence[b.b].size()});
            s.incidence[b.a].push_back(e);
            s.incidence[b.b].push_back(e);
            ++s.multiplicity[b.key()];
            ++s.degree[b.a];
            ++s.degree[b.b];
            if (opinions[b.a] != opinions[b.b]) s.disagree.insert(e);
        }
        return s;
    }

    // Initial condition: each of the C(n,2) bonds holds one edge with
    // probability 1/2, opinions i.i.d. Ber(1/2). Stream order (pinned for
    // reproducibility): bond coins in row-major (u, v) order with u < v,
    // then opinion coins for v = 0..n-1. Edge labels follow the bond scan.
    static NetState sample(std::uint32_t n, Rng& rng) {
        if (n < 2) throw std::invalid_argument("sample_initial: n must be >= 2");
        std::vector<Bond> bonds;
        bonds.reserve((std::size_t)n * n / 4 + n);
        for (VertexId u = 0; u < n; ++u)
            for (VertexId v = u + 1; v < n; ++v)
                if (rng.next_u64() >> 63) bonds.emplace_back(u, v);
        std::vector<std::uint8_t> ops(n);
        for (VertexId v = 0; v < n; ++v) ops[v] = (std::uint8_t)(rng.next_u64() >> 63);
        return build(n, ops, bonds);
    }

    // Toggles v's opinion and reclassifies every incident edge. Returns the
    // number of edges whose agree/disagree status changed (== deg(v)).
    std::uint32_t flip_opinion(VertexId v) {
        if (v >= n) throw std::invalid_argument("flip_opinion: bad vertex");
        std::uint8_t old = opinions[v];
        by_opinion[old].remove(v);
        opinions[v] = (std::uint8_t)(1 - old);
        by_opinion[1 - old].insert(v);
        if (old) { --n1; ++n0; } else { --n0; ++n1; }
        for (EdgeId e : incidence[v]) {
            if (disagree.contains(e)) disagree.remove(e); else disagree.insert(e);
        }
        return (std::uint32_t)incidence[v].size();
    }

    // Relocates edge e to `target`; every derived structure stays coherent.
    // Returns the previous bond. The edge count is invariant by construction.
    Bond move_edge(EdgeId e, const Bond& target) {
        if (e >= placement.size()) throw std::invalid_argument("move_edge: bad edge");
        if (target.a >= n || target.b >= n) throw std::invalid_argument("move_edge: endpoint out of range");
        Bond prev = placement[e];
        detach(e, prev.a, 0);
        detach(e, prev.b, 1);
        auto it = multiplicity.find(prev.key());
        if (--it->second == 0) multiplicity.erase(it);
        --degree[prev.a];
        --degree[prev.b];

        placement[e] = target;
        slot[e] = {(std::uint32_t)incidence[target.a].size(), (std::uint32_t)incidence[target.b].size()};
        incidence[target.a].push_back(e);
        incidence[target.b].push_back(e);
        ++multiplicity[target.key()];
        ++degree[target.a];
        ++degree[target.b];

        bool dis = opinions[target.a] != opinions[target.b];
        if (dis && !disagree.contains(e)) disagree.insert(e);
        if (!dis && disagree.contains(e)) disagree.remove(e);
        return prev;
    }

    // Uniform over the disagreeing-edge set; empty set signals absorption.
    std::optional<EdgeId> sample_disagreeing(Rng& rng) const {
        if (disagree.empty()) return std::nullopt;
        return disagree.sample(rng);
    }

    // Recomputes every derived field from placement + opinions and reports
    // each mismatch. Empty result means the state is internally consistent.
    std::vector<std::string> audit() const {
        std::vector<std::string> bad;
        auto complain = [&](const std::string& s) { bad.push_back(s); };

        std::uint32_t c0 = 0, c1 = 0;
        for (VertexId v = 0; v < n; ++v) {
            if (opinions[v] > 1) complain("opinion out of range at vertex " + std::to_string(v));
            if (opinions[v]) ++c1; else ++c0;
            bool in0 = by_opinion[0].contains(v), in1 = by_opinion[1].contains(v);
            if (in0 == in1 || (opinions[v] == 0) != in0)
                complain("by_opinion: wrong membership for vertex " + std::to_string(v));
        }
        if (c0 != n0 || c1 != n1) complain("opinion counts: stored (" + std::to_string(n0) + "," +
                                           std::to_string(n1) + ") recomputed (" + std::to_string(c0) +
                                           "," + std::to_string(c1) + ")");
        if (n0 + n1 != n) complain("opinion counts do not sum to n");
        if (by_opinion[0].size() != c0 || by_opinion[1].size() != c1)
            complain("by_opinion sizes inconsistent");

        std::vector<std::uint32_t> deg(n, 0);
        std::unordered_map<std::uint64_t, std::uint32_t> mult;
        for (EdgeId e = 0; e < placement.size(); ++e) {
            const Bond& b = placement[e];
            if (b.a == b.b) complain("self-loop at edge " + std::to_string(e));
            if (b.a > b.b) complain("non-canonical bond at edge " + std::to_string(e));
            if (b.a >= n || b.b >= n) { complain("endpoint out of range at edge " + std::to_string(e)); continue; }
            ++deg[b.a];
            ++deg[b.b];
            ++mult[b.key()];
            if (slot[e][0] >= incidence[b.a].size() || incidence[b.a][slot[e][0]] != e)
                complain("incidence slot a wrong for edge " + std::to_string(e));
            if (slot[e][1] >= incidence[b.b].size() || incidence[b.b][slot[e][1]] != e)
                complain("incidence slot b wrong for edge " + std::to_string(e));
            bool dis = opinions[b.a] != opinions[b.b];
            if (dis != disagree.contains(e))
                complain("disagree_index wrong for edge " + std::to_string(e));
        }
        if (disagree.size() > placement.size()) complain("disagree_index larger than edge set");
        std::size_t inc_total = 0;
        for (VertexId v = 0; v < n; ++v) {
            inc_total += incidence[v].size();
            if (deg[v] != degree[v])
                complain("degree wrong at vertex " + std::to_string(v));
            if (incidence[v].size() != deg[v])
                complain("incidence size != degree at vertex " + std::to_string(v));
        }
        if (inc_total != 2 * placement.size()) complain("sum of degrees != 2N");
        if (mult.size() != multiplicity.size()) complain("multiplicity map has stale or missing bonds");
        for (const auto& [k, c] : mult) {
            auto it = multiplicity.find(k);
            if (it == multiplicity.end() || it->second != c)
                complain("multiplicity wrong for bond key " + std::to_string(k));
        }
        for (const auto& [k, c] : multiplicity)
            if (c == 0) complain("multiplicity map holds a zero entry");
        // Internal coherence of the disagree index itself.
        for (std::size_t i = 0; i < disagree.items().size(); ++i) {
            EdgeId e = disagree.items()[i];
            if (e >= placement.size() || !disagree.contains(e))
                complain("disagree_index internal inconsistency at position " + std::to_string(i));
        }
        return bad;
    }

  private:
    void detach(EdgeId e, VertexId v, int side) {
        auto& list = incidence[v];
        std::uint32_t i = slot[e][side];
        EdgeId moved = list.back();
        list[i] = moved;
        list.pop_back();
        if (moved != e) {
            const Bond& mb = placement[moved];
            slot[moved][mb.a == v ? 0 : 1] = i;
        } else if (i < list.size()) {
            // e occurred twice in this list only if placement had a self-loop,
            // which is unrepresentable; nothing to fix.
        }
    }
};

// Deep equality on the simulation-relevant state (internal ordering of the
// incidence lists, the disagree set and the opinion classes is ignored).
inline bool states_equal(const NetState& x, const NetState& y) {
    if (x.n != y.n || x.n0 != y.n0 || x.n1 != y.n1) return false;
    if (x.opinions != y.opinions || x.placement != y.placement) return false;
    if (x.degree != y.degree) return false;
    for (VertexId v = 0; v < x.n; ++v) {
        std::vector<EdgeId> a = x.incidence[v], b = y.incidence[v];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) return false;
    }
    if (x.multiplicity.size() != y.multiplicity.size()) return false;
    for (const auto& [k, c] : x.multiplicity) {
        auto it = y.multiplicity.find(k);
        if (it == y.multiplicity.end() || it->second != c) return false;
    }
    if (x.disagree.size() != y.disagree.size()) return false;
    for (EdgeId e : x.disagree.items())
        if (!y.disagree.contains(e)) return false;
    return true;
}

} // namespace evoter
