#pragma once

#include <sstream>
#include <string>

#include "evoter/graph.hpp"

namespace evoter {

// Text snapshot, canonical ordering. Line 1: "n N t"; then one line per
// vertex "v opinion" for v = 0..n-1; then one line per edge "e u v" for
// e = 0..N-1 with u < v. Used for golden tests and resume.
inline std::string snapshot_save(const NetState& s) {
    std::ostringstream out;
    out << s.n << ' ' << s.edge_count() << ' ' << s.t << '\n';
    for (VertexId v = 0; v < s.n; ++v)
        out << v << ' ' << (int)s.opinions[v] << '\n';
    for (EdgeId e = 0; e < s.edge_count(); ++e)
        out << e << ' ' << s.placement[e].a << ' ' << s.placement[e].b << '\n';
    return out.str();
}

inline NetState snapshot_load(const std::string& text) {
    std::istringstream in(text);
    std::uint64_t n = 0, nedges = 0, t = 0;
    if (!(in >> n >> nedges >> t)) throw std::invalid_argument("snapshot: bad header");
    if (n < 2) throw std::invalid_argument("snapshot: n must be >= 2");
    std::vector<std::uint8_t> ops(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t v = 0;
        int op = 0;
        if (!(in >> v >> op) || v != i || op < 0 || op > 1)
            throw std::invalid_argument("snapshot: bad vertex line " + std::to_string(i));
        ops[i] = (std::uint8_t)op;
    }
    std::vector<Bond> bonds;
    bonds.reserve(nedges);
    for (std::uint64_t i = 0; i < nedges; ++i) {
        std::uint64_t e = 0, u = 0, v = 0;
        if (!(in >> e >> u >> v) || e != i || u >= n || v >= n || u == v)
            throw std::invalid_argument("snapshot: bad edge line " + std::to_string(i));
        bonds.emplace_back((VertexId)u, (VertexId)v);
    }
    NetState s = NetState::build((std::uint32_t)n, ops, bonds);
    s.t = t;
    return s;
}

} // namespace evoter
