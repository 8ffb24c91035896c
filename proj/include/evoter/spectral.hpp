#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "evoter/graph.hpp"
#include "evoter/observables.hpp"

namespace evoter {

// Number of connected components; isolated vertices count as components.
inline std::uint32_t component_count(const NetState& s) {
    std::vector<std::uint8_t> seen(s.n, 0);
    std::vector<VertexId> stack;
    std::uint32_t comps = 0;
    for (VertexId v0 = 0; v0 < s.n; ++v0) {
        if (seen[v0]) continue;
        ++comps;
        seen[v0] = 1;
        stack.push_back(v0);
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (EdgeId e : s.incidence[v]) {
                VertexId u = s.placement[e].other(v);
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
            }
        }
    }
    return comps;
}

// Generator of the edge walk where each directed edge rings at rate
// beta/(2n): L = (beta/(2n)) * (diag(degree) - multiplicity matrix).
// Symmetric, so the stationary law is uniform.
inline Eigen::MatrixXd scaled_laplacian(const NetState& s, double beta) {
    double scale = beta / (2.0 * (double)s.n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s.n, s.n);
    for (VertexId v = 0; v < s.n; ++v) m(v, v) = scale * (double)s.degree[v];
    for (const auto& [key, count] : s.multiplicity) {
        auto a = (Eigen::Index)(key >> 32);
        auto b = (Eigen::Index)(key & 0xffffffffu);
        m(a, b) -= scale * (double)count;
        m(b, a) -= scale * (double)count;
    }
    return m;
}

struct SpectralResult {
    double lambda = 0;
    bool disconnected = false;
    int iterations = 0; // 0 for the dense path
};

// Spectral gap of the beta/(2n) edge walk: second-smallest eigenvalue of the
// scaled multigraph Laplacian. Dense symmetric solve for n <= dense_limit,
// otherwise deflated power iteration to relative tolerance 1e-6.
inline SpectralResult spectral_gap(const NetState& s, double beta, std::uint32_t dense_limit = 512) {
    SpectralResult r;
    if (component_count(s) > 1) {
        r.disconnected = true;
        r.lambda = 0;
        return r;
    }
    double scale = beta / (2.0 * (double)s.n);
    if (s.n <= dense_limit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled_laplacian(s, beta),
                                                          Eigen::EigenvaluesOnly);
        r.lambda = std::max(0.0, es.eigenvalues()(1));
        return r;
    }

    // Lanczos on c*I - L restricted to the complement of the constant vector
    // (full reorthogonalization); lambda = c - mu with mu the top Ritz value
    // on that subspace. Gershgorin gives c >= lambda_max(L).
    auto dx = degree_extremes(s);
    double c = scale * 2.0 * (double)dx.d_max + 1e-12;
    const Eigen::Index n = s.n;
    auto matvec = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(n);
        for (Eigen::Index v = 0; v < n; ++v) y[v] = (c - scale * (double)s.degree[v]) * x[v];
        for (const auto& [key, count] : s.multiplicity) {
            auto a = (Eigen::Index)(key >> 32);
            auto b = (Eigen::Index)(key & 0xffffffffu);
            double w = scale * (double)count;
            y[a] += w * x[b];
            y[b] += w * x[a];
        }
        return y;
    };
    const int max_it = (int)std::min<Eigen::Index>(n - 1, 400);
    Eigen::MatrixXd basis(n, max_it);
    Eigen::VectorXd alpha(max_it), beta_q(max_it);
    Rng rng(derive(0x737065637472ULL, s.n, s.t));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.real01() - 0.5;
    v.array() -= v.mean();
    v.normalize();
    basis.col(0) = v;
    double mu = 0, mu_prev = -1;
    int used = 0;
    for (int j = 0; j < max_it; ++j) {
        Eigen::VectorXd w = matvec(basis.col(j));
        alpha[j] = basis.col(j).dot(w);
        w -= alpha[j] * basis.col(j);
        if (j > 0) w -= beta_q[j - 1] * basis.col(j - 1);
        w.array() -= w.mean();
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k <= j; ++k) w -= basis.col(k).dot(w) * basis.col(k);
        used = j + 1;
        beta_q[j] = w.norm();
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(used, used);
        for (int k = 0; k < used; ++k) {
            tri(k, k) = alpha[k];
            if (k + 1 < used) tri(k, k + 1) = tri(k + 1, k) = beta_q[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(tri, Eigen::EigenvaluesOnly);
        mu = tes.eigenvalues()(used - 1);
        if (beta_q[j] < 1e-12 * c) break;
        if (j >= 8 && std::abs(mu - mu_prev) <= 1e-9 * c) break;
        mu_prev = mu;
        if (j + 1 < max_it) basis.col(j + 1) = w / beta_q[j];
    }
    r.lambda = std::max(0.0, c - mu);
    r.iterations = used;
    return r;
}

enum class CheegerMode { Exact, Sampled };

struct CheegerResult {
    double h = 0;
    std::uint32_t s_size = 0;
    std::string witness;
};

// Cheeger constant of the edge walk: min over cuts with |S| <= n/2 of
// N_ST * beta / (2 |S| n). Exact enumeration for n <= 16; otherwise an
// upper bound over degree-sorted prefix cuts (both orientations) and the
// opinion cut.
inline CheegerResult cheeger(const NetState& s, double beta, CheegerMode mode) {
    if (s.edge_count() == 0) throw std::invalid_argument("cheeger: empty graph (N = 0)");
    CheegerResult best;
    best.h = -1;
    auto consider = [&](double n_st, std::uint32_t s_size, const std::string& witness) {
        if (s_size == 0 || (double)s_size > (double)s.n / 2.0) return;
        double h = n_st * beta / (2.0 * (double)s_size * (double)s.n);
        if (best.h < 0 || h < best.h) {
            best.h = h;
            best.s_size = s_size;
            best.witness = witness;
        }
    };
    if (mode == CheegerMode::Exact) {
        if (s.n > 16) throw std::length_error("cheeger: exact mode needs n <= 16");
        std::uint32_t full = (1u << s.n) - 1;
        for (std::uint32_t mask = 1; mask < full; ++mask) {
            auto cc = detail::mask_counts(s, mask);
            consider((double)cc.n_st, cc.s_size, "exact");
        }
    } else {
        auto order = detail::degree_order(s); // descending degree
        auto pc = detail::prefix_counts(s, order);
        for (std::uint32_t k = 1; k < s.n; ++k) {
            consider((double)pc.n_st[k], k, "prefix-desc(" + std::to_string(k) + ")");
            consider((double)pc.n_st[k], s.n - k, "prefix-asc(" + std::to_string(s.n - k) + ")");
        }
        if (s.n0 > 0 && s.n1 > 0) {
            std::vector<std::uint8_t> cut(s.n);
            std::uint8_t side = s.n0 <= s.n1 ? 0 : 1;
            for (VertexId v = 0; v < s.n; ++v) cut[v] = s.opinions[v] == side;
            auto cs = cut_stats(s, cut);
            consider((double)cs.n_st, cs.s_size, "opinion");
        }
    }
    if (best.h < 0) throw std::invalid_argument("cheeger: no admissible cut");
    return best;
}

} // namespace evoter
