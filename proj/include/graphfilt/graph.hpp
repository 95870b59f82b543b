#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "graphfilt/core.hpp"
#include "graphfilt/random.hpp"

namespace graphfilt {

/// Directed edge: `src` links to `dst`, stored as A(src, dst) = weight.
struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    double weight = 1.0;
};

/// Weighted graph. Undirected graphs store both orientations of every edge.
class Graph {
public:
    Graph() = default;

    Graph(std::size_t n, std::vector<Edge> edges, bool directed)
        : n_(n), edges_(std::move(edges)), directed_(directed) {
        validate();
    }

    std::size_t size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    bool directed() const noexcept { return directed_; }

    /// Number of unordered node pairs joined by an edge (undirected graphs).
    std::size_t undirected_edge_count() const {
        std::size_t self = 0;
        for (const auto& e : edges_) self += (e.src == e.dst);
        return directed_ ? edges_.size() : (edges_.size() - self) / 2 + self;
    }

    SpMat adjacency() const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(edges_.size());
        for (const auto& e : edges_)
            trip.emplace_back(static_cast<int>(e.src), static_cast<int>(e.dst), e.weight);
        SpMat A(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        A.setFromTriplets(trip.begin(), trip.end());
        return A;
    }

private:
    void validate() const {
        for (const auto& e : edges_) {
            require(e.src < n_ && e.dst < n_, ErrorKind::parameter,
                    "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ") out of range for n=" +
                        std::to_string(n_));
            require(std::isfinite(e.weight), ErrorKind::parameter, "non-finite edge weight");
        }
        if (directed_) return;
        std::map<std::pair<std::size_t, std::size_t>, double> w;
        for (const auto& e : edges_) w[{e.src, e.dst}] = e.weight;
        for (const auto& e : edges_) {
            auto it = w.find({e.dst, e.src});
            require(it != w.end() && it->second == e.weight, ErrorKind::parameter,
                    "undirected graph missing mirrored edge (" + std::to_string(e.dst) + "," +
                        std::to_string(e.src) + ")");
        }
    }

    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    bool directed_ = false;
};

enum class ShiftKind { normalized_adjacency, normalized_laplacian, custom };

inline const char* to_string(ShiftKind k) noexcept {
    switch (k) {
        case ShiftKind::normalized_adjacency: return "normalized-adjacency";
        case ShiftKind::normalized_laplacian: return "normalized-laplacian";
        case ShiftKind::custom: return "custom";
    }
    return "custom";
}

inline ShiftKind parse_shift_kind(const std::string& s) {
    if (s == "normalized-adjacency" || s == "adjacency") return ShiftKind::normalized_adjacency;
    if (s == "normalized-laplacian" || s == "laplacian") return ShiftKind::normalized_laplacian;
    if (s == "custom") return ShiftKind::custom;
    throw Error(ErrorKind::parameter, "unknown shift kind '" + s + "'");
}

/// Real graph shift operator S stored sparse, with the normalization constant applied.
struct ShiftOperator {
    ShiftKind kind = ShiftKind::custom;
    SpMat matrix;
    double spectral_norm = 1.0;
    /// Set when the adjacency was nilpotent and max-row-sum scaling replaced the spectral radius.
    bool row_sum_fallback = false;

    Eigen::Index size() const noexcept { return matrix.rows(); }

    bool is_symmetric(double tol = 1e-12) const {
        const SpMat t = SpMat(matrix.transpose());
        const double scale = std::max(1.0, matrix.norm());
        return (matrix - t).norm() <= tol * scale;
    }

    Mat dense() const { return Mat(matrix); }

    static ShiftOperator custom(const Mat& S) {
        ShiftOperator op;
        op.kind = ShiftKind::custom;
        op.matrix = S.sparseView();
        op.spectral_norm = 1.0;
        return op;
    }
};

/// S x in O(E).
inline Vec shift_apply(const ShiftOperator& op, const Vec& x) {
    require_size(x.size(), op.size(), "shift_apply input");
    return op.matrix * x;
}

/// Sᵀ x, used by the normal-equations CG path.
inline Vec shift_apply_transpose(const ShiftOperator& op, const Vec& x) {
    require_size(x.size(), op.size(), "shift_apply_transpose input");
    return op.matrix.transpose() * x;
}

/// Largest eigenvalue magnitude of a dense real matrix.
inline double spectral_radius(const Mat& M) {
    if (M.rows() == 0) return 0.0;
    if (M.isApprox(M.transpose(), 1e-14)) {
        Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    Eigen::EigenSolver<Mat> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Erdős–Rényi graph: each unordered pair is linked independently with probability p.
inline Graph build_er_graph(std::size_t n, double p, std::uint64_t seed) {
    require(n >= 2, ErrorKind::parameter, "ER graph needs n >= 2");
    require(p >= 0.0 && p <= 1.0 && std::isfinite(p), ErrorKind::parameter, "link probability must lie in [0,1]");
    Rng rng(seed);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) {
                edges.push_back({i, j, 1.0});
                edges.push_back({j, i, 1.0});
            }
    return Graph(n, std::move(edges), false);
}

/// Directed graph with independent arcs and weights uniform in [w_lo, w_hi].
inline Graph build_random_directed(std::size_t n, double p, std::uint64_t seed, double w_lo = 0.0,
                                   double w_hi = 3.0) {
    require(n >= 2, ErrorKind::parameter, "random directed graph needs n >= 2");
    require(p >= 0.0 && p <= 1.0, ErrorKind::parameter, "link probability must lie in [0,1]");
    Rng rng(seed);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && rng.bernoulli(p)) edges.push_back({i, j, rng.uniform(w_lo, w_hi)});
    return Graph(n, std::move(edges), true);
}

using Point2 = std::array<double, 2>;

/// k nearest neighbors of every node, ordered by distance then index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<Point2>& coords, std::size_t k) {
    const std::size_t n = coords.size();
    std::vector<std::vector<std::size_t>> nb(n);
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dx = coords[i][0] - coords[j][0];
            const double dy = coords[i][1] - coords[j][1];
            cand.emplace_back(dx * dx + dy * dy, j);
        }
        std::sort(cand.begin(), cand.end());
        for (std::size_t m = 0; m < k; ++m) nb[i].push_back(cand[m].second);
    }
    return nb;
}

/// Directed k-nearest-neighbor graph with Gaussian weights normalized by the
/// neighborhood sums of both endpoints:
///   w(n,m) = exp(-d²) / sqrt(Σ_{k∈N(n)} exp(-d²(n,k)) · Σ_{l∈N(m)} exp(-d²(m,l))).
inline Graph build_knn_directed(const std::vector<Point2>& coords, std::size_t k) {
    const std::size_t n = coords.size();
    require(n >= 2, ErrorKind::parameter, "kNN graph needs at least two nodes");
    require(k >= 1 && k < n, ErrorKind::parameter, "neighbor count must satisfy 1 <= k < n");
    for (std::size_t i = 0; i < n; ++i) {
        require(std::isfinite(coords[i][0]) && std::isfinite(coords[i][1]), ErrorKind::parameter,
                "non-finite coordinate");
        for (std::size_t j = i + 1; j < n; ++j)
            if (coords[i] == coords[j])
                throw Error(ErrorKind::degenerate_distance,
                            "nodes " + std::to_string(i) + " and " + std::to_string(j) + " share a position");
    }

    const auto nb = nearest_neighbors(coords, k);
    auto gauss = [&](std::size_t a, std::size_t b) {
        const double dx = coords[a][0] - coords[b][0];
        const double dy = coords[a][1] - coords[b][1];
        return std::exp(-(dx * dx + dy * dy));
    };
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : nb[i]) sums[i] += gauss(i, j);

    std::vector<Edge> edges;
    edges.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : nb[i]) edges.push_back({i, j, gauss(i, j) / std::sqrt(sums[i] * sums[j])});
    return Graph(n, std::move(edges), true);
}

/// Undirected version of a graph keeping the larger weight of the two directions.
inline Graph symmetrize_max(const Graph& g) {
    std::map<std::pair<std::size_t, std::size_t>, double> w;
    for (const auto& e : g.edges()) {
        const auto key = std::minmax(e.src, e.dst);
        auto [it, fresh] = w.try_emplace({key.first, key.second}, e.weight);
        if (!fresh) it->second = std::max(it->second, e.weight);
    }
    std::vector<Edge> edges;
    for (const auto& [key, weight] : w) {
        edges.push_back({key.first, key.second, weight});
        if (key.first != key.second) edges.push_back({key.second, key.first, weight});
    }
    return Graph(g.size(), std::move(edges), false);
}

/// Builds the normalized adjacency A/ρ(A) or the normalized Laplacian D^{-1/2}(D-A)D^{-1/2}.
inline ShiftOperator normalize(const Graph& g, ShiftKind kind) {
    const SpMat A = g.adjacency();
    ShiftOperator op;
    op.kind = kind;

    if (kind == ShiftKind::normalized_adjacency) {
        const double max_abs = A.nonZeros() ? A.coeffs().cwiseAbs().maxCoeff() : 0.0;
        require(max_abs > 0.0, ErrorKind::zero_norm, "adjacency matrix is zero");
        double rho = spectral_radius(Mat(A));
        if (rho <= 1e-12 * max_abs) {
            // nilpotent: fall back to the max absolute row sum
            Vec rows = Vec::Zero(A.rows());
            for (int r = 0; r < A.outerSize(); ++r)
                for (SpMat::InnerIterator it(A, r); it; ++it) rows(r) += std::abs(it.value());
            rho = rows.maxCoeff();
            op.row_sum_fallback = true;
        }
        op.matrix = A / rho;
        op.spectral_norm = rho;
        return op;
    }

    if (kind == ShiftKind::normalized_laplacian) {
        require(!g.directed(), ErrorKind::parameter, "normalized Laplacian is only defined for undirected graphs");
        Vec deg = Vec::Zero(A.rows());
        for (int r = 0; r < A.outerSize(); ++r)
            for (SpMat::InnerIterator it(A, r); it; ++it) deg(r) += it.value();
        for (Eigen::Index i = 0; i < deg.size(); ++i)
            if (!(deg(i) > 0.0))
                throw Error(ErrorKind::zero_degree, "node " + std::to_string(i) + " has zero degree");
        const Vec dinv = deg.cwiseSqrt().cwiseInverse();
        std::vector<Eigen::Triplet<double>> trip;
        for (Eigen::Index i = 0; i < A.rows(); ++i) trip.emplace_back(i, i, 1.0);
        for (int r = 0; r < A.outerSize(); ++r)
            for (SpMat::InnerIterator it(A, r); it; ++it)
                trip.emplace_back(r, it.col(), -dinv(r) * it.value() * dinv(it.col()));
        op.matrix.resize(A.rows(), A.cols());
        op.matrix.setFromTriplets(trip.begin(), trip.end());
        op.spectral_norm = 1.0;
        return op;
    }

    op.matrix = A;
    op.spectral_norm = 1.0;
    return op;
}

/// ||S Sᵀ - Sᵀ S||_F / ||S||_F², zero for normal operators.
inline double normality_residual(const ShiftOperator& op) {
    const Mat S = op.dense();
    const double f = S.squaredNorm();
    if (f == 0.0) return 0.0;
    return (S * S.transpose() - S.transpose() * S).norm() / f;
}

/// Connected components of the undirected support of S (self-loops ignored).
inline std::vector<std::size_t> connected_components(const ShiftOperator& op) {
    const auto n = static_cast<std::size_t>(op.size());
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (int r = 0; r < op.matrix.outerSize(); ++r)
        for (SpMat::InnerIterator it(op.matrix, r); it; ++it)
            if (it.value() != 0.0) parent[find(static_cast<std::size_t>(r))] = find(static_cast<std::size_t>(it.col()));
    std::vector<std::size_t> label(n);
    for (std::size_t v = 0; v < n; ++v) label[v] = find(v);
    return label;
}

}  // namespace graphfilt
