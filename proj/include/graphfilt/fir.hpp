#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graphfilt/core.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/linalg.hpp"
#include "graphfilt/spectral.hpp"

namespace graphfilt {

/// y = Σ_k g_k S^k x.
struct FirFilter {
    Vec g;

    Eigen::Index order() const { return g.size() - 1; }
};

struct VandermondeSystem {
    CMat psi;
    CVec lambdas;
    double condition_estimate = 1.0;
};

/// [Ψ]_{n,k} = λ_n^k, k = 0..cols-1.
inline CMat vandermonde_matrix(const CVec& lambdas, Eigen::Index cols) {
    CMat V(lambdas.size(), std::max<Eigen::Index>(cols, 0));
    for (Eigen::Index n = 0; n < lambdas.size(); ++n) {
        cplx p(1.0, 0.0);
        for (Eigen::Index k = 0; k < cols; ++k) {
            V(n, k) = p;
            p *= lambdas(n);
        }
    }
    return V;
}

inline VandermondeSystem vandermonde(const FrequencyGrid& grid, Eigen::Index cols) {
    require(cols >= 1, ErrorKind::parameter, "Vandermonde needs at least one column");
    VandermondeSystem v;
    v.lambdas = grid.lambdas;
    v.psi = vandermonde_matrix(grid.lambdas, cols);
    v.condition_estimate = condition_number(v.psi);
    return v;
}

inline CVec fir_response(const FirFilter& f, const CVec& lambdas) {
    CVec out(lambdas.size());
    for (Eigen::Index n = 0; n < lambdas.size(); ++n) out(n) = polyval(f.g, lambdas(n));
    return out;
}

inline CVec fir_response(const FirFilter& f, const FrequencyGrid& grid) { return fir_response(f, grid.lambdas); }

struct FirDesignOptions {
    double rel_cutoff = 1e-12;
    /// Merge grid points closer than this before fitting; 0 disables.
    double group_tol = 0.0;
};

struct FirDesign {
    FirFilter filter;
    double residual_rnmse = 0.0;
    double imag_residue = 0.0;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
    Eigen::Index grid_points_used = 0;
};

/// Merges clusters of nearby points (reals and upper-half representatives separately),
/// averaging positions and responses; mirrored partners follow their representative.
inline std::pair<CVec, CVec> group_grid(const FrequencyGrid& grid, const CVec& h, double tol) {
    std::vector<cplx> lam, val;
    std::vector<Eigen::Index> reals = grid.pairing.reals;
    std::sort(reals.begin(), reals.end(),
              [&](auto a, auto b) { return grid.lambdas(a).real() < grid.lambdas(b).real(); });
    for (std::size_t i = 0; i < reals.size();) {
        std::size_t j = i + 1;
        while (j < reals.size() && grid.lambdas(reals[j]).real() - grid.lambdas(reals[j - 1]).real() < tol) ++j;
        cplx l(0.0), v(0.0);
        for (std::size_t k = i; k < j; ++k) {
            l += grid.lambdas(reals[k]);
            v += h(reals[k]);
        }
        const double c = static_cast<double>(j - i);
        lam.push_back(cplx((l / c).real(), 0.0));
        val.push_back(cplx((v / c).real(), 0.0));
        i = j;
    }
    std::vector<bool> used(grid.pairing.pairs.size(), false);
    for (std::size_t i = 0; i < grid.pairing.pairs.size(); ++i) {
        if (used[i]) continue;
        const cplx center = grid.lambdas(grid.pairing.pairs[i].first);
        cplx l(0.0), v(0.0);
        double c = 0.0;
        for (std::size_t j = i; j < grid.pairing.pairs.size(); ++j) {
            const auto p = grid.pairing.pairs[j].first;
            if (used[j] || std::abs(grid.lambdas(p) - center) >= tol) continue;
            used[j] = true;
            l += grid.lambdas(p);
            v += h(p);
            c += 1.0;
        }
        lam.push_back(l / c);
        val.push_back(v / c);
        lam.push_back(std::conj(l / c));
        val.push_back(std::conj(v / c));
    }
    CVec L(static_cast<Eigen::Index>(lam.size())), H(static_cast<Eigen::Index>(val.size()));
    for (std::size_t i = 0; i < lam.size(); ++i) {
        L(static_cast<Eigen::Index>(i)) = lam[i];
        H(static_cast<Eigen::Index>(i)) = val[i];
    }
    return {L, H};
}

/// Least squares FIR fit g = Ψ† ĥ on the grid.
inline FirDesign fir_design(const FrequencyGrid& grid, const CVec& h, Eigen::Index K,
                            const FirDesignOptions& opt = {}) {
    require(K >= 0, ErrorKind::parameter, "FIR order must be non-negative");
    require_size(h.size(), grid.size(), "desired response");
    require(grid.size() >= K + 1, ErrorKind::parameter, "grid has fewer points than FIR coefficients");
    check_conjugate_symmetric(grid, h);

    CVec lam = grid.lambdas, target = h;
    if (opt.group_tol > 0.0) std::tie(lam, target) = group_grid(grid, h, opt.group_tol);

    const auto sol = lstsq(vandermonde_matrix(lam, K + 1), target, opt.rel_cutoff);
    FirDesign d;
    d.imag_residue = relative_imag_residue(sol.x);
    if (!(d.imag_residue <= 1e-6))
        throw Error(ErrorKind::numerical, "FIR coefficients carry imaginary residue " + io::fmt(d.imag_residue));
    d.filter.g = sol.x.real();
    d.rank = sol.rank;
    d.rank_deficient = sol.rank_deficient;
    d.grid_points_used = lam.size();
    d.residual_rnmse = rnmse(h, fir_response(d.filter, grid));
    return d;
}

/// Σ g_k S^k x by repeated shifts, O(KE).
inline Vec fir_apply(const FirFilter& f, const ShiftOperator& op, const Vec& x) {
    require_size(x.size(), op.size(), "fir_apply input");
    require(f.g.size() >= 1, ErrorKind::parameter, "empty FIR filter");
    Vec y = f.g(0) * x;
    Vec t = x;
    for (Eigen::Index k = 1; k < f.g.size(); ++k) {
        t = shift_apply(op, t);
        y += f.g(k) * t;
    }
    return y;
}

struct FirMatrixFit {
    FirFilter filter;
    /// ||target - Σ g_k S^k||_F / ||target||_F.
    double residual = 0.0;
    bool rank_deficient = false;
};

/// Frobenius least squares fit of a matrix by a polynomial in S.
inline FirMatrixFit fir_matrix_fit(const Mat& target, const ShiftOperator& op, Eigen::Index K) {
    const Eigen::Index n = op.size();
    require(target.rows() == n && target.cols() == n, ErrorKind::dimension, "target must match the operator size");
    require(K >= 0 && n * n >= K + 1, ErrorKind::parameter, "FIR order too large for matrix fit");
    const Mat S = op.dense();
    CMat A(n * n, K + 1);
    Mat power = Mat::Identity(n, n);
    for (Eigen::Index k = 0; k <= K; ++k) {
        A.col(k) = Eigen::Map<const Vec>(power.data(), n * n).cast<cplx>();
        power = S * power;
    }
    const CVec y = Eigen::Map<const Vec>(target.data(), n * n).cast<cplx>();
    const auto sol = lstsq(A, y);
    FirMatrixFit fit;
    fit.filter.g = sol.x.real();
    fit.rank_deficient = sol.rank_deficient;
    const Vec approx = A.real() * fit.filter.g;
    fit.residual = rnmse(y.real(), approx);
    return fit;
}

inline nlohmann::json fir_to_json(const FirFilter& f) {
    return {{"type", "fir"}, {"g", std::vector<double>(f.g.data(), f.g.data() + f.g.size())}};
}

inline FirFilter fir_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "fir") throw Error(ErrorKind::parse, "filter type is not 'fir'");
        const auto g = j.at("g").get<std::vector<double>>();
        if (g.empty()) throw Error(ErrorKind::parse, "FIR filter needs at least one coefficient");
        FirFilter f;
        f.g = Eigen::Map<const Vec>(g.data(), static_cast<Eigen::Index>(g.size()));
        if (!f.g.allFinite()) throw Error(ErrorKind::parse, "non-finite FIR coefficient");
        return f;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::parse, std::string("filter JSON: ") + ex.what());
    }
}

}  // namespace graphfilt
