#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "graphfilt/core.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/io.hpp"

namespace graphfilt {

/// Index-level conjugate structure of a complex point set.
/// `partner[n] == n` marks a real point; otherwise λ[partner[n]] = conj(λ[n]).
struct ConjugatePairing {
    std::vector<Eigen::Index> partner;
    /// (p, q) with imag(λ_p) > 0.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    std::vector<Eigen::Index> reals;

    bool is_real(Eigen::Index n) const { return partner[static_cast<std::size_t>(n)] == n; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(partner.size()); }
};

/// Greedy nearest-conjugate matching. Matched pairs are made exactly conjugate,
/// unmatched near-real points are truncated to the real axis. `lambdas` is updated in place.
inline ConjugatePairing pair_conjugates(CVec& lambdas, double rel_tol = 1e-7) {
    const Eigen::Index n = lambdas.size();
    const double scale = n ? lambdas.cwiseAbs().maxCoeff() : 0.0;
    const double tol = rel_tol * std::max(scale, std::numeric_limits<double>::min());
    ConjugatePairing pr;
    pr.partner.assign(static_cast<std::size_t>(n), -1);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (pr.partner[static_cast<std::size_t>(i)] >= 0) continue;
        if (lambdas(i).imag() == 0.0) {
            pr.partner[static_cast<std::size_t>(i)] = i;
            continue;
        }
        const cplx target = std::conj(lambdas(i));
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i || pr.partner[static_cast<std::size_t>(j)] >= 0 || lambdas(j).imag() == 0.0) continue;
            const double d = std::abs(lambdas(j) - target);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best >= 0 && best_d <= tol) {
            pr.partner[static_cast<std::size_t>(i)] = best;
            pr.partner[static_cast<std::size_t>(best)] = i;
        } else if (std::abs(lambdas(i).imag()) <= tol) {
            pr.partner[static_cast<std::size_t>(i)] = i;
        } else {
            throw Error(ErrorKind::conjugate_symmetry,
                        "point " + std::to_string(i) + " has no conjugate partner within tolerance");
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = pr.partner[static_cast<std::size_t>(i)];
        if (j == i) {
            lambdas(i) = cplx(lambdas(i).real(), 0.0);
            pr.reals.push_back(i);
        } else if (i < j) {
            const cplx avg = 0.5 * (lambdas(i) + std::conj(lambdas(j)));
            const bool i_upper = avg.imag() > 0.0 || (avg.imag() == 0.0 && i < j);
            lambdas(i) = avg;
            lambdas(j) = std::conj(avg);
            pr.pairs.emplace_back(i_upper ? i : j, i_upper ? j : i);
        }
    }
    return pr;
}

/// Eigendecomposition S = U diag(λ) U⁻¹ with conjugate structure made exact.
struct SpectralDecomposition {
    CVec lambdas;
    CMat modes;
    CMat inv_modes;
    ConjugatePairing pairing;
    bool symmetric = false;
    double residual = 0.0;

    Eigen::Index size() const { return lambdas.size(); }
};

inline SpectralDecomposition eigendecompose(const ShiftOperator& op) {
    const Mat S = op.dense();
    const Eigen::Index n = S.rows();
    require(n > 0, ErrorKind::dimension, "empty shift operator");
    SpectralDecomposition dec;

    if (op.is_symmetric()) {
        const Mat Ssym = 0.5 * (S + S.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> es(Ssym);
        require(es.info() == Eigen::Success, ErrorKind::numerical, "symmetric eigensolver failed");
        dec.symmetric = true;
        dec.lambdas = es.eigenvalues().cast<cplx>();
        dec.modes = es.eigenvectors().cast<cplx>();
        dec.inv_modes = es.eigenvectors().transpose().cast<cplx>();
        dec.pairing = pair_conjugates(dec.lambdas);
    } else {
        Eigen::EigenSolver<Mat> es(S, true);
        require(es.info() == Eigen::Success, ErrorKind::numerical, "eigensolver failed");
        dec.lambdas = es.eigenvalues();
        dec.modes = es.eigenvectors();
        dec.pairing = pair_conjugates(dec.lambdas);
        for (auto [p, q] : dec.pairing.pairs) dec.modes.col(q) = dec.modes.col(p).conjugate();
        for (auto r : dec.pairing.reals) {
            Vec re = dec.modes.col(r).real();
            const double nr = re.norm();
            if (nr > 0.0) re /= nr;
            dec.modes.col(r) = re.cast<cplx>();
        }
        Eigen::PartialPivLU<CMat> lu(dec.modes);
        dec.inv_modes = lu.inverse();
        for (auto [p, q] : dec.pairing.pairs) {
            const Eigen::RowVectorXcd row = 0.5 * (dec.inv_modes.row(p) + dec.inv_modes.row(q).conjugate());
            dec.inv_modes.row(p) = row;
            dec.inv_modes.row(q) = row.conjugate();
        }
        for (auto r : dec.pairing.reals) dec.inv_modes.row(r) = dec.inv_modes.row(r).real().cast<cplx>();
    }

    const double sn = S.norm();
    const CMat recon = dec.modes * dec.lambdas.asDiagonal() * dec.inv_modes;
    const double abs_res = (recon - S.cast<cplx>()).norm();
    dec.residual = sn > 0.0 ? abs_res / sn : abs_res;
    if (!std::isfinite(dec.residual) || dec.residual > 1e-6)
        throw Error(ErrorKind::non_diagonalizable,
                    "reconstruction residual " + io::fmt(dec.residual) + " exceeds 1e-6");
    return dec;
}

inline CVec gft(const SpectralDecomposition& dec, const Vec& x) {
    require_size(x.size(), dec.size(), "gft input");
    return dec.inv_modes * x.cast<cplx>();
}

inline CVec gft(const SpectralDecomposition& dec, const CVec& x) {
    require_size(x.size(), dec.size(), "gft input");
    return dec.inv_modes * x;
}

inline CVec igft(const SpectralDecomposition& dec, const CVec& xhat) {
    require_size(xhat.size(), dec.size(), "igft input");
    return dec.modes * xhat;
}

/// Applies the spectral response ĝ: U diag(ĝ) U⁻¹ x.
inline CVec spectral_filter(const SpectralDecomposition& dec, const CVec& ghat, const Vec& x) {
    require_size(ghat.size(), dec.size(), "spectral response");
    return igft(dec, ghat.cwiseProduct(gft(dec, x)));
}

/// Graph total variation |1 - λ/|λmax|| · ||u||₁ of each unit-ℓ2 mode.
inline Vec total_variation(const SpectralDecomposition& dec) {
    const Eigen::Index n = dec.size();
    const double lmax = dec.lambdas.cwiseAbs().maxCoeff();
    Vec tv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto col = dec.modes.col(i);
        const double l2 = col.norm();
        const double l1 = col.cwiseAbs().sum() / (l2 > 0.0 ? l2 : 1.0);
        tv(i) = (lmax > 0.0 ? std::abs(1.0 - dec.lambdas(i) / lmax) : 1.0) * l1;
    }
    return tv;
}

/// Low-to-high frequency permutation. Laplacians sort ascending; other operators by
/// total variation. Conjugate pairs stay adjacent, positive imaginary part first.
inline std::vector<Eigen::Index> order_frequencies(const SpectralDecomposition& dec, ShiftKind kind) {
    struct Group {
        double key;
        Eigen::Index first;
        Eigen::Index second;
    };
    const Vec tv = kind == ShiftKind::normalized_laplacian ? Vec() : total_variation(dec);
    auto key = [&](Eigen::Index i) {
        return kind == ShiftKind::normalized_laplacian ? dec.lambdas(i).real() : tv(i);
    };
    std::vector<Group> groups;
    for (auto r : dec.pairing.reals) groups.push_back({key(r), r, -1});
    for (auto [p, q] : dec.pairing.pairs) groups.push_back({std::min(key(p), key(q)), p, q});
    std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        if (a.key != b.key) return a.key < b.key;
        return a.first < b.first;
    });
    std::vector<Eigen::Index> perm;
    perm.reserve(static_cast<std::size_t>(dec.size()));
    for (const auto& g : groups) {
        perm.push_back(g.first);
        if (g.second >= 0) perm.push_back(g.second);
    }
    return perm;
}

enum class GridKind { graph_spectrum, uniform_real, complex_disc };

inline const char* to_string(GridKind k) noexcept {
    switch (k) {
        case GridKind::graph_spectrum: return "graph-spectrum";
        case GridKind::uniform_real: return "uniform-real";
        case GridKind::complex_disc: return "complex-disc";
    }
    return "graph-spectrum";
}

inline GridKind parse_grid_kind(const std::string& s) {
    if (s == "graph-spectrum") return GridKind::graph_spectrum;
    if (s == "uniform-real") return GridKind::uniform_real;
    if (s == "complex-disc") return GridKind::complex_disc;
    throw Error(ErrorKind::parameter, "unknown grid kind '" + s + "'");
}

/// Conjugate-closed set of design frequencies.
struct FrequencyGrid {
    CVec lambdas;
    GridKind kind = GridKind::graph_spectrum;
    ConjugatePairing pairing;

    Eigen::Index size() const { return lambdas.size(); }
    bool all_real() const { return pairing.pairs.empty(); }
};

/// N equally spaced points on [0, 2], endpoints included.
inline FrequencyGrid uniform_real_grid(Eigen::Index N) {
    require(N >= 2, ErrorKind::parameter, "uniform grid needs N >= 2");
    FrequencyGrid g;
    g.kind = GridKind::uniform_real;
    g.lambdas.resize(N);
    for (Eigen::Index j = 0; j < N; ++j) g.lambdas(j) = cplx(2.0 * static_cast<double>(j) / static_cast<double>(N - 1), 0.0);
    g.pairing = pair_conjugates(g.lambdas);
    return g;
}

/// Ring point budgets ∝ radius, summing to N (largest remainders first, ties to the outer ring).
inline std::vector<Eigen::Index> disc_ring_budgets(Eigen::Index N, Eigen::Index R) {
    const double total = static_cast<double>(R * (R + 1) / 2);
    std::vector<Eigen::Index> budget(static_cast<std::size_t>(R));
    std::vector<std::pair<double, Eigen::Index>> frac;
    Eigen::Index used = 0;
    for (Eigen::Index j = 1; j <= R; ++j) {
        const double exact = static_cast<double>(N) * static_cast<double>(j) / total;
        budget[static_cast<std::size_t>(j - 1)] = static_cast<Eigen::Index>(std::floor(exact));
        used += budget[static_cast<std::size_t>(j - 1)];
        frac.emplace_back(exact - std::floor(exact), j - 1);
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
    });
    for (Eigen::Index k = 0; used < N; ++k, ++used) ++budget[static_cast<std::size_t>(frac[static_cast<std::size_t>(k)].second)];
    return budget;
}

/// Concentric rings of radius j/R, j = 1..R, R = max(2, round(sqrt(N/π))); a ring with m
/// points carries phases 2πk/m, mirrored so each non-real point has its conjugate.
inline FrequencyGrid complex_disc_grid(Eigen::Index N) {
    require(N >= 4, ErrorKind::parameter, "disc grid needs N >= 4");
    const Eigen::Index R = std::max<Eigen::Index>(2, std::llround(std::sqrt(static_cast<double>(N) / std::numbers::pi)));
    const auto budget = disc_ring_budgets(N, R);
    FrequencyGrid g;
    g.kind = GridKind::complex_disc;
    g.lambdas.resize(N);
    g.pairing.partner.assign(static_cast<std::size_t>(N), -1);
    Eigen::Index at = 0;
    for (Eigen::Index j = 1; j <= R; ++j) {
        const Eigen::Index m = budget[static_cast<std::size_t>(j - 1)];
        require(m >= 1, ErrorKind::parameter, "disc grid size too small to populate every ring");
        const double r = static_cast<double>(j) / static_cast<double>(R);
        for (Eigen::Index k = 0; 2 * k <= m; ++k) {
            if (k == 0) {
                g.lambdas(at) = cplx(r, 0.0);
                g.pairing.partner[static_cast<std::size_t>(at)] = at;
                g.pairing.reals.push_back(at++);
            } else if (2 * k == m) {
                g.lambdas(at) = cplx(-r, 0.0);
                g.pairing.partner[static_cast<std::size_t>(at)] = at;
                g.pairing.reals.push_back(at++);
            } else {
                const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
                const cplx z = std::polar(r, t);
                g.lambdas(at) = z;
                g.lambdas(at + 1) = std::conj(z);
                g.pairing.partner[static_cast<std::size_t>(at)] = at + 1;
                g.pairing.partner[static_cast<std::size_t>(at + 1)] = at;
                g.pairing.pairs.emplace_back(at, at + 1);
                at += 2;
            }
        }
    }
    return g;
}

/// Grid on the eigenvalues of a decomposed operator, sharing its pairing.
inline FrequencyGrid graph_spectrum_grid(const SpectralDecomposition& dec) {
    FrequencyGrid g;
    g.kind = GridKind::graph_spectrum;
    g.lambdas = dec.lambdas;
    g.pairing = dec.pairing;
    return g;
}

/// Grid from arbitrary points; pairing detected with the usual tolerance.
inline FrequencyGrid grid_from_points(CVec lambdas, GridKind kind = GridKind::graph_spectrum) {
    FrequencyGrid g;
    g.kind = kind;
    g.pairing = pair_conjugates(lambdas);
    g.lambdas = std::move(lambdas);
    return g;
}

/// Validates the conjugate symmetry a response of a real filter must have on the grid.
inline void check_conjugate_symmetric(const FrequencyGrid& grid, const CVec& h, double tol = 1e-9) {
    require_size(h.size(), grid.size(), "desired response");
    const double scale = std::max(1.0, h.size() ? h.cwiseAbs().maxCoeff() : 0.0);
    for (auto r : grid.pairing.reals)
        if (std::abs(h(r).imag()) > tol * scale)
            throw Error(ErrorKind::conjugate_symmetry,
                        "response is not real at real frequency index " + std::to_string(r));
    for (auto [p, q] : grid.pairing.pairs)
        if (std::abs(h(q) - std::conj(h(p))) > tol * scale)
            throw Error(ErrorKind::conjugate_symmetry, "response at indices " + std::to_string(p) + " and " +
                                                           std::to_string(q) + " is not a conjugate pair");
}

inline std::string grid_to_csv(const FrequencyGrid& g) {
    std::string out = "re,im,is_real,pair_index\n";
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const auto p = g.pairing.partner[static_cast<std::size_t>(i)];
        const bool real = p == i;
        out += io::fmt(g.lambdas(i).real()) + "," + io::fmt(g.lambdas(i).imag()) + "," + (real ? "1" : "0") + "," +
               std::to_string(real ? -1 : p) + "\n";
    }
    return out;
}

inline FrequencyGrid grid_from_csv(const std::string& text, const std::string& source = "<grid>") {
    const auto csv = io::parse_csv(text, {"re", "im", "is_real", "pair_index"}, source);
    const auto n = static_cast<Eigen::Index>(csv.rows.size());
    FrequencyGrid g;
    g.lambdas.resize(n);
    g.pairing.partner.assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = csv.rows[static_cast<std::size_t>(i)];
        const auto ctx = io::where(source, csv.lines[static_cast<std::size_t>(i)]);
        g.lambdas(i) = cplx(io::parse_double(row[0], ctx), io::parse_double(row[1], ctx));
        const auto is_real = io::parse_int(row[2], ctx);
        const auto p = io::parse_int(row[3], ctx);
        if (is_real == 1) {
            if (p != -1 || g.lambdas(i).imag() != 0.0)
                throw Error(ErrorKind::parse, ctx + ": real point must have im=0 and pair_index=-1");
            g.pairing.partner[static_cast<std::size_t>(i)] = i;
        } else {
            if (is_real != 0 || p < 0 || p >= n || p == i) throw Error(ErrorKind::parse, ctx + ": invalid pair_index");
            g.pairing.partner[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(p);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = g.pairing.partner[static_cast<std::size_t>(i)];
        if (p == i) {
            g.pairing.reals.push_back(i);
            continue;
        }
        if (g.pairing.partner[static_cast<std::size_t>(p)] != i ||
            std::abs(g.lambdas(p) - std::conj(g.lambdas(i))) > 1e-12 * std::max(1.0, std::abs(g.lambdas(i))))
            throw Error(ErrorKind::conjugate_symmetry, source + ": inconsistent pairing at row " + std::to_string(i));
        if (g.lambdas(i).imag() > 0.0) g.pairing.pairs.emplace_back(i, p);
    }
    g.kind = GridKind::graph_spectrum;
    return g;
}

}  // namespace graphfilt
