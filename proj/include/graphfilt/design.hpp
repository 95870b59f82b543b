#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graphfilt/arma.hpp"
#include "graphfilt/core.hpp"
#include "graphfilt/fir.hpp"
#include "graphfilt/linalg.hpp"
#include "graphfilt/spectral.hpp"

namespace graphfilt {

enum class DesignMethod { prony_ls, prony_projection, iterative };

inline const char* to_string(DesignMethod m) noexcept {
    switch (m) {
        case DesignMethod::prony_ls: return "prony-ls";
        case DesignMethod::prony_projection: return "prony-projection";
        case DesignMethod::iterative: return "iterative";
    }
    return "iterative";
}

inline DesignMethod parse_design_method(const std::string& s) {
    if (s == "prony-ls" || s == "ls") return DesignMethod::prony_ls;
    if (s == "prony-projection" || s == "projection") return DesignMethod::prony_projection;
    if (s == "iterative") return DesignMethod::iterative;
    throw Error(ErrorKind::parameter, "unknown design method '" + s + "'");
}

struct DesignProblem {
    FrequencyGrid grid;
    CVec h;
    /// Row weights; empty means all ones.
    Vec weights;
    Eigen::Index P = 0;
    Eigen::Index Q = 0;
    bool constrain_b0_zero = false;
    /// Denominator regularizer for the iterative step; negative selects 1e-8·max|α|.
    double rho = -1.0;
    /// Compare amplitudes only; unset selects it for disc grids with a real response.
    std::optional<bool> amplitude_only;
    double rel_cutoff = 1e-12;
    double stability_threshold = 1e-8;

    Eigen::Index size() const { return grid.size(); }

    Vec w() const { return weights.size() ? weights : Vec::Ones(grid.size()); }

    bool use_amplitude() const {
        if (amplitude_only) return *amplitude_only;
        return grid.kind == GridKind::complex_disc && max_abs_imag(h) == 0.0;
    }

    void validate() const {
        require(P >= 0 && Q >= 0, ErrorKind::parameter, "orders must be non-negative");
        require_size(h.size(), grid.size(), "desired response");
        require(h.allFinite(), ErrorKind::parameter, "desired response must be finite");
        require(grid.size() >= P + Q + 1, ErrorKind::parameter,
                "grid needs at least P+Q+1 points (" + std::to_string(P + Q + 1) + ")");
        check_conjugate_symmetric(grid, h);
        if (weights.size()) {
            require_size(weights.size(), grid.size(), "weights");
            require(weights.allFinite() && (weights.array() >= 0.0).all(), ErrorKind::parameter,
                    "weights must be finite and non-negative");
            for (auto [p, q] : grid.pairing.pairs)
                if (std::abs(weights(p) - weights(q)) > 1e-9 * std::max(1.0, std::abs(weights(p))))
                    throw Error(ErrorKind::conjugate_symmetry, "weights differ across a conjugate pair");
        }
    }
};

struct DesignReport {
    ArmaFilter filter;
    double rnmse_true = 0.0;
    double rnmse_modified = 0.0;
    int iterations = 0;
    std::vector<double> error_history;
    bool converged = true;
    StabilityReport stability;
    std::string method;
    bool rank_deficient = false;
    /// Largest imaginary part of the solved coefficients before truncation, relative to max(1, |coef|).
    double imag_residue = 0.0;
    /// Set when a vanishing denominator was regularized.
    bool regularized = false;
    int best_iteration = 0;
};

namespace detail {

inline double safe_ratio(double num, double den) { return den > 0.0 ? num / den : num; }

/// Frequency response β/α with an infinite value wherever α is exactly zero.
inline CVec response_or_inf(const ArmaFilter& f, const CVec& lambdas) {
    const CVec alpha = arma_denominator(f, lambdas);
    const CVec beta = arma_numerator(f, lambdas);
    CVec g(lambdas.size());
    const double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < g.size(); ++n) g(n) = alpha(n) == 0.0 ? cplx(inf, 0.0) : beta(n) / alpha(n);
    return g;
}

/// Weighted error vector whose norm defines the true error.
inline CVec error_vector(const CVec& ghat, const DesignProblem& pb) {
    const Vec w = pb.w();
    if (pb.use_amplitude())
        return (w.array() * (pb.h.cwiseAbs() - ghat.cwiseAbs()).array()).matrix().cast<cplx>();
    return w.cast<cplx>().cwiseProduct(pb.h - ghat);
}

inline double error_reference(const DesignProblem& pb) {
    const Vec w = pb.w();
    return pb.use_amplitude() ? (w.array() * pb.h.cwiseAbs().array()).matrix().norm() : w.cast<cplx>().cwiseProduct(pb.h).norm();
}

struct Solved {
    Vec a;
    Vec b;
    double imag_residue = 0.0;
    bool rank_deficient = false;
};

inline Vec split_b(const Vec& tail, bool b0_zero) {
    if (!b0_zero) return tail;
    Vec b(tail.size() + 1);
    b(0) = 0.0;
    b.tail(tail.size()) = tail;
    return b;
}

/// Solves min || [A_cols, -B_cols] [a; b] || with a₀ = 1 by moving column 0 to the right side.
inline Solved solve_a0(const CMat& A_cols, const CMat& B_cols, bool b0_zero, double cutoff) {
    const Eigen::Index P = A_cols.cols() - 1;
    CMat X(A_cols.rows(), P + B_cols.cols());
    X << A_cols.rightCols(P), -B_cols;
    const auto sol = lstsq(X, -A_cols.col(0), cutoff);
    Solved s;
    s.imag_residue = relative_imag_residue(sol.x);
    s.rank_deficient = sol.rank_deficient;
    s.a.resize(P + 1);
    s.a(0) = 1.0;
    s.a.tail(P) = sol.x.head(P).real();
    s.b = split_b(sol.x.tail(B_cols.cols()).real(), b0_zero);
    return s;
}

inline void check_imag(double residue, const char* what) {
    if (!(residue <= 1e-6))
        throw Error(ErrorKind::numerical, std::string(what) + " coefficients carry imaginary residue " + io::fmt(residue));
}

/// W·(ĥ ∘ Ψ_{P+1}).
inline CMat weighted_a_block(const DesignProblem& pb, const CVec& row_scale) {
    const CMat psi = vandermonde_matrix(pb.grid.lambdas, pb.P + 1);
    return (pb.w().cast<cplx>().cwiseProduct(row_scale).cwiseProduct(pb.h)).asDiagonal() * psi;
}

/// W·Ψ_{Q+1}, without the constant column when b₀ is pinned to zero.
inline CMat weighted_b_block(const DesignProblem& pb, const CVec& row_scale) {
    const CMat psi = vandermonde_matrix(pb.grid.lambdas, pb.Q + 1);
    const Eigen::Index first = pb.constrain_b0_zero ? 1 : 0;
    return pb.w().cast<cplx>().cwiseProduct(row_scale).asDiagonal() * psi.rightCols(psi.cols() - first);
}

inline double sigma_max(const CMat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::BDCSVD<CMat> svd(A);
    return svd.singularValues()(0);
}

}  // namespace detail

/// Weighted relative error ||w(ĥ - ĝ)|| / ||wĥ||, or on amplitudes when flagged.
inline double true_error(const ArmaFilter& f, const DesignProblem& pb) {
    const CVec g = detail::response_or_inf(f, pb.grid.lambdas);
    if (!g.allFinite()) return std::numeric_limits<double>::infinity();
    return detail::safe_ratio(detail::error_vector(g, pb).norm(), detail::error_reference(pb));
}

/// ||w(ĥα - β)|| / ||wĥ||.
inline double modified_error(const ArmaFilter& f, const DesignProblem& pb) {
    const CVec alpha = arma_denominator(f, pb.grid.lambdas);
    const CVec beta = arma_numerator(f, pb.grid.lambdas);
    const CVec w = pb.w().cast<cplx>();
    return detail::safe_ratio(w.cwiseProduct(pb.h.cwiseProduct(alpha) - beta).norm(), w.cwiseProduct(pb.h).norm());
}

inline DesignReport finish_report(const ArmaFilter& f, const DesignProblem& pb, const char* method) {
    DesignReport r;
    r.filter = f;
    r.method = method;
    r.rnmse_true = true_error(f, pb);
    r.rnmse_modified = modified_error(f, pb);
    r.stability = check_stability(f, pb.grid, pb.stability_threshold);
    return r;
}

/// Linearized fit minimizing the modified error.
inline DesignReport prony_ls(const DesignProblem& pb) {
    pb.validate();
    const CVec ones = CVec::Ones(pb.size());
    const auto s = detail::solve_a0(detail::weighted_a_block(pb, ones), detail::weighted_b_block(pb, ones),
                                    pb.constrain_b0_zero, pb.rel_cutoff);
    detail::check_imag(s.imag_residue, "Prony LS");
    auto r = finish_report(ArmaFilter(s.a, s.b), pb, "prony-ls");
    r.imag_residue = s.imag_residue;
    r.rank_deficient = s.rank_deficient;
    return r;
}

/// Orthonormal basis of range(V), rank decided relative to its largest singular value.
inline CMat range_basis(const CMat& V, double cutoff = 1e-12) {
    if (V.cols() == 0) return CMat(V.rows(), 0);
    Eigen::BDCSVD<CMat> svd(V, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cutoff * s(0) && s(r) > 0.0) ++r;
    return svd.matrixU().leftCols(r);
}

/// I - V V†.
inline CMat orthogonal_projector(const CMat& V, double cutoff = 1e-12) {
    const CMat U = range_basis(V, cutoff);
    return CMat::Identity(V.rows(), V.rows()) - U * U.adjoint();
}

/// Denominator from the numerator-free projected system, then numerator against the true error.
inline DesignReport prony_projection(const DesignProblem& pb) {
    pb.validate();
    const CVec ones = CVec::Ones(pb.size());
    const CMat A = detail::weighted_a_block(pb, ones);
    const CMat B = detail::weighted_b_block(pb, ones);
    const CMat U = range_basis(B, pb.rel_cutoff);
    auto project = [&](const CMat& M) -> CMat { return M - U * (U.adjoint() * M); };

    const Eigen::Index P = pb.P;
    Vec a(P + 1);
    a(0) = 1.0;
    double imag = 0.0;
    bool deficient = false;
    if (P > 0) {
        const CMat X = project(A.rightCols(P));
        const CVec y = -project(A.col(0));
        // Rank is judged against the unprojected columns: directions the projection annihilates are dropped.
        const auto sol = lstsq(X, y, pb.rel_cutoff, detail::sigma_max(A.rightCols(P)));
        imag = relative_imag_residue(sol.x);
        deficient = sol.rank_deficient;
        a.tail(P) = sol.x.real();
    }

    CVec alpha = vandermonde_matrix(pb.grid.lambdas, P + 1) * a.cast<cplx>();
    const double amax = alpha.cwiseAbs().maxCoeff();
    bool regularized = false;
    if (!(alpha.cwiseAbs().minCoeff() > pb.stability_threshold * std::max(amax, 1e-300))) {
        const double rho = pb.rho >= 0.0 ? pb.rho : 1e-8 * amax;
        alpha.array() += rho;
        regularized = true;
    }
    const CMat Bg = detail::weighted_b_block(pb, alpha.cwiseInverse());
    const CVec wh = pb.w().cast<cplx>().cwiseProduct(pb.h);
    const auto solb = lstsq(Bg, wh, pb.rel_cutoff);
    imag = std::max(imag, relative_imag_residue(solb.x));
    detail::check_imag(imag, "Prony projection");
    const Vec b = detail::split_b(solb.x.real(), pb.constrain_b0_zero);

    auto r = finish_report(ArmaFilter(a, b), pb, "prony-projection");
    r.imag_residue = imag;
    r.rank_deficient = deficient || solb.rank_deficient;
    r.regularized = regularized;
    return r;
}

struct IterativeOptions {
    int tau = 50;
    double delta_c = 1e-10;
    /// Initial filter; unset uses the projection design.
    std::optional<ArmaFilter> init;
};

/// Reweighted linear fits with γ = 1/(α + ρ) from the previous denominator; returns the
/// lowest-error iterate, the initial filter counting as iterate 0.
inline DesignReport iterative_design(const DesignProblem& pb, const IterativeOptions& opt = {}) {
    pb.validate();
    require(opt.tau >= 0, ErrorKind::parameter, "iteration cap must be non-negative");
    require(opt.delta_c >= 0.0, ErrorKind::parameter, "stopping threshold must be non-negative");

    ArmaFilter cur = opt.init ? *opt.init : prony_projection(pb).filter;
    require(cur.P() == pb.P && cur.Q() == pb.Q, ErrorKind::parameter, "initial filter orders do not match the problem");

    auto evaluate = [&](const ArmaFilter& f, CVec& e) {
        const CVec g = detail::response_or_inf(f, pb.grid.lambdas);
        if (!g.allFinite()) {
            e = CVec::Constant(pb.size(), cplx(std::numeric_limits<double>::infinity(), 0.0));
            return std::numeric_limits<double>::infinity();
        }
        e = detail::error_vector(g, pb);
        return detail::safe_ratio(e.norm(), detail::error_reference(pb));
    };

    DesignReport rep;
    rep.method = "iterative";
    CVec e_prev;
    double err = evaluate(cur, e_prev);
    rep.error_history.push_back(err);

    double best_err = std::numeric_limits<double>::infinity();
    std::optional<ArmaFilter> best;
    int best_it = 0;
    bool any_stable = false;
    auto consider = [&](const ArmaFilter& f, double e, int it) {
        if (check_stability(f, pb.grid, pb.stability_threshold).stable) any_stable = true;
        if (std::isfinite(e) && (!best || e < best_err)) {
            best_err = e;
            best = f;
            best_it = it;
        }
    };
    consider(cur, err, 0);

    const CMat psiA = vandermonde_matrix(pb.grid.lambdas, pb.P + 1);
    rep.converged = false;
    for (int i = 0; i < opt.tau; ++i) {
        const CVec alpha = psiA * cur.a().cast<cplx>();
        const double rho = pb.rho >= 0.0 ? pb.rho : 1e-8 * alpha.cwiseAbs().maxCoeff();
        const CVec gamma = (alpha.array() + rho).inverse().matrix();
        if (!gamma.allFinite()) break;
        const auto s = detail::solve_a0(detail::weighted_a_block(pb, gamma), detail::weighted_b_block(pb, gamma),
                                        pb.constrain_b0_zero, pb.rel_cutoff);
        detail::check_imag(s.imag_residue, "iterative");
        rep.imag_residue = std::max(rep.imag_residue, s.imag_residue);
        rep.rank_deficient = rep.rank_deficient || s.rank_deficient;
        cur = ArmaFilter(s.a, s.b);
        CVec e;
        err = evaluate(cur, e);
        rep.error_history.push_back(err);
        rep.iterations = i + 1;
        consider(cur, err, i + 1);
        const bool finite = e.allFinite() && e_prev.allFinite();
        if (finite && (e - e_prev).norm() < opt.delta_c) {
            rep.converged = true;
            break;
        }
        e_prev = e;
    }

    if (!best || !any_stable) {
        std::string hist;
        for (double h : rep.error_history) hist += (hist.empty() ? "" : ",") + io::fmt(h);
        throw Error(ErrorKind::design_failure, "every iterate is unstable; error history [" + hist + "]");
    }
    rep.filter = *best;
    rep.best_iteration = best_it;
    rep.rnmse_true = best_err;
    rep.rnmse_modified = modified_error(*best, pb);
    rep.stability = check_stability(*best, pb.grid, pb.stability_threshold);
    return rep;
}

inline DesignReport run_design(const DesignProblem& pb, DesignMethod m, const IterativeOptions& opt = {}) {
    switch (m) {
        case DesignMethod::prony_ls: return prony_ls(pb);
        case DesignMethod::prony_projection: return prony_projection(pb);
        case DesignMethod::iterative: return iterative_design(pb, opt);
    }
    return iterative_design(pb, opt);
}

/// Worker count: GRAPHFILT_THREADS when set, else the hardware concurrency.
inline unsigned worker_threads() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GRAPHFILT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return hw;
}

struct OrderSearchOptions {
    /// Enumerate every P+Q <= K instead of P+Q = K.
    bool up_to_budget = false;
    IterativeOptions iterative;
    unsigned threads = 0;
};

inline std::vector<std::pair<Eigen::Index, Eigen::Index>> order_candidates(Eigen::Index K, bool up_to_budget) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> c;
    for (Eigen::Index k = up_to_budget ? 0 : K; k <= K; ++k)
        for (Eigen::Index P = 0; P <= k; ++P) c.emplace_back(P, k - P);
    return c;
}

/// Best (P,Q) by true error; ties go to smaller P, then smaller Q. Candidates run
/// concurrently and are reduced in a fixed order.
inline DesignReport best_order_search(const DesignProblem& base, Eigen::Index K, DesignMethod method,
                                      const OrderSearchOptions& opt = {}) {
    require(K >= 0, ErrorKind::parameter, "order budget must be non-negative");
    auto cands = order_candidates(K, opt.up_to_budget);
    if (base.constrain_b0_zero)
        cands.erase(std::remove_if(cands.begin(), cands.end(), [](auto c) { return c.second == 0; }), cands.end());
    require(!cands.empty(), ErrorKind::parameter, "no admissible (P,Q) for this budget");

    std::vector<std::optional<DesignReport>> results(cands.size());
    std::vector<std::string> failures(cands.size());
    auto run = [&](std::size_t i) {
        DesignProblem pb = base;
        pb.P = cands[i].first;
        pb.Q = cands[i].second;
        try {
            results[i] = run_design(pb, method, opt.iterative);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::parameter || e.kind() == ErrorKind::dimension ||
                e.kind() == ErrorKind::conjugate_symmetry)
                throw;
            failures[i] = e.what();
        }
    };

    const unsigned nthreads =
        std::min<unsigned>(opt.threads ? opt.threads : worker_threads(), static_cast<unsigned>(cands.size()));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < cands.size(); ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errs(nthreads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nthreads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i; (i = next.fetch_add(1)) < cands.size();) run(i);
                } catch (...) {
                    errs[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (!results[i]) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& r = *results[i];
        const auto& b = *results[*best];
        const auto key = std::make_tuple(r.rnmse_true, cands[i].first, cands[i].second);
        const auto bkey = std::make_tuple(b.rnmse_true, cands[*best].first, cands[*best].second);
        if (key < bkey) best = i;
    }
    if (!best) {
        std::string why;
        for (const auto& f : failures)
            if (!f.empty()) why = f;
        throw Error(ErrorKind::design_failure, "no candidate order produced a filter: " + why);
    }
    return *results[*best];
}

/// FIR baseline wrapped as a design result on the same problem.
inline DesignReport fir_as_report(const DesignProblem& pb, Eigen::Index K) {
    const auto d = fir_design(pb.grid, pb.h, K);
    auto r = finish_report(ArmaFilter(Vec::Ones(1), d.filter.g), pb, "fir");
    r.imag_residue = d.imag_residue;
    r.rank_deficient = d.rank_deficient;
    return r;
}

/// 1 on the pass band, 0 elsewhere. Real grids pass λ <= cutoff; complex grids pass |λ - 1| < cutoff.
inline CVec ideal_lowpass(const FrequencyGrid& grid, double cutoff) {
    CVec h(grid.size());
    const bool real = grid.all_real() && grid.kind != GridKind::complex_disc;
    for (Eigen::Index n = 0; n < grid.size(); ++n) {
        const bool pass = real ? grid.lambdas(n).real() <= cutoff : std::abs(grid.lambdas(n) - 1.0) < cutoff;
        h(n) = pass ? 1.0 : 0.0;
    }
    return h;
}

inline CVec ideal_allpass(const FrequencyGrid& grid) { return CVec::Ones(grid.size()); }

inline nlohmann::json stability_to_json(const StabilityReport& s) {
    return {{"min_denominator_magnitude", s.min_denominator_magnitude},
            {"stable", s.stable},
            {"threshold", s.threshold},
            {"offending", s.offending}};
}

inline nlohmann::json report_to_json(const DesignReport& r) {
    nlohmann::json j = arma_to_json(r.filter);
    j["method"] = r.method;
    j["P"] = r.filter.P();
    j["Q"] = r.filter.Q();
    j["rnmse_true"] = r.rnmse_true;
    j["rnmse_modified"] = r.rnmse_modified;
    j["iterations"] = r.iterations;
    j["best_iteration"] = r.best_iteration;
    j["converged"] = r.converged;
    j["error_history"] = r.error_history;
    j["rank_deficient"] = r.rank_deficient;
    j["imag_residue"] = r.imag_residue;
    j["regularized"] = r.regularized;
    j["stability"] = stability_to_json(r.stability);
    return j;
}

}  // namespace graphfilt
