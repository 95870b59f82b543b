#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "graphfilt/arma.hpp"
#include "graphfilt/core.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/io.hpp"

namespace graphfilt {

struct CgConfig {
    double epsilon = 1e-3;
    int max_iter = 100;
    /// Initial guess; empty means zero.
    Vec y0;

    void validate() const {
        require(epsilon > 0.0 && std::isfinite(epsilon), ErrorKind::parameter, "CG epsilon must be positive");
        require(max_iter >= 1, ErrorKind::parameter, "CG iteration cap must be at least 1");
    }
};

struct CgTrace {
    int iterations = 0;
    std::vector<double> residual_history;
    long long shift_applications = 0;
    bool normal_equations = false;
    /// Set when non-positive curvature forced a restart on the normal equations.
    bool curvature_restart = false;
    bool converged = false;
};

class DivergenceError : public Error {
public:
    DivergenceError(CgTrace trace, const std::string& what)
        : Error(ErrorKind::divergence, what), trace_(std::move(trace)) {}
    const CgTrace& trace() const noexcept { return trace_; }

private:
    CgTrace trace_;
};

using LinearMap = std::function<Vec(const Vec&)>;

enum class CgStatus { converged, max_iter, indefinite };

/// Conjugate gradient on A y = rhs where `residual(y)` returns rhs - A y.
/// `cost` shifts are charged per application of A, `init_cost` for the initial residual.
/// The residual history holds one entry per iteration plus the initial one.
inline CgStatus conjugate_gradient(const LinearMap& A, const LinearMap& residual, Vec& y, double eps, int T,
                                   long long cost, long long init_cost, CgTrace& trace) {
    Vec r = residual(y);
    trace.shift_applications += init_cost;
    Vec d = r;
    double delta_new = r.squaredNorm();
    const double delta0 = delta_new;
    const double r0 = std::sqrt(delta0);
    trace.residual_history.assign(1, r0);
    trace.iterations = 0;
    int growth = 0;
    int i = 0;
    while (i < T && delta_new > eps * eps * delta0) {
        const Vec q = A(d);
        trace.shift_applications += cost;
        const double curv = d.dot(q);
        if (!(curv > 0.0)) return CgStatus::indefinite;
        const double alpha = delta_new / curv;
        y += alpha * d;
        r -= alpha * q;
        const double delta_old = delta_new;
        delta_new = r.squaredNorm();
        d = r + (delta_new / delta_old) * d;
        ++i;
        trace.iterations = i;
        const double rn = std::sqrt(delta_new);
        trace.residual_history.push_back(rn);
        growth = rn > 10.0 * r0 ? growth + 1 : 0;
        if (growth >= 5 || !std::isfinite(rn))
            throw DivergenceError(trace, "CG residual exceeded 10x its initial value for 5 iterations");
    }
    return delta_new <= eps * eps * delta0 ? CgStatus::converged : CgStatus::max_iter;
}

/// Applies an ARMA filter by CG on (Σ a_p S^p) y = (Σ b_q S^q) x without forming the
/// denominator matrix. Non-symmetric S switches to the normal equations.
inline Vec arma_apply_cg(const ArmaFilter& f, const ShiftOperator& op, const Vec& x, const CgConfig& cfg,
                         CgTrace* trace_out = nullptr) {
    cfg.validate();
    require_size(x.size(), op.size(), "arma_apply_cg input");
    if (cfg.y0.size()) require_size(cfg.y0.size(), op.size(), "CG initial guess");

    CgTrace trace;
    const Vec z = poly_apply(f.b(), op, x);
    trace.shift_applications = f.Q();
    const long long P = f.P();

    auto applyP = [&](const Vec& v) { return poly_apply(f.a(), op, v); };
    auto applyPt = [&](const Vec& v) {
        Vec y = f.a()(0) * v;
        Vec t = v;
        for (Eigen::Index k = 1; k < f.a().size(); ++k) {
            t = shift_apply_transpose(op, t);
            y += f.a()(k) * t;
        }
        return y;
    };

    Vec y = cfg.y0.size() ? cfg.y0 : Vec::Zero(x.size());
    CgStatus status = CgStatus::max_iter;
    if (op.is_symmetric()) {
        auto residual = [&](const Vec& v) -> Vec { return z - applyP(v); };
        status = conjugate_gradient(applyP, residual, y, cfg.epsilon, cfg.max_iter, P, P, trace);
        if (status == CgStatus::indefinite) {
            trace.curvature_restart = true;
            y = cfg.y0.size() ? cfg.y0 : Vec::Zero(x.size());
        }
    }
    if (!op.is_symmetric() || trace.curvature_restart) {
        trace.normal_equations = true;
        auto normal = [&](const Vec& v) -> Vec { return applyPt(applyP(v)); };
        auto residual = [&](const Vec& v) -> Vec { return applyPt(z - applyP(v)); };
        status = conjugate_gradient(normal, residual, y, cfg.epsilon, cfg.max_iter, 2 * P, 2 * P, trace);
        if (status == CgStatus::indefinite)
            throw Error(ErrorKind::singular, "denominator operator is singular on the Krylov space");
    }
    trace.converged = status == CgStatus::converged;
    if (trace_out) *trace_out = trace;
    return y;
}

inline std::string trace_to_csv(const CgTrace& t) {
    std::string out = "iter,residual_norm\n";
    for (std::size_t i = 0; i < t.residual_history.size(); ++i)
        out += std::to_string(i) + "," + io::fmt(t.residual_history[i]) + "\n";
    return out;
}

}  // namespace graphfilt
