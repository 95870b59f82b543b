#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <json.hpp>

#include "graphfilt/core.hpp"
#include "graphfilt/fir.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/linalg.hpp"
#include "graphfilt/spectral.hpp"

namespace graphfilt {

/// Rational filter (Σ_p a_p S^p)⁻¹ (Σ_q b_q S^q) with a₀ = 1.
class ArmaFilter {
public:
    ArmaFilter() : a_(Vec::Ones(1)), b_(Vec::Ones(1)) {}

    ArmaFilter(Vec a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
        require(a_.size() >= 1 && b_.size() >= 1, ErrorKind::parameter, "ARMA filter needs non-empty a and b");
        require(a_(0) == 1.0, ErrorKind::parameter, "ARMA filter requires a0 = 1");
        require(a_.allFinite() && b_.allFinite(), ErrorKind::parameter, "non-finite ARMA coefficient");
    }

    /// Rescales so that a₀ = 1; the response is unchanged.
    static ArmaFilter normalized(const Vec& a, const Vec& b) {
        require(a.size() >= 1 && a(0) != 0.0, ErrorKind::parameter, "leading denominator coefficient is zero");
        Vec an = a / a(0);
        an(0) = 1.0;
        return ArmaFilter(an, b / a(0));
    }

    const Vec& a() const noexcept { return a_; }
    const Vec& b() const noexcept { return b_; }
    Eigen::Index P() const noexcept { return a_.size() - 1; }
    Eigen::Index Q() const noexcept { return b_.size() - 1; }

private:
    Vec a_;
    Vec b_;
};

/// Σ_p a_p λ_n^p at every point.
inline CVec arma_denominator(const ArmaFilter& f, const CVec& lambdas) {
    CVec out(lambdas.size());
    for (Eigen::Index n = 0; n < lambdas.size(); ++n) out(n) = polyval(f.a(), lambdas(n));
    return out;
}

inline CVec arma_numerator(const ArmaFilter& f, const CVec& lambdas) {
    CVec out(lambdas.size());
    for (Eigen::Index n = 0; n < lambdas.size(); ++n) out(n) = polyval(f.b(), lambdas(n));
    return out;
}

inline CVec arma_response(const ArmaFilter& f, const CVec& lambdas, double min_denominator = 1e-12) {
    const CVec alpha = arma_denominator(f, lambdas);
    const CVec beta = arma_numerator(f, lambdas);
    CVec out(lambdas.size());
    for (Eigen::Index n = 0; n < lambdas.size(); ++n) {
        if (!(std::abs(alpha(n)) > min_denominator))
            throw InstabilityError(static_cast<std::size_t>(n),
                                   "denominator vanishes at frequency index " + std::to_string(n));
        out(n) = beta(n) / alpha(n);
    }
    return out;
}

inline CVec arma_response(const ArmaFilter& f, const FrequencyGrid& grid) { return arma_response(f, grid.lambdas); }

struct StabilityReport {
    double min_denominator_magnitude = 0.0;
    bool stable = true;
    std::vector<Eigen::Index> offending;
    double threshold = 1e-8;
};

inline StabilityReport check_stability(const ArmaFilter& f, const CVec& lambdas, double threshold = 1e-8) {
    StabilityReport rep;
    rep.threshold = threshold;
    const CVec alpha = arma_denominator(f, lambdas);
    rep.min_denominator_magnitude = alpha.size() ? alpha.cwiseAbs().minCoeff() : 0.0;
    for (Eigen::Index n = 0; n < alpha.size(); ++n)
        if (!(std::abs(alpha(n)) > threshold)) rep.offending.push_back(n);
    rep.stable = rep.offending.empty();
    return rep;
}

inline StabilityReport check_stability(const ArmaFilter& f, const FrequencyGrid& grid, double threshold = 1e-8) {
    return check_stability(f, grid.lambdas, threshold);
}

/// Σ c_k S^k x by repeated shifts.
inline Vec poly_apply(const Vec& c, const ShiftOperator& op, const Vec& x) {
    return fir_apply(FirFilter{c}, op, x);
}

/// Dense Σ c_k S^k.
inline Mat poly_matrix(const Vec& c, const Mat& S) {
    const Eigen::Index n = S.rows();
    Mat out = Mat::Zero(n, n);
    Mat power = Mat::Identity(n, n);
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (k) power = S * power;
        out += c(k) * power;
    }
    return out;
}

inline constexpr Eigen::Index direct_solve_limit = 2000;

/// Solves (Σ a_p S^p) y = (Σ b_q S^q) x with a dense LU factorization.
inline Vec arma_apply_direct(const ArmaFilter& f, const ShiftOperator& op, const Vec& x) {
    require_size(x.size(), op.size(), "arma_apply_direct input");
    require(op.size() <= direct_solve_limit, ErrorKind::parameter,
            "direct solve limited to n <= " + std::to_string(direct_solve_limit) + "; use the CG solver");
    const Vec z = poly_apply(f.b(), op, x);
    if (f.P() == 0) return z;
    const Mat P = poly_matrix(f.a(), op.dense());
    Eigen::PartialPivLU<Mat> lu(P);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) throw Error(ErrorKind::singular, "denominator matrix is singular (rcond " + io::fmt(rc) + ")");
    return lu.solve(z);
}

inline nlohmann::json arma_to_json(const ArmaFilter& f) {
    return {{"type", "arma"},
            {"a", std::vector<double>(f.a().data(), f.a().data() + f.a().size())},
            {"b", std::vector<double>(f.b().data(), f.b().data() + f.b().size())}};
}

inline ArmaFilter arma_from_json(const nlohmann::json& j) {
    try {
        if (j.at("type").get<std::string>() != "arma") throw Error(ErrorKind::parse, "filter type is not 'arma'");
        const auto a = j.at("a").get<std::vector<double>>();
        const auto b = j.at("b").get<std::vector<double>>();
        if (a.empty() || b.empty()) throw Error(ErrorKind::parse, "ARMA filter needs non-empty a and b");
        if (a[0] != 1.0) throw Error(ErrorKind::parse, "ARMA filter JSON must have a[0] = 1");
        return ArmaFilter(Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size())),
                          Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size())));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::parse, std::string("filter JSON: ") + ex.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse) throw;
        throw Error(ErrorKind::parse, e.what());
    }
}

}  // namespace graphfilt
