#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "graphfilt/core.hpp"

namespace graphfilt {

/// Minimum-norm least squares solution of min ||A x - y|| via SVD.
struct LstsqResult {
    CVec x;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
    double sigma_max = 0.0;
    double sigma_min_kept = 0.0;
};

/// Singular values below rel_cutoff * scale are dropped; scale defaults to sigma_max(A).
/// Passing an explicit scale lets callers measure rank against an unprojected matrix.
inline LstsqResult lstsq(const CMat& A, const CVec& y, double rel_cutoff = 1e-12, double scale = -1.0) {
    require_size(y.size(), A.rows(), "lstsq right-hand side");
    LstsqResult out;
    out.x = CVec::Zero(A.cols());
    if (A.cols() == 0) return out;

    Eigen::BDCSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    out.sigma_max = s.size() > 0 ? s(0) : 0.0;
    const double ref = scale > 0.0 ? scale : out.sigma_max;
    const double cut = rel_cutoff * ref;

    const CVec uty = svd.matrixU().adjoint() * y;
    CVec coef = CVec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut && s(i) > 0.0) {
            coef(i) = uty(i) / s(i);
            out.rank = i + 1;
            out.sigma_min_kept = s(i);
        }
    }
    out.x = svd.matrixV() * coef;
    out.rank_deficient = out.rank < A.cols();
    return out;
}

/// Ratio of extreme singular values; infinity when rank deficient.
inline double condition_number(const CMat& A) {
    if (A.cols() == 0 || A.rows() == 0) return 1.0;
    Eigen::BDCSVD<CMat> svd(A);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

/// Horner evaluation of sum_k c_k z^k.
template <typename Coef>
cplx polyval(const Eigen::MatrixBase<Coef>& c, cplx z) {
    cplx acc(0.0, 0.0);
    for (Eigen::Index k = c.size() - 1; k >= 0; --k) acc = acc * z + cplx(c(k));
    return acc;
}

inline double max_abs_imag(const CVec& v) {
    return v.size() == 0 ? 0.0 : v.imag().cwiseAbs().maxCoeff();
}

/// Largest imaginary part relative to max(1, largest magnitude).
inline double relative_imag_residue(const CVec& v) {
    if (v.size() == 0) return 0.0;
    return max_abs_imag(v) / std::max(1.0, v.cwiseAbs().maxCoeff());
}

}  // namespace graphfilt
