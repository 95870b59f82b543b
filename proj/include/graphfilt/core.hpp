#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace graphfilt {

using cplx  = std::complex<double>;
using Vec   = Eigen::VectorXd;
using CVec  = Eigen::VectorXcd;
using Mat   = Eigen::MatrixXd;
using CMat  = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Failure categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
    parameter,
    dimension,
    parse,
    io,
    zero_norm,
    zero_degree,
    degenerate_distance,
    non_diagonalizable,
    conjugate_symmetry,
    numerical,
    instability,
    singular,
    divergence,
    design_failure,
};

inline const char* to_string(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
        case ErrorKind::zero_norm: return "zero-norm";
        case ErrorKind::zero_degree: return "zero-degree";
        case ErrorKind::degenerate_distance: return "degenerate-distance";
        case ErrorKind::non_diagonalizable: return "non-diagonalizable";
        case ErrorKind::conjugate_symmetry: return "conjugate-symmetry";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::instability: return "instability";
        case ErrorKind::singular: return "singular";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::design_failure: return "design-failure";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when a filter denominator vanishes; carries the offending grid index.
class InstabilityError : public Error {
public:
    InstabilityError(std::size_t index, const std::string& what)
        : Error(ErrorKind::instability, what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

inline void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want)
        throw Error(ErrorKind::dimension, std::string(what) + ": expected length " + std::to_string(want) +
                                              ", got " + std::to_string(got));
}

/// Relative root mean square error ||ref - est|| / ||ref||; zero reference yields ||est||.
template <typename A, typename B>
double rnmse(const Eigen::MatrixBase<A>& ref, const Eigen::MatrixBase<B>& est) {
    const double den = ref.norm();
    const double num = (ref - est).norm();
    return den > 0.0 ? num / den : num;
}

}  // namespace graphfilt
