#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "crdlab/ar_model.hpp"

namespace crdlab {

/// Raised when a symmetric factorization hits a pivot below the singularity
/// floor, i.e. the matrix carries a deterministic linear dependence.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace numeric {

constexpr double kSymmetryRelTol = 1e-12;
constexpr double kPsdRelTol = 1e-10;
constexpr double kPivotFloorRel = 1e-13;

/// log2 det of a symmetric PSD matrix via LDL^T.  Pivots at or below
/// 1e-13 * trace are treated as exact rank deficiency.
inline double log2_determinant(const Eigen::MatrixXd& sym, const std::string& what = "covariance") {
    if (sym.rows() == 0) return 0.0;
    const double floor = kPivotFloorRel * sym.trace();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
    const Eigen::VectorXd d = ldlt.vectorD();
    double acc = 0.0;
    for (int i = 0; i < d.size(); ++i) {
        if (!(d(i) > floor))
            throw SingularMatrixError("singular " + what + ": pivot " + std::to_string(d(i)) +
                                      " at or below floor " + std::to_string(floor));
        acc += std::log2(d(i));
    }
    return acc;
}

}  // namespace numeric

/// Symmetric positive-semidefinite matrix in signal-power units.  Validates
/// symmetry (1e-12 relative) and PSD-ness (smallest eigenvalue >= -1e-10 times
/// the largest) at construction and stores the symmetrized entries.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
        if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
            throw std::invalid_argument("CovarianceMatrix: need a square matrix of positive dimension");
        if (!entries_.allFinite())
            throw std::invalid_argument("CovarianceMatrix: non-finite entry");
        const double scale = entries_.cwiseAbs().maxCoeff();
        const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
        if (asym > numeric::kSymmetryRelTol * std::max(scale, 1.0))
            throw std::invalid_argument("CovarianceMatrix: asymmetry " + std::to_string(asym) +
                                        " exceeds relative tolerance");
        entries_ = ((entries_ + entries_.transpose()) / 2.0).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (lo < -numeric::kPsdRelTol * std::max(hi, 0.0))
            throw std::invalid_argument("CovarianceMatrix: not positive semidefinite (min eigenvalue " +
                                        std::to_string(lo) + ")");
    }

    int dim() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(int i, int j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

/// n x n Toeplitz autocovariance of a stationary AR source, first row
/// rho_0 .. rho_{n-1}.
inline CovarianceMatrix toeplitz_covariance(const ArSourceModel& model, int n) {
    if (n < 1) throw std::invalid_argument("toeplitz_covariance: need n >= 1");
    const std::vector<double> rho = model.autocovariances(static_cast<std::size_t>(n));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rho[static_cast<std::size_t>(std::abs(i - j))];
    return CovarianceMatrix(std::move(m));
}

}  // namespace crdlab
