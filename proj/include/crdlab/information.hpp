#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "crdlab/covariance.hpp"
#include "crdlab/index_set.hpp"
#include "crdlab/joint_model.hpp"

namespace crdlab {

namespace detail {

inline Eigen::MatrixXd select(const Eigen::MatrixXd& m, const IndexSet& rows, const IndexSet& cols) {
    Eigen::MatrixXd out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<int>(i), static_cast<int>(j)) =
                m(rows.indices()[i] - 1, cols.indices()[j] - 1);
    return out;
}

inline Eigen::MatrixXd principal(const Eigen::MatrixXd& m, const IndexSet& s) {
    return select(m, s, s);
}

}  // namespace detail

/// Mutual information in bits between the Gaussian coordinate groups A and B,
///
///   I(A;B) = 0.5 * log2( det Sigma_A * det Sigma_B / det Sigma_{A u B} ),
///
/// clamped to zero against harmless negative round-off.  A singular restricted
/// covariance means a deterministic dependence and infinite mutual
/// information, reported as an error.
inline double mutual_information(const Eigen::MatrixXd& sigma, const IndexSet& a, const IndexSet& b) {
    IndexSet::require_nonempty(a, "A");
    IndexSet::require_nonempty(b, "B");
    const int dim = static_cast<int>(sigma.rows());
    IndexSet::require_in_bounds(a, dim, "A");
    IndexSet::require_in_bounds(b, dim, "B");
    IndexSet::require_disjoint(a, b, "A vs B");
    const IndexSet ab = a.unioned(b);
    double ld_ab;
    try {
        ld_ab = numeric::log2_determinant(detail::principal(sigma, ab), "joint block");
    } catch (const SingularMatrixError&) {
        throw SingularMatrixError("deterministic dependence: mutual information infinite");
    }
    const double ld_a = numeric::log2_determinant(detail::principal(sigma, a), "A block");
    const double ld_b = numeric::log2_determinant(detail::principal(sigma, b), "B block");
    return std::max(0.0, 0.5 * (ld_a + ld_b - ld_ab));
}

inline double mutual_information(const CovarianceMatrix& sigma, const IndexSet& a, const IndexSet& b) {
    return mutual_information(sigma.entries(), a, b);
}

inline double mutual_information(const JointProcessModel& m, const IndexSet& a, const IndexSet& b) {
    return mutual_information(m.sigma().entries(), a, b);
}

/// I(A;B|C) = I(A; B u C) - I(A; C) (chain rule).  An empty C degenerates to
/// plain mutual information.
inline double conditional_mutual_information(const Eigen::MatrixXd& sigma, const IndexSet& a,
                                             const IndexSet& b, const IndexSet& c) {
    if (c.empty()) return mutual_information(sigma, a, b);
    IndexSet::require_disjoint(a, c, "A vs C");
    IndexSet::require_disjoint(b, c, "B vs C");
    const double joint = mutual_information(sigma, a, b.unioned(c));
    const double base = mutual_information(sigma, a, c);
    return std::max(0.0, joint - base);
}

inline double conditional_mutual_information(const CovarianceMatrix& sigma, const IndexSet& a,
                                             const IndexSet& b, const IndexSet& c) {
    return conditional_mutual_information(sigma.entries(), a, b, c);
}

inline double conditional_mutual_information(const JointProcessModel& m, const IndexSet& a,
                                             const IndexSet& b, const IndexSet& c) {
    return conditional_mutual_information(m.sigma().entries(), a, b, c);
}

}  // namespace crdlab
