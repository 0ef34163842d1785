#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crdlab/information.hpp"
#include "crdlab/joint_model.hpp"

namespace crdlab {

constexpr double kDefaultCertificateTol = 1e-8;

/// Outcome of a Gaussian Markov-chain test A <-> C <-> B: the residual is the
/// largest conditional cross-covariance entry, which vanishes exactly when the
/// chain holds for jointly-Gaussian coordinates.
struct MarkovCertificate {
    double residual = 0.0;
    bool holds = false;
    double tolerance = 0.0;
    int time_index = 0;  // k for per-step audits, 0 otherwise
};

inline MarkovCertificate markov_chain_check(const Eigen::MatrixXd& sigma, const IndexSet& a,
                                            const IndexSet& c, const IndexSet& b, double tol) {
    IndexSet::require_nonempty(a, "A");
    IndexSet::require_nonempty(c, "C");
    IndexSet::require_nonempty(b, "B");
    const int dim = static_cast<int>(sigma.rows());
    IndexSet::require_in_bounds(a, dim, "A");
    IndexSet::require_in_bounds(c, dim, "C");
    IndexSet::require_in_bounds(b, dim, "B");
    IndexSet::require_disjoint(a, c, "A vs C");
    IndexSet::require_disjoint(a, b, "A vs B");
    IndexSet::require_disjoint(c, b, "C vs B");

    const Eigen::MatrixXd s_ab = detail::select(sigma, a, b);
    const Eigen::MatrixXd s_ac = detail::select(sigma, a, c);
    const Eigen::MatrixXd s_cb = detail::select(sigma, c, b);
    const Eigen::MatrixXd s_cc = detail::principal(sigma, c);

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s_cc);
    const double floor = numeric::kPivotFloorRel * std::max(s_cc.trace(), 0.0);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= floor)
        throw SingularMatrixError("markov_chain_check: conditioning block C is singular");

    const Eigen::MatrixXd conditional_cross = s_ab - s_ac * ldlt.solve(s_cb);
    MarkovCertificate cert;
    cert.residual = conditional_cross.cwiseAbs().maxCoeff();
    cert.tolerance = tol;
    cert.holds = cert.residual <= tol;
    return cert;
}

inline MarkovCertificate markov_chain_check(const JointProcessModel& m, const IndexSet& a,
                                            const IndexSet& c, const IndexSet& b,
                                            double tol = kDefaultCertificateTol) {
    return markov_chain_check(m.sigma().entries(), a, c, b, tol);
}

enum class CausalityVariant { Short, StrongPrefix };

/// Per-step causality certificates, one for each k = 1..n-1:
///
///   short:         x(k+1..n)            <-> x(1..k) <-> y(1..k)
///   strong-prefix: (x_past, x(k+1..n))  <-> x(1..k) <-> y(1..k)
///
/// The strong form additionally separates y from the pre-window x samples the
/// model carries; with no pre-window samples it coincides with the short form.
inline std::vector<MarkovCertificate> causality_audit(const JointProcessModel& m,
                                                      CausalityVariant variant,
                                                      double tol = kDefaultCertificateTol) {
    const int n = m.horizon();
    if (n < 2)
        throw std::invalid_argument("causality_audit: need horizon >= 2 to state a causality chain");
    std::vector<MarkovCertificate> certs;
    certs.reserve(static_cast<std::size_t>(n - 1));
    for (int k = 1; k <= n - 1; ++k) {
        IndexSet future = m.x_range(k + 1, n);
        if (variant == CausalityVariant::StrongPrefix && m.x_past() > 0)
            future = future.unioned(m.x_past_range());
        MarkovCertificate cert =
            markov_chain_check(m.sigma().entries(), future, m.x_range(1, k), m.y_range(1, k), tol);
        cert.time_index = k;
        certs.push_back(cert);
    }
    return certs;
}

struct StationarityReport {
    double residual = 0.0;
    bool holds = false;
    double tolerance = 0.0;
};

/// Shift invariance of window laws: for zero-mean Gaussian windows, equality
/// of the window covariances across start times is equality of the window
/// distributions.  Residual is the worst pairwise max-abs difference.
inline StationarityReport joint_stationarity_audit(const std::vector<Eigen::MatrixXd>& blocks,
                                                   double tol = kDefaultCertificateTol) {
    if (blocks.size() < 2)
        throw std::invalid_argument("joint_stationarity_audit: need at least two window blocks");
    for (const auto& b : blocks)
        if (b.rows() != blocks.front().rows() || b.cols() != blocks.front().cols())
            throw std::invalid_argument("joint_stationarity_audit: window blocks differ in dimension");
    StationarityReport report;
    report.tolerance = tol;
    for (std::size_t i = 0; i + 1 < blocks.size(); ++i)
        for (std::size_t j = i + 1; j < blocks.size(); ++j)
            report.residual = std::max(report.residual, (blocks[i] - blocks[j]).cwiseAbs().maxCoeff());
    report.holds = report.residual <= tol;
    return report;
}

/// All length-len windows of a model, for feeding the stationarity audit.
inline std::vector<Eigen::MatrixXd> window_blocks(const JointProcessModel& m, int len) {
    std::vector<Eigen::MatrixXd> blocks;
    for (int start = 1; start + len - 1 <= m.horizon(); ++start)
        blocks.push_back(m.window_covariance(start, len));
    return blocks;
}

/// Jointly stationary + causal jointly-Gaussian pairs admit a lower-triangular
/// gain A with K_yx = A K_x, and the Toeplitz structure of K_yx then forces a
/// geometric source autocovariance rho_k = zeta * rho_{k-1} with
/// zeta = (a_11 - a_22) / a_21.  The certificate fits the first two rows of A
/// by least squares and measures how far rho is from that geometric law.
///
/// A diagonal fit (|a_21| below tolerance) leaves zeta undefined: such
/// memoryless channels are jointly stationary and causal over any source, so
/// the certificate reports memoryless_inconclusive rather than a verdict.
struct GeometricSourceCertificate {
    enum class Status { Geometric, MemorylessInconclusive, Violated };
    double zeta = std::numeric_limits<double>::quiet_NaN();
    double geometric_residual = std::numeric_limits<double>::quiet_NaN();
    Status status = Status::MemorylessInconclusive;
};

inline const char* to_string(GeometricSourceCertificate::Status s) {
    switch (s) {
        case GeometricSourceCertificate::Status::Geometric: return "geometric";
        case GeometricSourceCertificate::Status::MemorylessInconclusive: return "memoryless_inconclusive";
        case GeometricSourceCertificate::Status::Violated: return "violated";
    }
    return "unknown";
}

inline GeometricSourceCertificate geometric_source_certificate(const JointProcessModel& m,
                                                               double tol = kDefaultCertificateTol) {
    const int n = m.horizon();
    if (n < 3) throw std::invalid_argument("geometric_source_certificate: need horizon >= 3");
    if (m.x_past() != 0)
        throw std::invalid_argument("geometric_source_certificate: model must not carry pre-window samples");
    const Eigen::MatrixXd& s = m.sigma().entries();
    const Eigen::MatrixXd k_x = s.topLeftCorner(n, n);
    const Eigen::MatrixXd k_yx = s.bottomLeftCorner(n, n);

    // Joint stationarity shows up as Toeplitz x-x, y-x and y-y blocks.
    const double scale = std::max(1.0, k_x(0, 0));
    double toeplitz_residual = 0.0;
    for (int i = 0; i + 1 < n; ++i)
        for (int j = 0; j + 1 < n; ++j) {
            toeplitz_residual = std::max(toeplitz_residual, std::abs(k_x(i, j) - k_x(i + 1, j + 1)));
            toeplitz_residual = std::max(toeplitz_residual, std::abs(k_yx(i, j) - k_yx(i + 1, j + 1)));
            toeplitz_residual = std::max(
                toeplitz_residual, std::abs(s(n + i, n + j) - s(n + i + 1, n + j + 1)));
        }
    if (toeplitz_residual > tol * scale)
        throw std::invalid_argument(
            "geometric_source_certificate: model is not jointly stationary (Toeplitz residual " +
            std::to_string(toeplitz_residual) + ")");

    const double floor = numeric::kPivotFloorRel * k_x.trace();
    if (Eigen::LDLT<Eigen::MatrixXd>(k_x).vectorD().minCoeff() <= floor)
        throw SingularMatrixError("geometric_source_certificate: K_x is singular");

    // Row fits of K_yx = A K_x over the lower-triangular support.
    // Row 1: a_11 K_x[1,:] ~ K_yx[1,:].  Row 2: [a_21 a_22] K_x[1:2,:] ~ K_yx[2,:].
    const Eigen::VectorXd row1 = k_yx.row(0).transpose();
    const Eigen::VectorXd row2 = k_yx.row(1).transpose();
    const Eigen::VectorXd basis1 = k_x.row(0).transpose();
    const double a11 = basis1.dot(row1) / basis1.squaredNorm();
    Eigen::MatrixXd basis2(n, 2);
    basis2.col(0) = k_x.row(0).transpose();
    basis2.col(1) = k_x.row(1).transpose();
    const Eigen::Vector2d fit2 = basis2.colPivHouseholderQr().solve(row2);
    const double a21 = fit2(0);
    const double a22 = fit2(1);

    GeometricSourceCertificate cert;
    if (std::abs(a21) <= tol * scale) {
        cert.status = GeometricSourceCertificate::Status::MemorylessInconclusive;
        return cert;
    }
    cert.zeta = (a11 - a22) / a21;
    const double rho0 = k_x(0, 0);
    double residual = 0.0;
    for (int k = 1; k < n; ++k)
        residual = std::max(residual, std::abs(k_x(0, k) - cert.zeta * k_x(0, k - 1)) / rho0);
    cert.geometric_residual = residual;
    cert.status = residual <= tol ? GeometricSourceCertificate::Status::Geometric
                                  : GeometricSourceCertificate::Status::Violated;
    return cert;
}

/// Smallest kappa' such that x(1..i) and x(i+kappa'+1) are conditionally
/// independent given the kappa' samples in between, probed on a Toeplitz
/// window of length max(2*order+3, 8).  Equals the declared order for AR
/// models.
inline int markov_order(const ArSourceModel& model, double tol) {
    const int probe = std::max(2 * static_cast<int>(model.order()) + 3, 8);
    const CovarianceMatrix sigma = toeplitz_covariance(model, probe);
    for (int kappa = 0; kappa + 2 <= probe; ++kappa) {
        double worst = 0.0;
        for (int i = 1; i + kappa + 1 <= probe; ++i) {
            const IndexSet past = IndexSet::range(1, i);
            const IndexSet future{i + kappa + 1};
            const IndexSet gap = kappa == 0 ? IndexSet{} : IndexSet::range(i + 1, i + kappa);
            worst = std::max(worst, conditional_mutual_information(sigma, past, future, gap));
        }
        if (worst <= tol) return kappa;
    }
    return probe - 1;
}

}  // namespace crdlab
