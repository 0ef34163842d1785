#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crdlab {

/// Scalar autoregressive source
///
///   x(k) = sum_{i=1..order} a_i x(k-i) + w(k),   w(k) ~ N(0, sigma_w^2) i.i.d.
///
/// The recursion must be strictly stable (all characteristic roots inside the
/// unit circle) so that a stationary solution exists.  The stationary
/// autocovariance rho_tau = E[x(k) x(k+tau)] solves the Yule-Walker system for
/// tau <= order and extends by rho_tau = sum_i a_i rho_{tau-i} beyond it.
///
/// Trailing zero coefficients are dropped, so order() is always the index of
/// the last nonzero coefficient (0 for an i.i.d. source).
class ArSourceModel {
public:
    ArSourceModel(std::vector<double> coeffs, double innovation_variance)
        : coeffs_(std::move(coeffs)), innovation_variance_(innovation_variance) {
        if (!(innovation_variance_ > 0.0) || !std::isfinite(innovation_variance_))
            throw std::invalid_argument("ArSourceModel: innovation variance must be positive and finite");
        for (double a : coeffs_)
            if (!std::isfinite(a))
                throw std::invalid_argument("ArSourceModel: non-finite coefficient");
        while (!coeffs_.empty() && coeffs_.back() == 0.0)
            coeffs_.pop_back();
        check_stability();
        solve_yule_walker();
    }

    std::size_t order() const { return coeffs_.size(); }
    const std::vector<double>& coeffs() const { return coeffs_; }
    double innovation_variance() const { return innovation_variance_; }
    double stationary_variance() const { return head_autocov_[0]; }

    /// Stationary autocovariance rho_lag, lag >= 0.
    double autocovariance(std::size_t lag) const {
        if (lag < head_autocov_.size()) return head_autocov_[lag];
        return autocovariances(lag + 1).back();
    }

    /// rho_0 .. rho_{count-1} in one pass (the Toeplitz first row).
    std::vector<double> autocovariances(std::size_t count) const {
        std::vector<double> rho(head_autocov_.begin(),
                                head_autocov_.begin() + std::min(count, head_autocov_.size()));
        rho.reserve(count);
        while (rho.size() < count) {
            const std::size_t tau = rho.size();
            double v = 0.0;
            for (std::size_t i = 0; i < coeffs_.size(); ++i)
                v += coeffs_[i] * rho[tau - i - 1];
            rho.push_back(v);
        }
        return rho;
    }

private:
    void check_stability() {
        const std::size_t k = coeffs_.size();
        if (k == 0) return;
        // Companion matrix of z^k - a_1 z^{k-1} - ... - a_k.
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<int>(k), static_cast<int>(k));
        for (std::size_t i = 0; i < k; ++i) companion(0, static_cast<int>(i)) = coeffs_[i];
        for (std::size_t i = 1; i < k; ++i) companion(static_cast<int>(i), static_cast<int>(i - 1)) = 1.0;
        const Eigen::VectorXcd roots = companion.eigenvalues();
        double radius = 0.0;
        for (int i = 0; i < roots.size(); ++i) radius = std::max(radius, std::abs(roots(i)));
        if (!(radius < 1.0 - 1e-9)) {
            std::ostringstream msg;
            msg << "ArSourceModel: unstable recursion, spectral radius " << radius
                << " (need all characteristic roots strictly inside the unit circle)";
            throw std::invalid_argument(msg.str());
        }
    }

    void solve_yule_walker() {
        const int k = static_cast<int>(coeffs_.size());
        if (k == 0) {
            head_autocov_ = {innovation_variance_};
            return;
        }
        // Unknowns rho_0 .. rho_k.  Row tau: rho_tau - sum_i a_i rho_{|tau-i|} = sigma_w^2 * [tau == 0].
        Eigen::MatrixXd system = Eigen::MatrixXd::Zero(k + 1, k + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
        rhs(0) = innovation_variance_;
        for (int tau = 0; tau <= k; ++tau) {
            system(tau, tau) += 1.0;
            for (int i = 1; i <= k; ++i)
                system(tau, std::abs(tau - i)) -= coeffs_[static_cast<std::size_t>(i - 1)];
        }
        const Eigen::VectorXd rho = system.colPivHouseholderQr().solve(rhs);
        if (!rho.allFinite() || !(rho(0) > 0.0))
            throw std::invalid_argument("ArSourceModel: Yule-Walker system has no valid stationary solution");
        head_autocov_.assign(rho.data(), rho.data() + k + 1);
    }

    std::vector<double> coeffs_;
    double innovation_variance_;
    std::vector<double> head_autocov_;  // rho_0 .. rho_order
};

}  // namespace crdlab
