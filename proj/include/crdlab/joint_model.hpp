#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "crdlab/ar_model.hpp"
#include "crdlab/covariance.hpp"
#include "crdlab/index_set.hpp"

namespace crdlab {

/// Finite-horizon jointly-Gaussian pair (x, y) held as one covariance matrix.
///
/// Layout: x samples first, then y samples.  The x part may carry `x_past`
/// extra leading pre-window samples x(1-x_past)..x(0); the remaining n x
/// samples are time-aligned with y(1)..y(n).  With x_past == 0 this is the
/// plain 2n layout (x(1)..x(n), y(1)..y(n)).
///
/// When an ArSourceModel is attached, the x marginal must equal its Toeplitz
/// stationary autocovariance (source-law admissibility).
class JointProcessModel {
public:
    JointProcessModel(int horizon, CovarianceMatrix sigma, std::string label = {},
                      std::optional<ArSourceModel> source = std::nullopt)
        : horizon_(horizon), sigma_(std::move(sigma)), label_(std::move(label)),
          source_(std::move(source)) {
        if (horizon_ < 1) throw std::invalid_argument("JointProcessModel: horizon must be >= 1");
        x_past_ = sigma_.dim() - 2 * horizon_;
        if (x_past_ < 0)
            throw std::invalid_argument("JointProcessModel: covariance dimension " +
                                        std::to_string(sigma_.dim()) + " too small for horizon " +
                                        std::to_string(horizon_));
        if (source_) check_admissibility();
    }

    int horizon() const { return horizon_; }
    int x_past() const { return x_past_; }
    int x_count() const { return x_past_ + horizon_; }
    int y_count() const { return horizon_; }
    const CovarianceMatrix& sigma() const { return sigma_; }
    const std::string& label() const { return label_; }
    const std::optional<ArSourceModel>& source() const { return source_; }

    /// 1-based layout position of the time-aligned sample x(k), k in 1..horizon.
    int x_position(int k) const {
        require_time(k);
        return x_past_ + k;
    }
    /// 1-based layout position of y(k), k in 1..horizon.
    int y_position(int k) const {
        require_time(k);
        return x_count() + k;
    }

    IndexSet x_range(int k1, int k2) const { return IndexSet::range(x_position(k1), x_position(k2)); }
    IndexSet y_range(int k1, int k2) const { return IndexSet::range(y_position(k1), y_position(k2)); }
    /// The pre-window x samples, empty set when x_past == 0.
    IndexSet x_past_range() const {
        return x_past_ == 0 ? IndexSet{} : IndexSet::range(1, x_past_);
    }

    /// Covariance of the aligned window (x(start..start+len-1), y(same)), laid
    /// out x part then y part.
    Eigen::MatrixXd window_covariance(int start, int len) const {
        if (len < 1 || start < 1 || start + len - 1 > horizon_)
            throw std::invalid_argument("window_covariance: window out of range");
        const Eigen::MatrixXd& s = sigma_.entries();
        Eigen::MatrixXd w(2 * len, 2 * len);
        auto pos = [&](int r) { return r < len ? x_position(start + r) - 1 : y_position(start + r - len) - 1; };
        for (int i = 0; i < 2 * len; ++i)
            for (int j = 0; j < 2 * len; ++j) w(i, j) = s(pos(i), pos(j));
        return w;
    }

private:
    void require_time(int k) const {
        if (k < 1 || k > horizon_)
            throw std::invalid_argument("JointProcessModel: time index " + std::to_string(k) +
                                        " outside 1.." + std::to_string(horizon_));
    }

    void check_admissibility() const {
        const std::vector<double> rho = source_->autocovariances(static_cast<std::size_t>(x_count()));
        const double tol = 1e-9 * std::max(1.0, rho[0]);
        const Eigen::MatrixXd& s = sigma_.entries();
        for (int i = 0; i < x_count(); ++i)
            for (int j = 0; j <= i; ++j)
                if (std::abs(s(i, j) - rho[static_cast<std::size_t>(i - j)]) > tol)
                    throw std::invalid_argument(
                        "JointProcessModel: x marginal does not match the attached source law at (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
    }

    int horizon_;
    int x_past_ = 0;
    CovarianceMatrix sigma_;
    std::string label_;
    std::optional<ArSourceModel> source_;
};

}  // namespace crdlab
