#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "crdlab/covariance.hpp"

namespace crdlab {

/// Linear-Gaussian conditional law P(y(1..n) | x(1..n)) realized as
/// y = C x + v with v ~ N(0, noise_cov) independent of x.  The gain C must be
/// lower triangular (row i uses columns <= i), so the pair (x, y) it induces
/// is causally related within the block.
class BlockChannel {
public:
    BlockChannel(Eigen::MatrixXd gain, CovarianceMatrix noise_cov)
        : gain_(std::move(gain)), noise_cov_(std::move(noise_cov)) {
        if (gain_.rows() != gain_.cols() || gain_.rows() == 0)
            throw std::invalid_argument("BlockChannel: gain must be square and non-empty");
        if (noise_cov_.dim() != gain_.rows())
            throw std::invalid_argument("BlockChannel: noise covariance dimension mismatch");
        if (!gain_.allFinite())
            throw std::invalid_argument("BlockChannel: non-finite gain entry");
        for (int i = 0; i < gain_.rows(); ++i)
            for (int j = i + 1; j < gain_.cols(); ++j)
                if (gain_(i, j) != 0.0)
                    throw std::invalid_argument(
                        "BlockChannel: gain must be lower triangular (anticipative entry at row " +
                        std::to_string(i + 1) + ", column " + std::to_string(j + 1) + ")");
    }

    /// y(k) = x(k) + noise, the memoryless unit-gain channel.
    static BlockChannel identity_plus_noise(int n, double noise_variance) {
        if (n < 1) throw std::invalid_argument("BlockChannel: need n >= 1");
        return BlockChannel(Eigen::MatrixXd::Identity(n, n),
                            CovarianceMatrix(noise_variance * Eigen::MatrixXd::Identity(n, n)));
    }

    int n() const { return static_cast<int>(gain_.rows()); }
    const Eigen::MatrixXd& gain() const { return gain_; }
    const CovarianceMatrix& noise_cov() const { return noise_cov_; }

private:
    Eigen::MatrixXd gain_;
    CovarianceMatrix noise_cov_;
};

}  // namespace crdlab
