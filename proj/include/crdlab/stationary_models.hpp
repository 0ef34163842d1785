#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "crdlab/ar_model.hpp"
#include "crdlab/joint_model.hpp"

namespace crdlab {

/// Jointly stationary pair from a time-invariant filter over the two-sided
/// stationary extension of the source:
///
///   y(k) = sum_j taps[j] x(k - j) + v(k),   v ~ N(0, noise_variance) i.i.d.
///
/// Every covariance entry depends on time differences only, so all blocks are
/// Toeplitz.  `past` extra leading x samples may be included.
inline JointProcessModel stationary_filter_model(const ArSourceModel& model,
                                                 const std::vector<double>& taps,
                                                 double noise_variance, int n, int past = 0) {
    if (taps.empty()) throw std::invalid_argument("stationary_filter_model: need at least one tap");
    if (n < 1 || past < 0) throw std::invalid_argument("stationary_filter_model: bad dimensions");
    const int m = static_cast<int>(taps.size()) - 1;
    const std::vector<double> rho =
        model.autocovariances(static_cast<std::size_t>(n + past + 2 * m) + 1);
    auto r = [&](int lag) { return rho[static_cast<std::size_t>(std::abs(lag))]; };

    const int xc = past + n;
    const int dim = xc + n;
    Eigen::MatrixXd sigma(dim, dim);
    // x times run 1-past .. n; y times run 1 .. n.
    auto xtime = [&](int i) { return i + 1 - past; };
    for (int i = 0; i < xc; ++i)
        for (int j = 0; j < xc; ++j) sigma(i, j) = r(xtime(i) - xtime(j));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < xc; ++j) {
            double v = 0.0;
            for (int a = 0; a <= m; ++a) v += taps[static_cast<std::size_t>(a)] * r(k + 1 - a - xtime(j));
            sigma(xc + k, j) = v;
            sigma(j, xc + k) = v;
        }
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double v = 0.0;
            for (int a = 0; a <= m; ++a)
                for (int b = 0; b <= m; ++b)
                    v += taps[static_cast<std::size_t>(a)] * taps[static_cast<std::size_t>(b)] *
                         r((k - a) - (l - b));
            if (k == l) v += noise_variance;
            sigma(xc + k, xc + l) = v;
        }
    return JointProcessModel(n, CovarianceMatrix(std::move(sigma)), "stationary-filter",
                             past == 0 ? std::optional<ArSourceModel>(model) : std::nullopt);
}

/// Anticipative channel y(k) = x(k+1) + noise, assembled over horizon n
/// (x part has n samples; the needed x(n+1) is marginalized through the
/// stationary law).  Violates every causality chain that separates y from the
/// one-step future.
inline JointProcessModel lookahead_channel_model(const ArSourceModel& model, int n,
                                                 double noise_variance) {
    if (n < 2) throw std::invalid_argument("lookahead_channel_model: need n >= 2");
    const std::vector<double> rho = model.autocovariances(static_cast<std::size_t>(n) + 2);
    auto r = [&](int lag) { return rho[static_cast<std::size_t>(std::abs(lag))]; };
    Eigen::MatrixXd sigma(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            sigma(i, j) = r(i - j);
            sigma(n + i, j) = r(i + 1 - j);
            sigma(j, n + i) = sigma(n + i, j);
            sigma(n + i, n + j) = r(i - j) + (i == j ? noise_variance : 0.0);
        }
    return JointProcessModel(n, CovarianceMatrix(std::move(sigma)), "lookahead", model);
}

/// Memoryless channel with a drifting gain g(k) = 1 + drift * k: causal but
/// not jointly stationary.
inline JointProcessModel time_varying_gain_model(const ArSourceModel& model, int n, double drift,
                                                 double noise_variance) {
    if (n < 2) throw std::invalid_argument("time_varying_gain_model: need n >= 2");
    const std::vector<double> rho = model.autocovariances(static_cast<std::size_t>(n));
    auto r = [&](int lag) { return rho[static_cast<std::size_t>(std::abs(lag))]; };
    auto g = [&](int k) { return 1.0 + drift * (k + 1); };
    Eigen::MatrixXd sigma(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            sigma(i, j) = r(i - j);
            sigma(n + i, j) = g(i) * r(i - j);
            sigma(j, n + i) = sigma(n + i, j);
            sigma(n + i, n + j) = g(i) * g(j) * r(i - j) + (i == j ? noise_variance : 0.0);
        }
    return JointProcessModel(n, CovarianceMatrix(std::move(sigma)), "time-varying-gain", model);
}

}  // namespace crdlab
