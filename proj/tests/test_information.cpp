#include <doctest.h>

#include <cmath>
#include <random>

#include "crdlab/covariance.hpp"
#include "crdlab/information.hpp"

using namespace crdlab;

namespace {

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
    return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
}

}  // namespace

TEST_SUITE("information") {

TEST_CASE("independent blocks carry zero information") {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(4, 4);
    sigma(0, 1) = sigma(1, 0) = 0.6;  // correlation within the x part only
    CHECK(mutual_information(sigma, IndexSet{1, 2}, IndexSet{3, 4}) == doctest::Approx(0.0));
}

TEST_CASE("scalar pair at correlation 0.8") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.8, 0.8, 1.0;
    // 2x2 determinant oracle: I = -0.5 log2(1 - rho^2).
    const double oracle = -0.5 * std::log2(1.0 - 0.8 * 0.8);
    const double mi = mutual_information(sigma, IndexSet{1}, IndexSet{2});
    CHECK(mi == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(mi == doctest::Approx(0.7370).epsilon(1e-4));
}

TEST_CASE("deterministic dependence is reported as infinite") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 1.0, 1.0, 1.0;  // y = x exactly
    CHECK_THROWS_WITH_AS(mutual_information(sigma, IndexSet{1}, IndexSet{2}),
                         doctest::Contains("deterministic dependence"), SingularMatrixError);
}

TEST_CASE("overlapping sets are rejected") {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(mutual_information(sigma, IndexSet{1, 2}, IndexSet{2, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(mutual_information(sigma, IndexSet{1}, IndexSet{4}), std::invalid_argument);
    CHECK_THROWS_AS(mutual_information(sigma, IndexSet{}, IndexSet{2}), std::invalid_argument);
}

TEST_CASE("empty conditioning set degenerates to plain information") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd sigma = random_psd(rng, 5);
    CHECK(conditional_mutual_information(sigma, IndexSet{1, 2}, IndexSet{4}, IndexSet{}) ==
          doctest::Approx(mutual_information(sigma, IndexSet{1, 2}, IndexSet{4})).epsilon(1e-12));
}

TEST_CASE("first-order chain kills the two-step conditional information") {
    const CovarianceMatrix sigma = toeplitz_covariance(ArSourceModel({0.8}, 0.36), 3);
    CHECK(conditional_mutual_information(sigma, IndexSet{3}, IndexSet{1}, IndexSet{2}) <= 1e-12);
}

TEST_CASE("second-order source leaks through one conditioning sample") {
    const ArSourceModel m({0.5, -0.3}, 1.0);
    const CovarianceMatrix sigma = toeplitz_covariance(m, 3);
    const double cmi = conditional_mutual_information(sigma, IndexSet{3}, IndexSet{1}, IndexSet{2});

    // Schur-complement oracle on the 3x3 Toeplitz covariance: condition
    // (x1, x3) on x2 by hand and read the conditional correlation.
    const double r0 = m.autocovariance(0), r1 = m.autocovariance(1), r2 = m.autocovariance(2);
    const double v = r0 - r1 * r1 / r0;       // var(x1|x2) = var(x3|x2)
    const double c = r2 - r1 * r1 / r0;       // cov(x1,x3|x2)
    const double oracle = -0.5 * std::log2(1.0 - (c / v) * (c / v));
    CHECK(cmi == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(cmi > 1e-3);
}

TEST_CASE("chain rule holds along both routes on random models") {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd sigma = random_psd(rng, 6);
        const IndexSet a{1, 2}, b{3}, c{5, 6};
        const double joint = mutual_information(sigma, a, b.unioned(c));
        const double route1 = mutual_information(sigma, a, c) +
                              conditional_mutual_information(sigma, a, b, c);
        const double route2 = mutual_information(sigma, a, b) +
                              conditional_mutual_information(sigma, a, c, b);
        worst = std::max({worst, std::abs(joint - route1), std::abs(joint - route2)});
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("adding coordinates never loses information") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd sigma = random_psd(rng, 6);
        worst = std::max(worst, mutual_information(sigma, IndexSet{1, 2}, IndexSet{3}) -
                                    mutual_information(sigma, IndexSet{1, 2}, IndexSet{3, 4}));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("split-pair identity") {
    // b1 reads a1, b2 reads a2, (a1, a2) correlated: the two cross chains hold
    // and I(a1,a2;b1,b2) = I(a1;b1) + I(a2;b2) - I(b1;b2).
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.2, 0.9);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double rho = unit(rng), alpha = unit(rng) + 0.3, gamma = unit(rng) + 0.3;
        const double s1 = unit(rng), s2 = unit(rng);
        Eigen::MatrixXd sigma(4, 4);
        sigma << 1.0, rho, alpha, gamma * rho,
                 rho, 1.0, alpha * rho, gamma,
                 alpha, alpha * rho, alpha * alpha + s1, alpha * gamma * rho,
                 gamma * rho, gamma, alpha * gamma * rho, gamma * gamma + s2;
        const double lhs = mutual_information(sigma, IndexSet{1, 2}, IndexSet{3, 4});
        const double rhs = mutual_information(sigma, IndexSet{1}, IndexSet{3}) +
                           mutual_information(sigma, IndexSet{2}, IndexSet{4}) -
                           mutual_information(sigma, IndexSet{3}, IndexSet{4});
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("conditional information factorizes through the chain rule") {
    // I(a; b,d | c) = I(a;d|c) + I(a;b|c,d), so the joint term vanishes
    // exactly when both parts do.
    std::mt19937_64 rng(13);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd sigma = random_psd(rng, 6);
        const IndexSet a{1}, b{2, 3}, c{4, 5}, d{6};
        const double together = conditional_mutual_information(sigma, a, b.unioned(d), c);
        const double split = conditional_mutual_information(sigma, a, d, c) +
                             conditional_mutual_information(sigma, a, b, c.unioned(d));
        worst = std::max(worst, std::abs(together - split));
    }
    CHECK(worst <= 1e-9);

    // On a <-> c <-> (b, d) models every term is zero.
    std::uniform_real_distribution<double> unit(0.2, 0.9);
    double worst_zero = 0.0;
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd map = Eigen::MatrixXd::Zero(6, 4);  // basis c1 c2 n_a n_d
        map(0, 0) = 1.0; map(0, 2) = 1.0;                   // a
        map(1, 0) = unit(rng); map(1, 1) = unit(rng);       // b1
        map(2, 1) = 1.3;                                    // b2
        map(3, 0) = 1.0;                                    // c1
        map(4, 1) = 1.0;                                    // c2
        map(5, 0) = unit(rng); map(5, 3) = 0.6;             // d
        Eigen::MatrixXd sigma = map * map.transpose();
        sigma(1, 1) += 0.2;
        sigma(2, 2) += 0.2;
        const IndexSet a{1}, b{2, 3}, c{4, 5}, d{6};
        worst_zero = std::max({worst_zero,
                               conditional_mutual_information(sigma, a, b.unioned(d), c),
                               conditional_mutual_information(sigma, a, d, c),
                               conditional_mutual_information(sigma, a, b, c.unioned(d))});
    }
    CHECK(worst_zero <= 1e-9);
}

}  // TEST_SUITE
