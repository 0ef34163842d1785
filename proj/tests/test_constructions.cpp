#include <doctest.h>

#include <cmath>
#include <limits>

#include "crdlab/constructions.hpp"
#include "crdlab/stationary_models.hpp"

using namespace crdlab;

namespace {

BlockChannel memory_channel(int n, double off_gain, double noise) {
    Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(n, n);
    for (int i = 1; i < n; ++i) gain(i, i - 1) = off_gain;
    return BlockChannel(gain, CovarianceMatrix(noise * Eigen::MatrixXd::Identity(n, n)));
}

}  // namespace

TEST_SUITE("constructions") {

TEST_CASE("replication covariance follows the channel formulas") {
    const ArSourceModel m({0.9}, 0.19);
    const BlockChannel ch = memory_channel(2, 0.3, 0.1);
    const ReplicatedModel rep = replicate_blocks(m, ch, 3);
    const Eigen::MatrixXd t = toeplitz_covariance(m, 6).entries();
    const Eigen::MatrixXd& s = rep.joint.sigma().entries();
    const Eigen::MatrixXd& c = ch.gain();

    // Direct formula oracle, block by block.
    for (int i = 0; i < 3; ++i) {
        const Eigen::MatrixXd cross = c * t.block(2 * i, 0, 2, 6);
        CHECK((s.block(6 + 2 * i, 0, 2, 6) - cross).cwiseAbs().maxCoeff() <= 1e-12);
        for (int j = 0; j < 3; ++j) {
            Eigen::MatrixXd yy = c * t.block(2 * i, 2 * j, 2, 2) * c.transpose();
            if (i == j) yy += ch.noise_cov().entries();
            CHECK((s.block(6 + 2 * i, 6 + 2 * j, 2, 2) - yy).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("one block replicates to itself") {
    const ArSourceModel m({0.9}, 0.19);
    const BlockChannel ch = memory_channel(3, 0.4, 0.2);
    const ReplicatedModel rep = replicate_blocks(m, ch, 1);
    CHECK(rep.total_len() == 3);
    const BlockIdentityReport idr = verify_block_identities(rep);
    CHECK(idr.per_block_mi_bits.size() == 1);
    CHECK(idr.prefix_rate_bits.front() == doctest::Approx(idr.block_rate_bits).epsilon(1e-12));
}

TEST_CASE("memoryless blocks over an iid source are independent") {
    const ArSourceModel m({0.0}, 1.0);
    const ReplicatedModel rep = replicate_blocks(m, BlockChannel::identity_plus_noise(2, 0.5), 2);
    const Eigen::MatrixXd& s = rep.joint.sigma().entries();
    double off = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (i != j) {
                off = std::max(off, s.block(2 * i, 2 * j, 2, 2).cwiseAbs().maxCoeff());
                off = std::max(off, s.block(4 + 2 * i, 4 + 2 * j, 2, 2).cwiseAbs().maxCoeff());
                off = std::max(off, s.block(4 + 2 * i, 2 * j, 2, 2).cwiseAbs().maxCoeff());
            }
    CHECK(off <= 1e-15);
    // Independence makes the prefix inequality tight.
    const BlockIdentityReport idr = verify_block_identities(rep);
    for (double rate : idr.prefix_rate_bits)
        CHECK(rate == doctest::Approx(idr.block_rate_bits).epsilon(1e-12));
}

TEST_CASE("unit-gain channel preserves cross-block structure") {
    const ArSourceModel m({0.9}, 0.19);
    const ReplicatedModel rep = replicate_blocks(m, BlockChannel::identity_plus_noise(2, 0.1), 3);
    const Eigen::MatrixXd& s = rep.joint.sigma().entries();
    // cov(y-block i, y-block j) = cov(x-block i, x-block j) off the diagonal.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j)
                CHECK((s.block(6 + 2 * i, 6 + 2 * j, 2, 2) - s.block(2 * i, 2 * j, 2, 2))
                          .cwiseAbs()
                          .maxCoeff() <= 1e-12);
}

TEST_CASE("each replica is conditionally independent given its own block") {
    const ArSourceModel m({0.9}, 0.19);
    const ReplicatedModel rep = replicate_blocks(m, memory_channel(3, 0.4, 0.25), 4);
    const int n = 3, total = rep.total_len();
    for (int ell = 1; ell <= rep.blocks; ++ell) {
        const int lo = (ell - 1) * n + 1, hi = ell * n;
        IndexSet rest;  // everything outside the block pair
        if (lo > 1) rest = rest.unioned(rep.joint.x_range(1, lo - 1)).unioned(rep.joint.y_range(1, lo - 1));
        if (hi < total)
            rest = rest.unioned(rep.joint.x_range(hi + 1, total)).unioned(rep.joint.y_range(hi + 1, total));
        const auto cert = markov_chain_check(rep.joint, rep.joint.y_range(lo, hi),
                                             rep.joint.x_range(lo, hi), rest);
        CHECK(cert.holds);
    }
}

TEST_CASE("replication inherits lagged causality from its channel") {
    // For a kappa-order source, the window x(m+2-kappa .. m+k) separates
    // y(m+1 .. m+k) from the future of the replicated pair.
    const ArSourceModel ar2({0.5, -0.3}, 1.0);
    const ReplicatedModel rep = replicate_blocks(ar2, memory_channel(3, 0.4, 0.25), 5);
    const int kappa = 2, total = rep.total_len();
    for (int m : {1, 2, 4, 7}) {
        for (int k : {1, 2, 5}) {
            if (m + k + 1 > total) continue;
            const auto cert = markov_chain_check(
                rep.joint, rep.joint.y_range(m + 1, m + k),
                rep.joint.x_range(std::max(1, m + 2 - kappa), m + k),
                rep.joint.x_range(m + k + 1, total));
            CHECK(cert.holds);
        }
    }
    // A separating window shorter than kappa consecutive samples fails:
    // y(3) reaches x(2), and one sample of a second-order source cannot
    // screen x(2) from the future.
    const auto tight = markov_chain_check(rep.joint, rep.joint.y_range(3, 3),
                                          rep.joint.x_range(3, 3), rep.joint.x_range(4, total));
    CHECK_FALSE(tight.holds);
}

TEST_CASE("attached source law is enforced") {
    const ArSourceModel right({0.9}, 0.19);
    const ArSourceModel wrong({0.5}, 0.75);
    Eigen::MatrixXd sigma(4, 4);
    const Eigen::MatrixXd t = toeplitz_covariance(right, 2).entries();
    sigma.topLeftCorner(2, 2) = t;
    sigma.bottomRightCorner(2, 2) = t + 0.1 * Eigen::MatrixXd::Identity(2, 2);
    sigma.bottomLeftCorner(2, 2) = t;
    sigma.topRightCorner(2, 2) = t;
    CHECK_NOTHROW(JointProcessModel(2, CovarianceMatrix(sigma), "ok", right));
    CHECK_THROWS_WITH_AS(JointProcessModel(2, CovarianceMatrix(sigma), "bad", wrong),
                         doctest::Contains("does not match"), std::invalid_argument);
}

TEST_CASE("per-block information is constant and prefixes are dominated") {
    const ArSourceModel m({0.9}, 0.19);
    const ReplicatedModel rep = replicate_blocks(m, memory_channel(4, 0.4, 0.25), 4);
    const BlockIdentityReport idr = verify_block_identities(rep);
    CHECK(idr.equality_residual <= 1e-9);
    CHECK(idr.worst_superadditivity_slack <= 1e-9);
    // Correlated blocks make the inequality strict beyond the first prefix.
    CHECK(idr.prefix_rate_bits[1] < idr.block_rate_bits - 1e-6);
    CHECK(idr.pass);
}

TEST_CASE("shift extraction and mixture stationarity") {
    const ArSourceModel m({0.9}, 0.19);
    SUBCASE("single-phase mixture is one shifted window") {
        const ReplicatedModel rep = replicate_blocks(m, memory_channel(1, 0.0, 0.2), 8);
        const ShiftMixtureModel mix = shift_stationarize(rep, 4);
        CHECK(mix.components.size() == 1);
        // Component 1 is the law of samples 2..5 of the replication.
        const Eigen::MatrixXd w = mix.components[0].window_covariance(1, 4);
        const Eigen::MatrixXd& s = rep.joint.sigma().entries();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                CHECK(w(i, j) == doctest::Approx(s(1 + i, 1 + j)).epsilon(1e-14));
                CHECK(w(4 + i, 4 + j) == doctest::Approx(s(9 + i, 9 + j)).epsilon(1e-14));
            }
    }
    SUBCASE("too short a replication is rejected with the needed length") {
        const ReplicatedModel rep = replicate_blocks(m, memory_channel(2, 0.4, 0.2), 2);
        CHECK_THROWS_WITH_AS(shift_stationarize(rep, 4), doctest::Contains("need at least"),
                             std::invalid_argument);
    }
    SUBCASE("phases differ before averaging, the mixture is shift invariant") {
        const ReplicatedModel rep = replicate_blocks(m, memory_channel(2, 0.5, 0.2), 8);
        const ShiftMixtureModel mix = shift_stationarize(rep, 8);
        const Eigen::MatrixXd w0 = mix.components[0].window_covariance(1, 2);
        const Eigen::MatrixXd w1 = mix.components[1].window_covariance(1, 2);
        CHECK((w0 - w1).cwiseAbs().maxCoeff() > 1e-3);

        CHECK(mixture_stationarity_audit(mix, 2, 1e-9).holds);

        // Mixture-covariance oracle, reading windows straight off the
        // replicated joint law: average over phases at offset k equals the
        // average at offset k+1.
        const Eigen::MatrixXd& s = rep.joint.sigma().entries();
        const int total = rep.total_len(), n = 2, len = 2;
        auto mixture_cov = [&](int start) {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2 * len, 2 * len);
            for (int t = 0; t < n; ++t) {
                const int first = n + start + t;  // 0-based x position
                for (int i = 0; i < 2 * len; ++i)
                    for (int j = 0; j < 2 * len; ++j) {
                        const int pi = i < len ? first + i : total + first + i - len;
                        const int pj = j < len ? first + j : total + first + j - len;
                        acc(i, j) += s(pi, pj);
                    }
            }
            return (acc / n).eval();
        };
        CHECK((mixture_cov(0) - mixture_cov(1)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((mixture_cov(0) - mixture_window_covariance(mix, 1, len)).cwiseAbs().maxCoeff() <=
              1e-12);
    }
}

TEST_CASE("mixture conditional information bound") {
    SUBCASE("iid memoryless case is tight at the block length") {
        const ArSourceModel m({0.0}, 1.0);
        const ReplicatedModel rep = replicate_blocks(m, BlockChannel::identity_plus_noise(4, 0.5), 8);
        const ShiftMixtureModel mix = shift_stationarize(rep, 8);
        const MixtureMiReport r = mixture_conditional_mi(mix, 4);
        CHECK(r.per_sample_bits == doctest::Approx(mix.block_mi_bits / 4).epsilon(1e-12));
    }
    SUBCASE("correlated source keeps positive slack and obeys the long-window limit") {
        const ArSourceModel m({0.9}, 0.19);
        const ReplicatedModel rep = replicate_blocks(m, memory_channel(4, 0.3, 0.25), 18);
        const ShiftMixtureModel mix = shift_stationarize(rep, 64);
        const MixtureMiReport mid = mixture_conditional_mi(mix, 8);
        CHECK(mid.pass);
        CHECK(mid.per_sample_bits < mid.bound_per_sample_bits);

        // At m = 16n the excess over the block rate has shrunk to the 2/m
        // term; the bound is one-sided (long windows can sit strictly below
        // the block rate, that is the superadditivity deficit).
        const MixtureMiReport lim = mixture_conditional_mi(mix, 64);  // m = 16n
        const double block_rate = mix.block_mi_bits / 4.0;
        CHECK(lim.per_sample_bits <= block_rate + 2.0 / 64.0 * mix.block_mi_bits + 1e-9);
    }
}

TEST_CASE("concatenation") {
    const ArSourceModel ar2({0.5, -0.3}, 1.0);
    const ReplicatedModel rep = replicate_blocks(ar2, memory_channel(4, 0.4, 0.25), 18);

    SUBCASE("kappa = 1 is the identity") {
        const ShiftMixtureModel mix = shift_stationarize(rep, 16);
        const ConcatenatedModel cat = concatenate_first_samples(mix, std::nullopt, 1);
        CHECK_FALSE(cat.head.has_value());
        CHECK(cat.head_mi_bits == 0.0);
        for (const auto& row : qjs_gap_audit(cat, {4, 8})) CHECK(row.gap_bits == 0.0);
    }

    SUBCASE("kappa = 2 head and gap behavior") {
        const ShiftMixtureModel mix = shift_stationarize(rep, 64, 1);
        const ConcatenatedModel cat =
            concatenate_first_samples(mix, BlockChannel::identity_plus_noise(1, 1.0), 2);
        REQUIRE(cat.head.has_value());
        CHECK(cat.head->horizon() == 1);
        CHECK(std::isfinite(cat.head_mi_bits));
        CHECK(cat.head_mi_bits > 0.0);

        // The concatenated prefix is causal phase by phase, and the head
        // reconstruction touches nothing but the head samples.
        for (int t = 0; t < mix.n_phases; ++t) {
            const Eigen::MatrixXd w = detail::concatenated_window_covariance(cat, t, 6);
            const JointProcessModel prefix(7, CovarianceMatrix(w), "concat-prefix");
            for (const auto& cert : causality_audit(prefix, CausalityVariant::Short)) {
                CHECK(cert.holds);
            }
            const auto head_chain = markov_chain_check(
                prefix, prefix.y_range(1, 1), prefix.x_range(1, 1),
                prefix.x_range(2, 7).unioned(prefix.y_range(2, 7)));
            CHECK(head_chain.holds);
        }

        const auto rows = qjs_gap_audit(cat, {8, 16, 32, 64});
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            CHECK(row.pass);
            CHECK(row.gap_bits * row.horizon <=
                  cat.head_mi_bits + cat.tail.block_mi_bits + 1e-6);
            CHECK(row.gap_bits < prev);
            prev = row.gap_bits;
        }
        CHECK(rows.back().gap_bits < 0.02);
    }

    SUBCASE("mismatched head is rejected") {
        const ShiftMixtureModel mix = shift_stationarize(rep, 16, 1);
        CHECK_THROWS_AS(
            concatenate_first_samples(mix, BlockChannel::identity_plus_noise(3, 1.0), 2),
            std::invalid_argument);
        const ShiftMixtureModel no_past = shift_stationarize(rep, 16, 0);
        CHECK_THROWS_AS(
            concatenate_first_samples(no_past, BlockChannel::identity_plus_noise(1, 1.0), 2),
            std::invalid_argument);
    }
}

TEST_CASE("conditionally independent copy") {
    const ArSourceModel m({0.8}, 0.36);

    SUBCASE("already-independent models are a fixed point") {
        const JointProcessModel jm = stationary_filter_model(m, {1.0}, 0.2, 4, 1);
        const JointProcessModel copy = conditionally_independent_copy(
            jm, jm.y_range(1, 4), jm.x_range(1, 4), jm.x_past_range());
        CHECK((copy.sigma().entries() - jm.sigma().entries()).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("an anticipative past dependence is projected away") {
        // y(k) = x(k) + 0.7 x(0) + noise over two pre-window samples.
        const int n = 4, past = 2;
        const Eigen::MatrixXd t = toeplitz_covariance(m, n + past).entries();
        Eigen::MatrixXd map = Eigen::MatrixXd::Zero(past + 2 * n, past + n);
        for (int i = 0; i < past + n; ++i) map(i, i) = 1.0;
        for (int k = 0; k < n; ++k) {
            map(past + n + k, past + k) = 1.0;
            map(past + n + k, past - 1) += 0.7;
        }
        Eigen::MatrixXd sigma = map * t * map.transpose();
        for (int k = 0; k < n; ++k) sigma(past + n + k, past + n + k) += 0.2;
        const JointProcessModel jm(n, CovarianceMatrix(sigma), "anticipative-past");

        bool short_ok = true, strong_ok = true;
        for (const auto& c : causality_audit(jm, CausalityVariant::Short)) short_ok &= c.holds;
        for (const auto& c : causality_audit(jm, CausalityVariant::StrongPrefix))
            strong_ok &= c.holds;
        CHECK(short_ok);
        CHECK_FALSE(strong_ok);

        const JointProcessModel fixed = conditionally_independent_copy(
            jm, jm.y_range(1, n), jm.x_range(1, n), jm.x_past_range());
        CHECK(markov_chain_check(fixed, fixed.y_range(1, n), fixed.x_range(1, n),
                                 fixed.x_past_range())
                  .holds);
        for (const auto& c : causality_audit(fixed, CausalityVariant::StrongPrefix))
            CHECK(c.holds);

        // The (x, y) joint marginal is untouched.
        double dev = 0.0;
        for (int i : jm.x_range(1, n))
            for (int j : jm.y_range(1, n))
                dev = std::max(dev, std::abs(fixed.sigma()(i - 1, j - 1) - jm.sigma()(i - 1, j - 1)));
        for (int i : jm.y_range(1, n))
            for (int j : jm.y_range(1, n))
                dev = std::max(dev, std::abs(fixed.sigma()(i - 1, j - 1) - jm.sigma()(i - 1, j - 1)));
        CHECK(dev <= 1e-12);
    }

    SUBCASE("singular projection block is rejected") {
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(4, 4);
        sigma(1, 2) = sigma(2, 1) = 1.0;  // B = {x2, y1} degenerate
        const JointProcessModel jm(2, CovarianceMatrix(sigma), "degenerate");
        CHECK_THROWS_AS(
            conditionally_independent_copy(jm, IndexSet{4}, IndexSet{2, 3}, IndexSet{1}),
            SingularMatrixError);
    }
}

TEST_CASE("average distortion predicate") {
    const ArSourceModel m({0.9}, 0.19);
    const JointProcessModel jm = stationary_filter_model(m, {1.0}, 0.25, 4);
    // E[(x - y)^2] = noise variance for a unit-gain channel.
    const DistortionReport r = distortion_check(jm, 0.25);
    CHECK(r.value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.pass);
    CHECK_FALSE(distortion_check(jm, 0.2).pass);
}

}  // TEST_SUITE
