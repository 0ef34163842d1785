#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "crdlab/certificates.hpp"
#include "crdlab/coder.hpp"
#include "crdlab/constructions.hpp"
#include "crdlab/information.hpp"
#include "crdlab/report.hpp"
#include "crdlab/solver.hpp"
#include "crdlab/stationary_models.hpp"

namespace crdlab {

// Named invariant suites shared by the CLI `audit` command and the test
// binaries.  Each check is one inequality: pass iff lhs <= rhs + slack.

namespace auditdetail {

inline AuditResult bound(std::string check, double lhs, double rhs, double slack = 0.0) {
    return AuditResult{std::move(check), lhs, rhs, slack, lhs <= rhs + slack};
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
    return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
}

struct DisjointTriple {
    IndexSet a, b, c;
};

inline DisjointTriple random_triple(std::mt19937_64& rng, int dim) {
    std::vector<int> pool;
    for (int i = 1; i <= dim; ++i) pool.push_back(i);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<int> size_dist(1, 2);
    const int na = size_dist(rng), nb = size_dist(rng), nc = size_dist(rng);
    auto take = [&](int from, int count) {
        std::vector<int> v(pool.begin() + from, pool.begin() + from + count);
        std::sort(v.begin(), v.end());
        return IndexSet(std::move(v));
    };
    return DisjointTriple{take(0, na), take(na, nb), take(na + nb, nc)};
}

}  // namespace auditdetail

/// Mutual-information identities and the stationarity/causality certificates
/// on randomized Gaussian models.
inline std::vector<AuditResult> gauss_core_suite(std::uint64_t seed, int trials = 100) {
    using auditdetail::bound;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    std::vector<AuditResult> out;

    double worst_monotone = 0.0, worst_chain = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Eigen::MatrixXd sigma = auditdetail::random_psd(rng, 7);
        const auto sets = auditdetail::random_triple(rng, 7);
        const double joint = mutual_information(sigma, sets.a, sets.b.unioned(sets.c));
        worst_monotone = std::max(worst_monotone, mutual_information(sigma, sets.a, sets.b) - joint);
        const double route1 = mutual_information(sigma, sets.a, sets.c) +
                              conditional_mutual_information(sigma, sets.a, sets.b, sets.c);
        const double route2 = mutual_information(sigma, sets.a, sets.b) +
                              conditional_mutual_information(sigma, sets.a, sets.c, sets.b);
        worst_chain = std::max({worst_chain, std::abs(joint - route1), std::abs(joint - route2)});
    }
    out.push_back(bound("mi-monotonicity", worst_monotone, 0.0, 1e-9));
    out.push_back(bound("mi-chain-rule", worst_chain, 0.0, 1e-9));

    // Split pairs: b1 = alpha a1 + v1 and b2 = gamma a2 + v2 with correlated
    // (a1, a2) satisfy the two cross Markov chains, so
    // I(a1,a2; b1,b2) = I(a1;b1) + I(a2;b2) - I(b1;b2).
    double worst_split = 0.0;
    for (int t = 0; t < trials; ++t) {
        const double rho = unit(rng), alpha = unit(rng) + 0.3, gamma = unit(rng) + 0.3;
        const double s1 = unit(rng), s2 = unit(rng);
        Eigen::MatrixXd sigma(4, 4);  // a1 a2 b1 b2
        sigma << 1.0, rho, alpha, gamma * rho,
                 rho, 1.0, alpha * rho, gamma,
                 alpha, alpha * rho, alpha * alpha + s1, alpha * gamma * rho,
                 gamma * rho, gamma, alpha * gamma * rho, gamma * gamma + s2;
        const double lhs = mutual_information(sigma, IndexSet{1, 2}, IndexSet{3, 4});
        const double rhs = mutual_information(sigma, IndexSet{1}, IndexSet{3}) +
                           mutual_information(sigma, IndexSet{2}, IndexSet{4}) -
                           mutual_information(sigma, IndexSet{3}, IndexSet{4});
        worst_split = std::max(worst_split, std::abs(lhs - rhs));
    }
    out.push_back(bound("mi-split-pair-identity", worst_split, 0.0, 1e-8));

    // I(a; b,d | c) decomposes as I(a;d|c) + I(a;b|c,d); on a <-> c <-> (b,d)
    // models every term vanishes.
    double worst_fact = 0.0, worst_zero = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Eigen::MatrixXd sigma = auditdetail::random_psd(rng, 6);
        const IndexSet a{1}, b{2, 3}, c{4, 5}, d{6};
        const double together = conditional_mutual_information(sigma, a, b.unioned(d), c);
        const double split = conditional_mutual_information(sigma, a, d, c) +
                             conditional_mutual_information(sigma, a, b, c.unioned(d));
        worst_fact = std::max(worst_fact, std::abs(together - split));

        // a = c1 + noise and (b, d) driven by c plus their own noise, so the
        // chain a <-> c <-> (b, d) holds and every conditional term vanishes.
        Eigen::MatrixXd map = Eigen::MatrixXd::Zero(6, 4);  // basis c1 c2 n_a n_d
        map(0, 0) = 1.0; map(0, 2) = 1.0;                   // a
        map(1, 0) = unit(rng); map(1, 1) = unit(rng);       // b1
        map(2, 1) = 1.3;                                    // b2
        map(3, 0) = 1.0;                                    // c1
        map(4, 1) = 1.0;                                    // c2
        map(5, 0) = 0.4; map(5, 3) = 0.6;                   // d
        Eigen::MatrixXd full = map * map.transpose();
        full(1, 1) += 0.2; full(2, 2) += 0.2;               // observation noise on b
        worst_zero = std::max(worst_zero,
                              conditional_mutual_information(full, IndexSet{1},
                                                             IndexSet{2, 3}.unioned(IndexSet{6}),
                                                             IndexSet{4, 5}));
    }
    out.push_back(bound("cmi-zero-factorization", worst_fact, 0.0, 1e-9));
    out.push_back(bound("cmi-zero-on-chain-models", worst_zero, 0.0, 1e-9));

    // Jointly stationary + causal pairs must satisfy the per-sample chains
    // x(k+1..n) <-> x(k) <-> y(k).
    double worst_sample_chain = 0.0;
    for (int t = 0; t < 12; ++t) {
        const double a = -0.9 + 1.8 * (t / 11.0);
        const ArSourceModel src(std::abs(a) < 0.05 ? std::vector<double>{} : std::vector<double>{a},
                                1.0);
        const JointProcessModel m = stationary_filter_model(src, {unit(rng) + 0.2}, 0.3, 6);
        bool stationary_and_causal = true;
        for (const auto& cert : causality_audit(m, CausalityVariant::Short))
            stationary_and_causal = stationary_and_causal && cert.holds;
        if (!stationary_and_causal) continue;
        for (int k = 1; k < 6; ++k)
            worst_sample_chain =
                std::max(worst_sample_chain,
                         markov_chain_check(m, m.x_range(k + 1, 6), m.x_range(k, k),
                                            m.y_range(k, k)).residual);
    }
    out.push_back(bound("stationary-causal-sample-chain", worst_sample_chain, 0.0, 1e-8));

    // Geometric-autocovariance certificate on AR(1) pairs with a one-step
    // filter channel: zeta recovers the AR coefficient.
    double worst_zeta = 0.0;
    bool all_geometric = true;
    for (double a : {0.3, 0.6, 0.9}) {
        const ArSourceModel src({a}, 1.0 - a * a);
        const JointProcessModel m = stationary_filter_model(src, {1.0, 0.5}, 0.4, 6);
        const GeometricSourceCertificate cert = geometric_source_certificate(m);
        all_geometric =
            all_geometric && cert.status == GeometricSourceCertificate::Status::Geometric;
        worst_zeta = std::max(worst_zeta, std::abs(cert.zeta - a));
    }
    out.push_back(bound("geometric-certificate-ar1", worst_zeta, 0.0, 1e-6));
    out.push_back(bound("geometric-certificate-status", all_geometric ? 0.0 : 1.0, 0.0));
    return out;
}

/// Replication, shift stationarization, and concatenation invariants.
inline std::vector<AuditResult> constructions_suite(std::uint64_t seed) {
    using auditdetail::bound;
    std::vector<AuditResult> out;
    const ArSourceModel ar1({0.9}, 0.19);
    const ArSourceModel ar2({0.5, -0.3}, 1.0);
    (void)seed;

    {
        const int n = 4;
        Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(n, n);
        for (int i = 1; i < n; ++i) gain(i, i - 1) = 0.4;
        const BlockChannel channel(gain, CovarianceMatrix(0.25 * Eigen::MatrixXd::Identity(n, n)));
        const ReplicatedModel rep = replicate_blocks(ar1, channel, 8);
        const BlockIdentityReport idr = verify_block_identities(rep);
        out.push_back(bound("block-mi-equality", idr.equality_residual, 0.0, 1e-9));
        out.push_back(bound("block-superadditivity", idr.worst_superadditivity_slack, 0.0, 1e-9));

        // kappa-lagged causality of the replicated pair: the window
        // x(m+2-kappa .. m+k) separates y(m+1 .. m+k) from the future.
        const int kappa = static_cast<int>(ar1.order());
        double worst = 0.0;
        const int total = rep.total_len();
        for (int m : {kappa, 3, 9}) {
            for (int k : {1, 3, 6}) {
                if (m + k + 1 > total) continue;
                const auto cert = markov_chain_check(
                    rep.joint, rep.joint.y_range(m + 1, m + k),
                    rep.joint.x_range(std::max(1, m + 2 - kappa), m + k),
                    rep.joint.x_range(m + k + 1, total));
                worst = std::max(worst, cert.residual);
            }
        }
        out.push_back(bound("replication-lagged-causality", worst, 0.0, 1e-8));
    }

    {
        const int n = 4;
        Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(n, n);
        for (int i = 1; i < n; ++i) gain(i, i - 1) = 0.4;
        const BlockChannel channel(gain, CovarianceMatrix(0.25 * Eigen::MatrixXd::Identity(n, n)));
        const ReplicatedModel rep = replicate_blocks(ar2, channel, 18);
        const ShiftMixtureModel mix = shift_stationarize(rep, 64, 1);
        out.push_back(bound("mixture-stationarity", mixture_stationarity_audit(mix, 4).residual,
                            0.0, 1e-9));
        double worst_rate = 0.0;
        for (int m : {4, 8, 16, 64}) {
            const MixtureMiReport r = mixture_conditional_mi(mix, m);
            worst_rate = std::max(worst_rate, r.per_sample_bits - r.bound_per_sample_bits);
        }
        out.push_back(bound("mixture-rate-bound", worst_rate, 0.0, 1e-9));

        const ConcatenatedModel cat =
            concatenate_first_samples(mix, BlockChannel::identity_plus_noise(1, 1.0), 2);
        const std::vector<QjsGapRow> rows = qjs_gap_audit(cat, {8, 16, 32, 64});
        double worst_sandwich = 0.0, prev = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        for (const auto& row : rows) {
            worst_sandwich = std::max(worst_sandwich,
                                      row.gap_bits * row.horizon -
                                          (cat.head_mi_bits + cat.tail.block_mi_bits));
            decreasing = decreasing && row.gap_bits < prev;
            prev = row.gap_bits;
        }
        out.push_back(bound("concatenation-gap-sandwich", worst_sandwich, 0.0, 1e-6));
        out.push_back(bound("concatenation-gap-at-64", rows.back().gap_bits, 0.02));
        out.push_back(bound("concatenation-gap-decreasing", decreasing ? 0.0 : 1.0, 0.0));

        // Head reconstruction depends on the pre-window x samples only.
        double worst_head = 0.0;
        for (int t = 0; t < mix.n_phases; ++t) {
            const Eigen::MatrixXd w = detail::concatenated_window_covariance(cat, t, 4);
            const int h = cat.kappa - 1, half = h + 4;
            const auto cert = markov_chain_check(w, IndexSet::range(half + 1, half + h),
                                                 IndexSet::range(1, h),
                                                 IndexSet::range(h + 1, half)
                                                     .unioned(IndexSet::range(half + h + 1, 2 * half)),
                                                 1e-8);
            worst_head = std::max(worst_head, cert.residual);
        }
        out.push_back(bound("head-markov-chain", worst_head, 0.0, 1e-8));

        // Average-MSE distortion concatenates: head and tail within budget
        // imply the joined window within budget.
        const double d_head = cat.head ? distortion_check(*cat.head, 1e9).value : 0.0;
        double d_tail = 0.0, d_joint = 0.0;
        {
            const Eigen::MatrixXd w = detail::concatenated_window_covariance(cat, 0, 8);
            const int h = cat.kappa - 1, half = h + 8;
            for (int k = 0; k < half; ++k)
                d_joint += w(k, k) + w(half + k, half + k) - 2.0 * w(k, half + k);
            d_joint /= half;
            for (int k = h; k < half; ++k)
                d_tail += w(k, k) + w(half + k, half + k) - 2.0 * w(k, half + k);
            d_tail /= 8;
        }
        const double budget = std::max(d_head, d_tail);
        out.push_back(bound("distortion-concatenation-closure", d_joint, budget, 1e-12));
    }
    return out;
}

/// Solver consistency: reference optimizer, stationary limit, and membership
/// of the realized optimum in the causal distortion-feasible family.
inline std::vector<AuditResult> solver_suite(std::uint64_t seed) {
    using auditdetail::bound;
    std::vector<AuditResult> out;
    (void)seed;
    const ArSourceModel m({0.9}, 0.19);

    double worst_brute = 0.0;
    for (const auto& [d, n] : std::vector<std::pair<double, int>>{{0.1, 2}, {0.25, 2}, {0.1, 3}}) {
        const RdPoint brute = brute_force_irdf(m, d, n, 1e-3);
        const RdPoint fine = finite_horizon_irdf(m, d, n);
        worst_brute = std::max(worst_brute, std::abs(brute.rate_bits - fine.rate_bits));
    }
    out.push_back(bound("finite-vs-brute", worst_brute, 5e-3));

    const ConvergenceReport conv = convergence_report(m, 0.1, {4, 16, 64, 256, 1024});
    out.push_back(bound("finite-to-stationary", conv.rows.back().gap_bits, 1e-3));
    out.push_back(bound("convergence-trend", conv.gap_shrinks ? 0.0 : 1.0, 0.0));

    const RdPoint p8 = finite_horizon_irdf(m, 0.1, 8);
    const JointProcessModel realized = realize_allocation(m, *p8.allocation);
    double worst_causal = 0.0;
    for (const auto& cert : causality_audit(realized, CausalityVariant::Short))
        worst_causal = std::max(worst_causal, cert.residual);
    out.push_back(bound("allocation-causality", worst_causal, 0.0, 1e-8));
    out.push_back(bound("allocation-distortion", distortion_check(realized, 0.1).value, 0.1, 1e-10));

    double worst_increase = -1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 60; ++i) {
        const double d = 0.999 * i / 60.0;
        const double r = stationary_irdf(m, d).rate_bits;
        worst_increase = std::max(worst_increase, r - prev);
        prev = r;
    }
    out.push_back(bound("stationary-monotonic", worst_increase, 0.0));
    return out;
}

/// Dither physics, Kraft admissibility, and the operational rate sandwich.
inline std::vector<AuditResult> coder_suite(std::uint64_t seed) {
    using auditdetail::bound;
    std::vector<AuditResult> out;
    const ArSourceModel m({0.9}, 0.19);
    const EvaluationReport rep = evaluate(m, 0.1, 200000, seed);

    std::vector<double> x(200000);
    const double sw = std::sqrt(0.19);
    x[0] = gaussian_sample(seed, kSourceStreamId, 0);
    for (std::size_t k = 1; k < x.size(); ++k)
        x[k] = 0.9 * x[k - 1] + sw * gaussian_sample(seed, kSourceStreamId, k);
    CoderConfig cfg = rep.config;
    const EncodeResult enc = encode(x, cfg);
    for (const auto& r : dither_noise_audit(enc.quantizer_noise, enc.quantizer_input, cfg.step))
        out.push_back(r);

    out.push_back(bound("kraft-admissibility", kraft_sum(cfg.max_index), 1.0));
    out.push_back(bound("rate-gap-entropy", rep.entropy_gap_bits, rep.entropy_gap_bound_bits));
    out.push_back(bound("rate-gap-prefix", rep.prefix_gap_bits, rep.prefix_gap_bound_bits));
    out.push_back(bound("rate-lower-bound",
                        rep.stationary_rate_at_measured_bits - rep.stats.entropy_rate_bits,
                        kEntropyStatSlackBits));
    out.push_back(bound("mse-target", std::abs(rep.stats.mse / 0.1 - 1.0), 0.03));

    const EncodeResult enc2 = encode(x, cfg);
    out.push_back(bound("roundtrip-determinism", enc.bitstream == enc2.bitstream ? 0.0 : 1.0, 0.0));
    return out;
}

inline std::vector<AuditResult> run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "gauss-core") return gauss_core_suite(seed);
    if (name == "constructions") return constructions_suite(seed);
    if (name == "solver") return solver_suite(seed);
    if (name == "coder") return coder_suite(seed);
    if (name == "all") {
        std::vector<AuditResult> out;
        for (const char* suite : {"gauss-core", "constructions", "solver", "coder"}) {
            auto part = run_suite(suite, seed);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    throw std::invalid_argument("unknown audit suite '" + name +
                                "' (expected gauss-core, constructions, solver, coder or all)");
}

}  // namespace crdlab
