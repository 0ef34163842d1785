#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crdlab/block_channel.hpp"
#include "crdlab/certificates.hpp"
#include "crdlab/information.hpp"
#include "crdlab/joint_model.hpp"

namespace crdlab {

// ---------------------------------------------------------------------------
// Block replication: from a stationary source and one block channel, build L
// consecutive blocks whose y parts are conditionally independent of everything
// else given their own x block.  The per-block joint law is then identical
// across blocks, the per-block mutual information is constant, and the rate of
// the whole sequence never exceeds the per-block rate.
// ---------------------------------------------------------------------------

struct ReplicatedModel {
    ArSourceModel base;
    BlockChannel channel;
    int blocks;
    JointProcessModel joint;

    int block_len() const { return channel.n(); }
    int total_len() const { return blocks * channel.n(); }
};

inline ReplicatedModel replicate_blocks(const ArSourceModel& base, const BlockChannel& channel,
                                        int blocks) {
    if (blocks < 1) throw std::invalid_argument("replicate_blocks: need at least one block");
    const int n = channel.n();
    const int total = blocks * n;
    const Eigen::MatrixXd t = toeplitz_covariance(base, total).entries();
    const Eigen::MatrixXd& c = channel.gain();
    const Eigen::MatrixXd& noise = channel.noise_cov().entries();

    Eigen::MatrixXd sigma(2 * total, 2 * total);
    sigma.topLeftCorner(total, total) = t;
    // cov(y-block i, x anywhere) = C cov(x-block i, x).
    for (int i = 0; i < blocks; ++i)
        sigma.block(total + i * n, 0, n, total) = c * t.block(i * n, 0, n, total);
    sigma.topRightCorner(total, total) = sigma.bottomLeftCorner(total, total).transpose();
    for (int i = 0; i < blocks; ++i)
        for (int j = 0; j < blocks; ++j) {
            Eigen::MatrixXd yy = c * t.block(i * n, j * n, n, n) * c.transpose();
            if (i == j) yy += noise;
            sigma.block(total + i * n, total + j * n, n, n) = yy;
        }

    JointProcessModel joint(total, CovarianceMatrix(std::move(sigma)), "replicated", base);
    return ReplicatedModel{base, channel, blocks, std::move(joint)};
}

/// I(x-block ell; y-block ell), ell in 1..blocks.
inline double block_mutual_information(const ReplicatedModel& r, int ell) {
    if (ell < 1 || ell > r.blocks) throw std::invalid_argument("block index out of range");
    const int n = r.block_len();
    const int lo = (ell - 1) * n + 1;
    return mutual_information(r.joint, r.joint.x_range(lo, lo + n - 1), r.joint.y_range(lo, lo + n - 1));
}

struct BlockIdentityReport {
    std::vector<double> per_block_mi_bits;       // equal across blocks
    std::vector<double> prefix_rate_bits;        // (1/(ell n)) I(x(1..ell n); y(1..ell n))
    double block_rate_bits = 0.0;                // (1/n) I(block)
    double equality_residual = 0.0;
    double worst_superadditivity_slack = 0.0;    // max over ell of prefix rate - block rate
    bool pass = false;
};

/// Checks (a) per-block mutual information is constant and (b) the prefix rate
/// of the replicated pair never exceeds the per-block rate.
inline BlockIdentityReport verify_block_identities(const ReplicatedModel& r, double tol = 1e-9) {
    BlockIdentityReport report;
    const int n = r.block_len();
    for (int ell = 1; ell <= r.blocks; ++ell)
        report.per_block_mi_bits.push_back(block_mutual_information(r, ell));
    report.block_rate_bits = report.per_block_mi_bits.front() / n;
    for (double mi : report.per_block_mi_bits)
        report.equality_residual =
            std::max(report.equality_residual, std::abs(mi - report.per_block_mi_bits.front()));
    double worst = -std::numeric_limits<double>::infinity();
    for (int ell = 1; ell <= r.blocks; ++ell) {
        const int len = ell * n;
        const double rate =
            mutual_information(r.joint, r.joint.x_range(1, len), r.joint.y_range(1, len)) / len;
        report.prefix_rate_bits.push_back(rate);
        worst = std::max(worst, rate - report.block_rate_bits);
    }
    report.worst_superadditivity_slack = worst;
    report.pass = report.equality_residual <= tol && worst <= tol;
    return report;
}

// ---------------------------------------------------------------------------
// Random-shift stationarization: a window of the replicated pair started at a
// uniformly random offset T in {0..n-1}.  Conditional on T each component is
// Gaussian; averaging the components over the n block phases makes the window
// covariances shift invariant.
// ---------------------------------------------------------------------------

struct ShiftMixtureModel {
    int n_phases;                             // number of components = block length
    int window;                               // samples per component window
    int past;                                 // extra leading x samples per component
    std::vector<JointProcessModel> components;
    double block_mi_bits;                     // I(x-block; y-block) of the generator
    ArSourceModel base;

    double weight() const { return 1.0 / n_phases; }
};

/// Extracts the n shifted window laws of (x, y) starting at offsets
/// n+1+t, t = 0..n-1, each with `past` extra leading x samples.
inline ShiftMixtureModel shift_stationarize(const ReplicatedModel& r, int window, int past = 0) {
    const int n = r.block_len();
    if (window < 1) throw std::invalid_argument("shift_stationarize: window must be >= 1");
    if (past < 0 || past > n)
        throw std::invalid_argument("shift_stationarize: past samples must lie in 0..block length");
    if (r.total_len() < window + 2 * n)
        throw std::invalid_argument("shift_stationarize: replication too short, need at least " +
                                    std::to_string(window + 2 * n) + " samples but have " +
                                    std::to_string(r.total_len()));
    const Eigen::MatrixXd& s = r.joint.sigma().entries();
    const int total = r.total_len();
    std::vector<JointProcessModel> components;
    components.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const int first = n + 1 + t;  // time index of window sample 1
        const int dim = past + 2 * window;
        // Layout: x(first-past .. first+window-1), then y(first .. first+window-1).
        std::vector<int> pos;
        pos.reserve(static_cast<std::size_t>(dim));
        for (int i = first - past; i <= first + window - 1; ++i) pos.push_back(i - 1);
        for (int i = first; i <= first + window - 1; ++i) pos.push_back(total + i - 1);
        Eigen::MatrixXd sub(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) sub(i, j) = s(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(j)]);
        components.emplace_back(window, CovarianceMatrix(std::move(sub)),
                                "shift t=" + std::to_string(t));
    }
    const double block_mi = block_mutual_information(r, 1);
    return ShiftMixtureModel{n, window, past, std::move(components), block_mi, r.base};
}

/// Mixture covariance of the aligned window (x(k..k+len-1), y(same)): the
/// uniform average of the component window covariances.
inline Eigen::MatrixXd mixture_window_covariance(const ShiftMixtureModel& s, int start, int len) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2 * len, 2 * len);
    for (const auto& comp : s.components) acc += comp.window_covariance(start, len);
    return acc / static_cast<double>(s.n_phases);
}

/// Shift invariance of the mixture window covariances.
inline StationarityReport mixture_stationarity_audit(const ShiftMixtureModel& s, int len,
                                                     double tol = 1e-9) {
    std::vector<Eigen::MatrixXd> blocks;
    for (int start = 1; start + len - 1 <= s.window; ++start)
        blocks.push_back(mixture_window_covariance(s, start, len));
    return joint_stationarity_audit(blocks, tol);
}

struct MixtureMiReport {
    double conditional_mi_bits = 0.0;   // I(x(1..m); y(1..m) | phase), total bits
    double per_sample_bits = 0.0;
    double bound_per_sample_bits = 0.0; // (1/n + 2/m) I(block)
    bool pass = false;
};

/// Conditional mutual information of the first m mixture samples given the
/// shift phase, with the bound
///   (1/m) I(x(1..m); y(1..m) | phase) <= (1/n + 2/m) I(block).
inline MixtureMiReport mixture_conditional_mi(const ShiftMixtureModel& s, int m, double tol = 1e-9) {
    if (m < 1 || m > s.window)
        throw std::invalid_argument("mixture_conditional_mi: window length out of range");
    double acc = 0.0;
    double compensation = 0.0;
    for (const auto& comp : s.components) {
        const double mi = mutual_information(comp, comp.x_range(1, m), comp.y_range(1, m));
        const double y = mi - compensation;  // Kahan sum keeps the reduction order irrelevant
        const double t = acc + y;
        compensation = (t - acc) - y;
        acc = t;
    }
    MixtureMiReport report;
    report.conditional_mi_bits = acc / s.n_phases;
    report.per_sample_bits = report.conditional_mi_bits / m;
    report.bound_per_sample_bits =
        (1.0 / s.n_phases + 2.0 / m) * s.block_mi_bits;
    report.pass = report.per_sample_bits <= report.bound_per_sample_bits + tol;
    return report;
}

// ---------------------------------------------------------------------------
// Concatenation: prepend kappa-1 head samples (the pre-window x samples,
// reconstructed by a causal head channel) to the shifted mixture, giving a
// pair whose joint law is stationary from sample kappa onward while its
// information rate matches the rate from sample 1.
// ---------------------------------------------------------------------------

struct ConcatenatedModel {
    int kappa;
    std::optional<JointProcessModel> head;  // empty when kappa <= 1
    std::optional<BlockChannel> head_channel;
    double head_mi_bits = 0.0;
    ShiftMixtureModel tail;
};

inline ConcatenatedModel concatenate_first_samples(const ShiftMixtureModel& tail,
                                                   const std::optional<BlockChannel>& head_channel,
                                                   int kappa) {
    if (kappa < 1) throw std::invalid_argument("concatenate_first_samples: kappa must be >= 1");
    if (kappa == 1) return ConcatenatedModel{1, std::nullopt, std::nullopt, 0.0, tail};
    if (!head_channel)
        throw std::invalid_argument("concatenate_first_samples: kappa >= 2 needs a head channel");
    if (head_channel->n() != kappa - 1)
        throw std::invalid_argument("concatenate_first_samples: head channel length must be kappa-1");
    if (tail.past != kappa - 1)
        throw std::invalid_argument(
            "concatenate_first_samples: tail components must carry kappa-1 pre-window x samples");

    const int h = kappa - 1;
    const Eigen::MatrixXd t = toeplitz_covariance(tail.base, h).entries();
    const Eigen::MatrixXd& c = head_channel->gain();
    Eigen::MatrixXd sigma(2 * h, 2 * h);
    sigma.topLeftCorner(h, h) = t;
    sigma.bottomLeftCorner(h, h) = c * t;
    sigma.topRightCorner(h, h) = sigma.bottomLeftCorner(h, h).transpose();
    sigma.bottomRightCorner(h, h) = c * t * c.transpose() + head_channel->noise_cov().entries();
    JointProcessModel head(h, CovarianceMatrix(std::move(sigma)), "head", tail.base);
    const double head_mi = mutual_information(head, head.x_range(1, h), head.y_range(1, h));
    return ConcatenatedModel{kappa, std::move(head), *head_channel, head_mi, tail};
}

namespace detail {

/// Per-phase covariance of (x_head, x(1..m); y_head, y(1..m)) for the
/// concatenated pair, with y_head = C_h x_head + v_h independent of the rest
/// given x_head.
inline Eigen::MatrixXd concatenated_window_covariance(const ConcatenatedModel& c, int phase, int m) {
    const int h = c.kappa - 1;
    const JointProcessModel& comp = c.tail.components[static_cast<std::size_t>(phase)];
    const Eigen::MatrixXd& s = comp.sigma().entries();
    const int w = c.tail.window;
    // Stored component layout: x_pre(1..h), x_win(1..w), y_win(1..w).
    auto pre_pos = [&](int i) { return i; };               // 0-based
    auto xwin_pos = [&](int j) { return h + j; };
    auto ywin_pos = [&](int j) { return h + w + j; };

    const int dim = 2 * (h + m);
    Eigen::MatrixXd out(dim, dim);
    // Source positions for everything except y_head, which needs the channel map.
    std::vector<int> src;  // -1 marks y_head rows
    for (int i = 0; i < h; ++i) src.push_back(pre_pos(i));
    for (int j = 0; j < m; ++j) src.push_back(xwin_pos(j));
    for (int i = 0; i < h; ++i) src.push_back(-1 - i);
    for (int j = 0; j < m; ++j) src.push_back(ywin_pos(j));

    const Eigen::MatrixXd& gain = c.head_channel->gain();
    const Eigen::MatrixXd& noise = c.head_channel->noise_cov().entries();
    auto cross = [&](int a, int b) -> double {
        const bool ha = src[static_cast<std::size_t>(a)] < 0;
        const bool hb = src[static_cast<std::size_t>(b)] < 0;
        if (!ha && !hb) return s(src[static_cast<std::size_t>(a)], src[static_cast<std::size_t>(b)]);
        if (ha && hb) {
            const int i = -1 - src[static_cast<std::size_t>(a)];
            const int j = -1 - src[static_cast<std::size_t>(b)];
            double v = noise(i, j);
            for (int p = 0; p < h; ++p)
                for (int q = 0; q < h; ++q) v += gain(i, p) * s(pre_pos(p), pre_pos(q)) * gain(j, q);
            return v;
        }
        const int yi = ha ? -1 - src[static_cast<std::size_t>(a)] : -1 - src[static_cast<std::size_t>(b)];
        const int other = ha ? src[static_cast<std::size_t>(b)] : src[static_cast<std::size_t>(a)];
        double v = 0.0;
        for (int p = 0; p < h; ++p) v += gain(yi, p) * s(pre_pos(p), other);
        return v;
    };
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) out(i, j) = cross(i, j);
    return out;
}

}  // namespace detail

struct QjsGapRow {
    int horizon = 0;
    double gap_bits = 0.0;              // (1/i) |I(1..i) - I(kappa..i)| given the phase
    double full_mi_bits = 0.0;          // I(x(1..i); y(1..i) | phase)
    double tail_mi_bits = 0.0;          // I(x(kappa..i); y(kappa..i) | phase)
    double sandwich_bits = 0.0;         // (head MI + block MI + slack) / i
    bool pass = false;
};

/// Gap between the information measured from sample 1 and from sample kappa
/// for the concatenated pair, per audited horizon.  The chain-rule sandwich
/// bounds i * gap_i by head MI + block MI.
inline std::vector<QjsGapRow> qjs_gap_audit(const ConcatenatedModel& c,
                                            const std::vector<int>& horizons, double slack = 1e-6) {
    std::vector<QjsGapRow> rows;
    int prev = 0;
    for (int i : horizons) {
        if (i < c.kappa) throw std::invalid_argument("qjs_gap_audit: horizons must be >= kappa");
        if (i <= prev) throw std::invalid_argument("qjs_gap_audit: horizons must be increasing");
        prev = i;
        const int m = i - (c.kappa - 1);
        if (m > c.tail.window)
            throw std::invalid_argument("qjs_gap_audit: horizon " + std::to_string(i) +
                                        " exceeds the mixture window");
        QjsGapRow row;
        row.horizon = i;
        if (c.kappa == 1) {
            const MixtureMiReport mi = mixture_conditional_mi(c.tail, m);
            row.full_mi_bits = row.tail_mi_bits = mi.conditional_mi_bits;
        } else {
            const int h = c.kappa - 1;
            double full = 0.0, tail = 0.0;
            for (int t = 0; t < c.tail.n_phases; ++t) {
                const Eigen::MatrixXd w = detail::concatenated_window_covariance(c, t, m);
                const int half = h + m;
                full += mutual_information(w, IndexSet::range(1, half),
                                           IndexSet::range(half + 1, 2 * half));
                tail += mutual_information(w, IndexSet::range(h + 1, half),
                                           IndexSet::range(half + h + 1, 2 * half));
            }
            row.full_mi_bits = full / c.tail.n_phases;
            row.tail_mi_bits = tail / c.tail.n_phases;
        }
        row.gap_bits = std::abs(row.full_mi_bits - row.tail_mi_bits) / i;
        row.sandwich_bits = (c.head_mi_bits + c.tail.block_mi_bits + slack) / i;
        row.pass = row.gap_bits <= row.sandwich_bits;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Conditionally independent copy: replace A by A-bar with (A-bar, B) ~ (A, B)
// and A-bar <-> B <-> everything else.  For Gaussian coordinates this is the
// projection  Sigma'[A, j] = Sigma[A,B] Sigma[B]^(-1) Sigma[B, j]  for every
// j outside A, with Sigma[A,A] kept.
// ---------------------------------------------------------------------------

inline JointProcessModel conditionally_independent_copy(const JointProcessModel& m, const IndexSet& a,
                                                        const IndexSet& b, const IndexSet& c) {
    IndexSet::require_nonempty(a, "A");
    IndexSet::require_nonempty(b, "B");
    IndexSet::require_nonempty(c, "C");
    const int dim = m.sigma().dim();
    IndexSet::require_in_bounds(a, dim, "A");
    IndexSet::require_in_bounds(b, dim, "B");
    IndexSet::require_in_bounds(c, dim, "C");
    IndexSet::require_disjoint(a, b, "A vs B");
    IndexSet::require_disjoint(a, c, "A vs C");
    IndexSet::require_disjoint(b, c, "B vs C");

    const Eigen::MatrixXd& s = m.sigma().entries();
    const Eigen::MatrixXd s_bb = detail::principal(s, b);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s_bb);
    const double floor = numeric::kPivotFloorRel * std::max(s_bb.trace(), 0.0);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= floor)
        throw SingularMatrixError("conditionally_independent_copy: block B is singular");
    const Eigen::MatrixXd s_ab = detail::select(s, a, b);
    const Eigen::MatrixXd projector = ldlt.solve(s_ab.transpose()).transpose();  // Sigma_AB Sigma_B^-1

    Eigen::MatrixXd out = s;
    std::vector<bool> in_a(static_cast<std::size_t>(dim) + 1, false);
    for (int idx : a.indices()) in_a[static_cast<std::size_t>(idx)] = true;
    for (std::size_t ai = 0; ai < a.size(); ++ai) {
        const int row = a.indices()[ai] - 1;
        for (int j = 0; j < dim; ++j) {
            if (in_a[static_cast<std::size_t>(j) + 1]) continue;
            double v = 0.0;
            for (std::size_t bi = 0; bi < b.size(); ++bi)
                v += projector(static_cast<int>(ai), static_cast<int>(bi)) * s(b.indices()[bi] - 1, j);
            out(row, j) = v;
            out(j, row) = v;
        }
    }
    return JointProcessModel(m.horizon(), CovarianceMatrix(std::move(out)),
                             m.label().empty() ? "ci-copy" : m.label() + " (ci-copy)", m.source());
}

/// Average per-letter mean-squared error (1/n) sum E[(x(k)-y(k))^2] against a
/// distortion budget D.
struct DistortionReport {
    double value = 0.0;
    double budget = 0.0;
    bool pass = false;
};

inline DistortionReport distortion_check(const JointProcessModel& m, double budget) {
    const Eigen::MatrixXd& s = m.sigma().entries();
    double acc = 0.0;
    for (int k = 1; k <= m.horizon(); ++k) {
        const int xi = m.x_position(k) - 1;
        const int yi = m.y_position(k) - 1;
        acc += s(xi, xi) + s(yi, yi) - 2.0 * s(xi, yi);
    }
    DistortionReport report;
    report.value = acc / m.horizon();
    report.budget = budget;
    report.pass = report.value <= budget + 1e-10;
    return report;
}

}  // namespace crdlab
