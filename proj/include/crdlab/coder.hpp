#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crdlab/ar_model.hpp"
#include "crdlab/bitstream.hpp"
#include "crdlab/dither.hpp"
#include "crdlab/report.hpp"
#include "crdlab/solver.hpp"

namespace crdlab {

// ---------------------------------------------------------------------------
// Zero-delay predictive coder: an entropy-coded subtractively-dithered uniform
// quantizer inside a DPCM loop.
//
//   u(k) = x(k) - a y(k-1)                 prediction error, y(0) = 0
//   i(k) = round((u(k) + z(k)) / Delta)    shared-seed dither z ~ U(-D/2, D/2]
//   y(k) = a y(k-1) + beta (i(k) Delta - z(k))
//
// Subtracting the dither makes the quantizer noise eps = i Delta - z - u
// uniform, white and independent of u, so the MMSE scaling beta = p/(p+theta)
// with theta = Delta^2/12 lands the loop exactly on the design distortion.
//
// Two rate figures are tracked: the accumulated codelength of an adaptive
// per-dither-phase Krichevsky-Trofimov model (the conditional-entropy figure;
// the dither is shared, so conditioning on it is free), and the actual length
// of the instantaneous Elias-gamma code the payload is written with.
// ---------------------------------------------------------------------------

struct CoderConfig {
    double step = 0.0;               // Delta
    double scaling = 0.0;            // beta in (0, 1]
    double predictor = 0.0;          // AR(1) coefficient a
    double target_distortion = 0.0;  // D
    std::uint64_t dither_seed = 0;
    int max_index = 8;               // indices beyond this escape
};

constexpr double kCausalGapBoundBits = 0.254;
constexpr double kZeroDelayGapBoundBits = 1.254;
constexpr double kEntropyStatSlackBits = 0.05;

/// Quantizer design hitting distortion D exactly in steady state:
/// theta = p D / (p - D) with p = a^2 D + sigma_w^2, Delta = sqrt(12 theta),
/// beta = p/(p + theta).  The Shannon-level rate 0.5 log2((p+theta)/theta)
/// equals the stationary solver value 0.5 log2(p/D) identically.
inline CoderConfig design_coder(const ArSourceModel& model, double distortion) {
    detail::require_solver_model(model, "design_coder");
    const double rho0 = model.stationary_variance();
    if (!(distortion > 0.0) || distortion >= rho0 * (1.0 - 1e-12))
        throw std::invalid_argument("design_coder: zero-rate regime, need 0 < D < stationary variance");
    const double a = model.order() == 1 ? model.coeffs()[0] : 0.0;
    const double p = a * a * distortion + model.innovation_variance();
    const double theta = p * distortion / (p - distortion);
    CoderConfig cfg;
    cfg.step = std::sqrt(12.0 * theta);
    cfg.scaling = p / (p + theta);
    cfg.predictor = a;
    cfg.target_distortion = distortion;
    cfg.max_index = std::max(8, static_cast<int>(std::ceil(10.0 * std::sqrt(rho0 + theta) / cfg.step)));
    return cfg;
}

inline int transient_samples(const CoderConfig& cfg) {
    return static_cast<int>(std::ceil(5.0 / (1.0 - cfg.predictor)));
}

struct BitstreamStats {
    std::size_t samples = 0;            // samples contributing to the statistics
    std::size_t skipped_transient = 0;  // leading samples excluded
    double mse = 0.0;
    double entropy_rate_bits = 0.0;     // adaptive-model codelength / sample
    double prefix_rate_bits = 0.0;      // written instantaneous-code bits / sample
    std::array<double, 8> error_autocorr{};  // quantizer-noise autocorrelation, lags 1..8
    double error_input_corr = 0.0;           // corr(quantizer noise, quantizer input)
};

struct EncodeResult {
    std::vector<std::int64_t> indices;
    std::vector<std::uint8_t> bitstream;
    std::vector<double> reconstruction;    // in-loop y
    std::vector<double> quantizer_input;   // u
    std::vector<double> quantizer_noise;   // i Delta - z - u
    BitstreamStats stats;
};

namespace coderdetail {

constexpr std::size_t kHeaderSize = 64;
constexpr std::uint16_t kVersion = 1;
constexpr int kDitherPhaseBins = 16;

inline std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

template <typename T>
inline void store_le(std::uint8_t* at, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        at[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
}

template <typename T>
inline T load_le(const std::uint8_t* at) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(at[i]) << (8 * i);
    return static_cast<T>(v);
}

inline void store_f64(std::uint8_t* at, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    store_le(at, bits);
}

inline double load_f64(const std::uint8_t* at) {
    const std::uint64_t bits = load_le<std::uint64_t>(at);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline std::array<std::uint8_t, kHeaderSize> make_header(const CoderConfig& cfg, std::uint64_t samples) {
    std::array<std::uint8_t, kHeaderSize> h{};
    h[0] = 'C'; h[1] = 'R'; h[2] = 'D'; h[3] = 'L';
    store_le<std::uint16_t>(&h[4], kVersion);
    store_le<std::uint16_t>(&h[6], 0);
    store_f64(&h[8], cfg.step);
    store_f64(&h[16], cfg.scaling);
    store_f64(&h[24], cfg.predictor);
    store_le<std::uint64_t>(&h[32], cfg.dither_seed);
    store_le<std::uint64_t>(&h[40], samples);
    store_le<std::uint32_t>(&h[48], static_cast<std::uint32_t>(cfg.max_index));
    store_le<std::uint32_t>(&h[52], 0);
    store_le<std::uint64_t>(&h[56], fnv1a(h.data(), 56));
    return h;
}

/// Adaptive zero-order model with KT counts, one table per dither phase bin.
/// The dither is known on both sides, so the accumulated codelength tracks the
/// conditional entropy of the indices given the dither.
class KtConditionalModel {
public:
    KtConditionalModel(int max_index, double delta)
        : alphabet_(2 * max_index + 2), delta_(delta),
          counts_(static_cast<std::size_t>(kDitherPhaseBins),
                  std::vector<double>(static_cast<std::size_t>(2 * max_index + 2), 0.0)),
          totals_(static_cast<std::size_t>(kDitherPhaseBins), 0.0) {}

    /// Codelength in bits of `symbol` under the current counts, then updates.
    double code_and_update(int symbol, double dither) {
        const std::size_t bin = phase_bin(dither);
        auto& c = counts_[bin];
        const double p = (c[static_cast<std::size_t>(symbol)] + 0.5) /
                         (totals_[bin] + 0.5 * alphabet_);
        c[static_cast<std::size_t>(symbol)] += 1.0;
        totals_[bin] += 1.0;
        return -std::log2(p);
    }

    int alphabet() const { return alphabet_; }

private:
    std::size_t phase_bin(double dither) const {
        const double frac = dither / delta_ + 0.5;  // (0, 1]
        const int bin = static_cast<int>(frac * kDitherPhaseBins);
        return static_cast<std::size_t>(std::clamp(bin, 0, kDitherPhaseBins - 1));
    }

    int alphabet_;
    double delta_;
    std::vector<std::vector<double>> counts_;
    std::vector<double> totals_;
};

/// Instantaneous codeword for one index: zigzag + Elias gamma, with indices
/// beyond max_index sent as an escape marker followed by the excess magnitude
/// and a sign bit.  A prefix code over all of Z.
inline void write_index(BitWriter& w, std::int64_t index, int max_index) {
    if (std::llabs(index) <= max_index) {
        w.put_elias_gamma(zigzag_encode(index) + 1);
        return;
    }
    const std::uint64_t escape = static_cast<std::uint64_t>(2 * max_index + 1);
    w.put_elias_gamma(escape + 1);
    w.put_elias_gamma(static_cast<std::uint64_t>(std::llabs(index) - max_index));
    w.put_bit(index < 0);
}

inline std::size_t index_code_length(std::int64_t index, int max_index) {
    if (std::llabs(index) <= max_index) return elias_gamma_length(zigzag_encode(index) + 1);
    return elias_gamma_length(static_cast<std::uint64_t>(2 * max_index + 1) + 1) +
           elias_gamma_length(static_cast<std::uint64_t>(std::llabs(index) - max_index)) + 1;
}

/// KT symbol id for an index: zigzag value, or the escape slot.
inline int model_symbol(std::int64_t index, int max_index) {
    if (std::llabs(index) <= max_index) return static_cast<int>(zigzag_encode(index));
    return 2 * max_index + 1;
}

inline double escape_extra_bits(std::int64_t index, int max_index) {
    if (std::llabs(index) <= max_index) return 0.0;
    return static_cast<double>(
        elias_gamma_length(static_cast<std::uint64_t>(std::llabs(index) - max_index)) + 1);
}

inline double normalized_autocorr(const std::vector<double>& v, std::size_t offset, int lag) {
    const std::size_t n = v.size() - offset;
    double mean = 0.0;
    for (std::size_t k = offset; k < v.size(); ++k) mean += v[k];
    mean /= static_cast<double>(n);
    double c0 = 0.0, cl = 0.0;
    for (std::size_t k = offset; k < v.size(); ++k) c0 += (v[k] - mean) * (v[k] - mean);
    for (std::size_t k = offset; k + static_cast<std::size_t>(lag) < v.size(); ++k)
        cl += (v[k] - mean) * (v[k + static_cast<std::size_t>(lag)] - mean);
    return c0 > 0.0 ? cl / c0 : 0.0;
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y,
                          std::size_t offset) {
    double mx = 0.0, my = 0.0;
    const std::size_t n = x.size() - offset;
    for (std::size_t k = offset; k < x.size(); ++k) { mx += x[k]; my += y[k]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = offset; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace coderdetail

inline EncodeResult encode(std::span<const double> x, const CoderConfig& cfg) {
    if (!(cfg.step > 0.0) || !(cfg.scaling > 0.0) || cfg.scaling > 1.0)
        throw std::invalid_argument("encode: malformed coder config");
    const std::size_t n = x.size();
    EncodeResult out;
    out.indices.reserve(n);
    out.reconstruction.reserve(n);
    out.quantizer_input.reserve(n);
    out.quantizer_noise.reserve(n);

    BitWriter writer;
    const auto header = coderdetail::make_header(cfg, n);
    std::vector<std::uint8_t> payload_header(header.begin(), header.end());

    coderdetail::KtConditionalModel model(cfg.max_index, cfg.step);
    const std::size_t transient = std::min(n, static_cast<std::size_t>(transient_samples(cfg)));

    double y_prev = 0.0;
    double mse_acc = 0.0;
    double entropy_bits = 0.0;
    double prefix_bits = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double z = dither_sample(cfg.dither_seed, cfg.step, k);
        const double u = x[k] - cfg.predictor * y_prev;
        const std::int64_t index = std::llround((u + z) / cfg.step);
        const double y = cfg.predictor * y_prev + cfg.scaling * (index * cfg.step - z);

        coderdetail::write_index(writer, index, cfg.max_index);
        const double kt_bits =
            model.code_and_update(coderdetail::model_symbol(index, cfg.max_index), z) +
            coderdetail::escape_extra_bits(index, cfg.max_index);

        out.indices.push_back(index);
        out.reconstruction.push_back(y);
        out.quantizer_input.push_back(u);
        out.quantizer_noise.push_back(index * cfg.step - z - u);
        if (k >= transient) {
            mse_acc += (x[k] - y) * (x[k] - y);
            entropy_bits += kt_bits;
            prefix_bits += static_cast<double>(coderdetail::index_code_length(index, cfg.max_index));
        }
        y_prev = y;
    }

    payload_header.insert(payload_header.end(), writer.bytes().begin(), writer.bytes().end());
    out.bitstream = std::move(payload_header);

    BitstreamStats& stats = out.stats;
    stats.skipped_transient = transient;
    stats.samples = n - transient;
    if (stats.samples > 0) {
        stats.mse = mse_acc / static_cast<double>(stats.samples);
        stats.entropy_rate_bits = entropy_bits / static_cast<double>(stats.samples);
        stats.prefix_rate_bits = prefix_bits / static_cast<double>(stats.samples);
        for (int lag = 1; lag <= 8; ++lag)
            stats.error_autocorr[static_cast<std::size_t>(lag - 1)] =
                coderdetail::normalized_autocorr(out.quantizer_noise, transient, lag);
        stats.error_input_corr =
            coderdetail::correlation(out.quantizer_noise, out.quantizer_input, transient);
    }
    return out;
}

/// Streaming zero-delay decoder: feed bytes as they arrive, read y samples as
/// they become decodable.  The interface exposes no look-ahead; sample k is
/// emitted as soon as its codeword is complete.
class StreamingDecoder {
public:
    explicit StreamingDecoder(const CoderConfig& cfg) : cfg_(cfg) {}

    void feed(const std::uint8_t* data, std::size_t size) {
        if (!header_done_) {
            header_buf_.insert(header_buf_.end(), data, data + size);
            if (header_buf_.size() < coderdetail::kHeaderSize) return;
            parse_header();
            header_done_ = true;
            if (header_buf_.size() > coderdetail::kHeaderSize)
                reader_.feed(header_buf_.data() + coderdetail::kHeaderSize,
                             header_buf_.size() - coderdetail::kHeaderSize);
            header_buf_.clear();
        } else {
            reader_.feed(data, size);
        }
        pump();
    }

    void feed(std::span<const std::uint8_t> bytes) { feed(bytes.data(), bytes.size()); }

    bool header_parsed() const { return header_done_; }
    std::uint64_t expected_samples() const { return expected_samples_; }
    bool complete() const { return header_done_ && reconstruction_.size() == expected_samples_; }
    const std::vector<double>& reconstruction() const { return reconstruction_; }

private:
    void parse_header() {
        using namespace coderdetail;
        const std::uint8_t* h = header_buf_.data();
        if (std::memcmp(h, "CRDL", 4) != 0)
            throw std::runtime_error("decode: bad magic, not a coder bitstream");
        if (load_le<std::uint16_t>(h + 4) != kVersion)
            throw std::runtime_error("decode: unsupported bitstream version");
        if (load_le<std::uint64_t>(h + 56) != fnv1a(h, 56))
            throw std::runtime_error("decode: header checksum mismatch");
        const double delta = load_f64(h + 8);
        const double beta = load_f64(h + 16);
        const double predictor = load_f64(h + 24);
        const std::uint64_t seed = load_le<std::uint64_t>(h + 32);
        const auto max_index = static_cast<int>(load_le<std::uint32_t>(h + 48));
        if (delta != cfg_.step || beta != cfg_.scaling || predictor != cfg_.predictor ||
            seed != cfg_.dither_seed || max_index != cfg_.max_index)
            throw std::runtime_error("decode: bitstream header does not match the coder config");
        expected_samples_ = load_le<std::uint64_t>(h + 40);
    }

    void pump() {
        while (reconstruction_.size() < expected_samples_) {
            std::uint64_t code = 0;
            const std::size_t mark = reader_.bits_consumed();
            if (!reader_.get_elias_gamma(code)) return;
            std::int64_t index;
            const auto escape = static_cast<std::uint64_t>(2 * cfg_.max_index + 1);
            if (code - 1 == escape) {
                std::uint64_t excess = 0;
                bool negative = false;
                if (!reader_.get_elias_gamma(excess) || !reader_.get_bit(negative)) {
                    reader_.rewind_to(mark);
                    return;
                }
                index = static_cast<std::int64_t>(excess) + cfg_.max_index;
                if (negative) index = -index;
            } else {
                index = zigzag_decode(code - 1);
            }
            const std::uint64_t k = reconstruction_.size();
            const double z = dither_sample(cfg_.dither_seed, cfg_.step, k);
            const double y = cfg_.predictor * y_prev_ + cfg_.scaling * (index * cfg_.step - z);
            reconstruction_.push_back(y);
            y_prev_ = y;
        }
    }

    CoderConfig cfg_;
    std::vector<std::uint8_t> header_buf_;
    BitReader reader_;
    std::vector<double> reconstruction_;
    std::uint64_t expected_samples_ = 0;
    double y_prev_ = 0.0;
    bool header_done_ = false;
};

struct DecodeResult {
    std::vector<double> reconstruction;
    bool complete = false;
};

/// One-shot decode.  A truncated payload yields complete == false with every
/// fully received sample already reconstructed; header corruption or a config
/// mismatch throws.
inline DecodeResult decode(std::span<const std::uint8_t> bitstream, const CoderConfig& cfg) {
    if (bitstream.size() < coderdetail::kHeaderSize)
        throw std::runtime_error("decode: bitstream shorter than its header");
    StreamingDecoder dec(cfg);
    dec.feed(bitstream);
    return DecodeResult{dec.reconstruction(), dec.complete()};
}

/// Uniform-noise checks behind the dithered-quantizer model: the noise
/// variance must sit at step^2/12, and the noise must be white and
/// uncorrelated with the quantizer input.
inline std::vector<AuditResult> dither_noise_audit(std::span<const double> noise,
                                                   std::span<const double> input, double step) {
    if (noise.size() < 10000)
        throw std::invalid_argument("dither_noise_audit: need at least 1e4 noise samples");
    if (noise.size() != input.size())
        throw std::invalid_argument("dither_noise_audit: noise/input length mismatch");
    std::vector<double> nv(noise.begin(), noise.end());
    std::vector<double> iv(input.begin(), input.end());
    std::vector<AuditResult> results;

    double mean = 0.0;
    for (double v : nv) mean += v;
    mean /= static_cast<double>(nv.size());
    double var = 0.0;
    for (double v : nv) var += (v - mean) * (v - mean);
    var /= static_cast<double>(nv.size());
    const double target = step * step / 12.0;
    results.push_back({"dither-variance", std::abs(var / target - 1.0), 0.02, 0.0,
                       std::abs(var / target - 1.0) <= 0.02});
    for (int lag = 1; lag <= 8; ++lag) {
        const double r = coderdetail::normalized_autocorr(nv, 0, lag);
        results.push_back({"dither-whiteness-lag" + std::to_string(lag), std::abs(r), 0.02, 0.0,
                           std::abs(r) <= 0.02});
    }
    const double c = coderdetail::correlation(nv, iv, 0);
    results.push_back({"dither-input-independence", std::abs(c), 0.02, 0.0, std::abs(c) <= 0.02});
    return results;
}

/// Kraft mass of the instantaneous code: every in-range index plus the whole
/// escape subtree (the escape marker is followed by a self-contained prefix
/// code, so its subtree carries exactly the marker's mass).
inline double kraft_sum(int max_index) {
    double acc = 0.0;
    for (int i = -max_index; i <= max_index; ++i)
        acc += std::pow(2.0, -static_cast<double>(elias_gamma_length(zigzag_encode(i) + 1)));
    acc += std::pow(2.0, -static_cast<double>(
                             elias_gamma_length(static_cast<std::uint64_t>(2 * max_index + 1) + 1)));
    return acc;
}

struct EvaluationReport {
    CoderConfig config;
    BitstreamStats stats;
    double stationary_rate_at_measured_bits = 0.0;
    double entropy_gap_bits = 0.0;
    double prefix_gap_bits = 0.0;
    double entropy_gap_bound_bits = kCausalGapBoundBits + kEntropyStatSlackBits;
    double prefix_gap_bound_bits = kZeroDelayGapBoundBits;
    bool entropy_gap_ok = false;
    bool prefix_gap_ok = false;
    bool rate_lower_bound_ok = false;
};

/// Synthesizes N source samples, runs design/encode/decode, and compares both
/// measured rates against the stationary solver value at the measured
/// distortion.  The adaptive-model rate must stay within 0.254 (+0.05
/// statistical slack) bits of it and the instantaneous-code rate within 1.254
/// bits.
inline EvaluationReport evaluate(const ArSourceModel& model, double distortion, std::size_t samples,
                                 std::uint64_t seed) {
    if (samples < 10000) throw std::invalid_argument("evaluate: need at least 1e4 samples");
    const double a = model.order() == 1 ? model.coeffs()[0] : 0.0;
    const double sw = std::sqrt(model.innovation_variance());
    std::vector<double> x(samples);
    x[0] = std::sqrt(model.stationary_variance()) * gaussian_sample(seed, kSourceStreamId, 0);
    for (std::size_t k = 1; k < samples; ++k)
        x[k] = a * x[k - 1] + sw * gaussian_sample(seed, kSourceStreamId, k);

    CoderConfig cfg = design_coder(model, distortion);
    cfg.dither_seed = seed;
    EncodeResult enc = encode(x, cfg);
    const DecodeResult dec = decode(enc.bitstream, cfg);
    if (!dec.complete || dec.reconstruction != enc.reconstruction)
        throw std::runtime_error("evaluate: decoder failed to reproduce the encoder loop");

    EvaluationReport report;
    report.config = cfg;
    report.stats = enc.stats;
    report.stationary_rate_at_measured_bits = stationary_irdf(model, enc.stats.mse).rate_bits;
    report.entropy_gap_bits = enc.stats.entropy_rate_bits - report.stationary_rate_at_measured_bits;
    report.prefix_gap_bits = enc.stats.prefix_rate_bits - report.stationary_rate_at_measured_bits;
    report.entropy_gap_ok = report.entropy_gap_bits <= report.entropy_gap_bound_bits;
    report.prefix_gap_ok = report.prefix_gap_bits <= report.prefix_gap_bound_bits;
    report.rate_lower_bound_ok =
        report.stationary_rate_at_measured_bits <=
        enc.stats.entropy_rate_bits + kEntropyStatSlackBits;
    return report;
}

}  // namespace crdlab
