#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crdlab/ar_model.hpp"
#include "crdlab/block_channel.hpp"
#include "crdlab/coder.hpp"
#include "crdlab/covariance.hpp"
#include "crdlab/report.hpp"
#include "crdlab/solver.hpp"

namespace crdlab {

// All numeric output is funneled through a 12-significant-digit round trip so
// identical runs emit byte-identical artifacts.

inline std::string format12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline double round12(double v) { return std::strtod(format12(v).c_str(), nullptr); }

inline nlohmann::json to_json(const ArSourceModel& model) {
    nlohmann::json j;
    j["type"] = "ar";
    j["coeffs"] = model.coeffs();
    j["innovation_variance"] = round12(model.innovation_variance());
    return j;
}

inline ArSourceModel ar_model_from_json(const nlohmann::json& j) {
    if (!j.contains("type") || j.at("type") != "ar")
        throw std::invalid_argument("model json: expected {\"type\":\"ar\",...}");
    return ArSourceModel(j.at("coeffs").get<std::vector<double>>(),
                         j.at("innovation_variance").get<double>());
}

inline nlohmann::json to_json(const CovarianceMatrix& sigma) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < sigma.dim(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < sigma.dim(); ++j) row.push_back(round12(sigma(i, j)));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"dim", sigma.dim()}, {"entries", std::move(rows)}};
}

inline CovarianceMatrix covariance_from_json(const nlohmann::json& j) {
    const int dim = j.at("dim").get<int>();
    const auto& rows = j.at("entries");
    if (static_cast<int>(rows.size()) != dim)
        throw std::invalid_argument("covariance json: row count does not match dim");
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != dim)
            throw std::invalid_argument("covariance json: ragged row");
        for (int k = 0; k < dim; ++k)
            m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return CovarianceMatrix(std::move(m));
}

inline nlohmann::json to_json(const BlockChannel& channel) {
    nlohmann::json gain = nlohmann::json::array();
    for (int i = 0; i < channel.n(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < channel.n(); ++j) row.push_back(round12(channel.gain()(i, j)));
        gain.push_back(std::move(row));
    }
    nlohmann::json j;
    j["n"] = channel.n();
    j["gain"] = std::move(gain);
    j["noise_cov"] = to_json(channel.noise_cov())["entries"];
    return j;
}

inline BlockChannel block_channel_from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    Eigen::MatrixXd gain(n, n), noise(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            gain(i, k) = j.at("gain")[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
            noise(i, k) =
                j.at("noise_cov")[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
        }
    return BlockChannel(std::move(gain), CovarianceMatrix(std::move(noise)));
}

inline nlohmann::json to_json(const AuditResult& r) {
    return nlohmann::json{{"check", r.check},
                          {"lhs", round12(r.lhs)},
                          {"rhs", round12(r.rhs)},
                          {"slack", round12(r.slack)},
                          {"pass", r.pass}};
}

inline nlohmann::json to_json(const std::vector<AuditResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) arr.push_back(to_json(r));
    return arr;
}

inline nlohmann::json to_json(const BitstreamStats& s) {
    nlohmann::json autocorr = nlohmann::json::array();
    for (double v : s.error_autocorr) autocorr.push_back(round12(v));
    return nlohmann::json{{"samples", s.samples},
                          {"skipped_transient", s.skipped_transient},
                          {"mse", round12(s.mse)},
                          {"entropy_rate_bits", round12(s.entropy_rate_bits)},
                          {"prefix_rate_bits", round12(s.prefix_rate_bits)},
                          {"error_autocorr", std::move(autocorr)},
                          {"error_input_corr", round12(s.error_input_corr)}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    return nlohmann::json{{"config",
                           {{"step", round12(r.config.step)},
                            {"scaling", round12(r.config.scaling)},
                            {"predictor", round12(r.config.predictor)},
                            {"target_distortion", round12(r.config.target_distortion)},
                            {"dither_seed", r.config.dither_seed},
                            {"max_index", r.config.max_index}}},
                          {"stats", to_json(r.stats)},
                          {"stationary_rate_at_measured_bits",
                           round12(r.stationary_rate_at_measured_bits)},
                          {"entropy_gap_bits", round12(r.entropy_gap_bits)},
                          {"prefix_gap_bits", round12(r.prefix_gap_bits)},
                          {"entropy_gap_bound_bits", round12(r.entropy_gap_bound_bits)},
                          {"prefix_gap_bound_bits", round12(r.prefix_gap_bound_bits)},
                          {"entropy_gap_ok", r.entropy_gap_ok},
                          {"prefix_gap_ok", r.prefix_gap_ok},
                          {"rate_lower_bound_ok", r.rate_lower_bound_ok}};
}

inline nlohmann::json to_json(const StageAllocation& alloc) {
    nlohmann::json d = nlohmann::json::array(), p = nlohmann::json::array();
    for (double v : alloc.distortions) d.push_back(round12(v));
    for (double v : alloc.predictor_variances) p.push_back(round12(v));
    return nlohmann::json{{"distortions", std::move(d)}, {"predictor_variances", std::move(p)}};
}

inline nlohmann::json to_json(const RdPoint& point) {
    nlohmann::json j{{"distortion", round12(point.distortion)},
                     {"rate_bits", round12(point.rate_bits)},
                     {"horizon", point.horizon},
                     {"method", point.method}};
    if (point.allocation) j["allocation"] = to_json(*point.allocation);
    return j;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "D,R_stationary_bits,R_finite_bits,horizon,gap_bits\n";
    for (const auto& r : rows)
        out << format12(r.distortion) << ',' << format12(r.stationary_rate_bits) << ','
            << format12(r.finite_rate_bits) << ',' << r.horizon << ',' << format12(r.gap_bits)
            << '\n';
    return out.str();
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace crdlab
