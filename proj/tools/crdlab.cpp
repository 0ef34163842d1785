// crdlab: batch front end for the causal rate-distortion laboratory.
//
// Subcommands:
//   solve    stationary and finite-horizon causal rate-distortion values
//   sweep    rate-distortion curve over a distortion list (CSV)
//   audit    named invariant suites, exit 1 on any failure
//   code     run the zero-delay dithered predictive coder and report rates
//   certify  stationarity/causality certificates for a model or joint law
//
// Exit codes: 0 success, 1 audit/assertion failure, 2 usage or config error.

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crdlab/audits.hpp"
#include "crdlab/certificates.hpp"
#include "crdlab/coder.hpp"
#include "crdlab/json_io.hpp"
#include "crdlab/solver.hpp"
#include "crdlab/stationary_models.hpp"

namespace {

using namespace crdlab;

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        values.push_back(std::stod(csv.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (values.empty()) throw std::invalid_argument("empty numeric list");
    return values;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> values;
    for (double v : parse_double_list(csv)) values.push_back(static_cast<int>(v));
    return values;
}

int thread_budget() {
    if (const char* env = std::getenv("CRDLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return std::min(v, 64);
    }
    return 1;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_text_file(out_path, content);
}

int cmd_solve(const std::string& model_path, double distortion, const std::string& horizons_csv,
              const std::string& out_path) {
    const ArSourceModel model = ar_model_from_json(load_json_file(model_path));
    const std::vector<int> horizons = parse_int_list(horizons_csv);
    const RdPoint stationary = stationary_irdf(model, distortion);
    std::cout << "D=" << format12(distortion) << "  R_stationary=" << format12(stationary.rate_bits)
              << " bits/sample\n";
    std::cout << "horizon  R_finite_bits  gap_bits\n";
    nlohmann::json points = nlohmann::json::array();
    FiniteSolveOptions opts;
    for (int n : horizons) {
        const RdPoint p = finite_horizon_irdf(model, distortion, n, opts);
        std::cout << n << "  " << format12(p.rate_bits) << "  "
                  << format12(std::abs(p.rate_bits - stationary.rate_bits)) << "\n";
        points.push_back(to_json(p));
    }
    if (!out_path.empty()) {
        nlohmann::json j{{"model", to_json(model)},
                         {"stationary", to_json(stationary)},
                         {"finite", std::move(points)}};
        write_text_file(out_path, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_sweep(const std::string& model_path, const std::string& distortions_csv, int horizon,
              const std::string& out_path) {
    const ArSourceModel model = ar_model_from_json(load_json_file(model_path));
    const std::vector<double> distortions = parse_double_list(distortions_csv);

    std::vector<SweepRow> rows(distortions.size());
    const int threads = std::min<std::size_t>(thread_budget(), distortions.size());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < distortions.size();
                 i = cursor.fetch_add(1)) {
                const std::vector<SweepRow> one = rd_sweep(model, {distortions[i]}, horizon);
                rows[i] = one.front();
            }
        });
    for (auto& th : pool) th.join();

    // Monotonicity across the whole sweep (rd_sweep checked each point alone).
    std::vector<SweepRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const SweepRow& a, const SweepRow& b) { return a.distortion < b.distortion; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].stationary_rate_bits > sorted[i - 1].stationary_rate_bits + 1e-12)
            throw std::logic_error("sweep: stationary rate not monotone in distortion");

    emit(out_path, sweep_csv(rows));
    return 0;
}

int cmd_audit(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
    const std::vector<AuditResult> results = run_suite(suite, seed);
    const nlohmann::json j = to_json(results);
    emit(out_path, j.dump(2) + "\n");
    if (!out_path.empty()) {
        for (const auto& r : results)
            if (!r.pass)
                std::cerr << "audit failure: " << r.check << " lhs=" << format12(r.lhs)
                          << " rhs=" << format12(r.rhs) << "\n";
    }
    return all_pass(results) ? 0 : 1;
}

int cmd_code(const std::string& model_path, double distortion, std::size_t samples,
             std::uint64_t seed, const std::string& out_path) {
    const ArSourceModel model = ar_model_from_json(load_json_file(model_path));
    const EvaluationReport report = evaluate(model, distortion, samples, seed);
    const nlohmann::json j = to_json(report);
    emit(out_path, j.dump(2) + "\n");
    if (!out_path.empty())
        std::cout << "mse=" << format12(report.stats.mse)
                  << " entropy_rate=" << format12(report.stats.entropy_rate_bits)
                  << " prefix_rate=" << format12(report.stats.prefix_rate_bits)
                  << " entropy_gap=" << format12(report.entropy_gap_bits)
                  << " prefix_gap=" << format12(report.prefix_gap_bits) << "\n";
    return report.entropy_gap_ok && report.prefix_gap_ok && report.rate_lower_bound_ok ? 0 : 1;
}

int cmd_certify(const std::string& model_path, double tol, const std::string& out_path) {
    const nlohmann::json input = load_json_file(model_path);
    nlohmann::json j;
    bool ok = true;

    if (input.contains("type")) {
        const ArSourceModel model = ar_model_from_json(input);
        const int declared = static_cast<int>(model.order());
        const int detected = markov_order(model, 1e-9);
        j["declared_order"] = declared;
        j["detected_order"] = detected;
        ok = ok && detected == declared;

        const JointProcessModel memoryless = stationary_filter_model(model, {1.0}, 0.25, 6);
        bool causal = true;
        for (const auto& cert : causality_audit(memoryless, CausalityVariant::Short, tol))
            causal = causal && cert.holds;
        j["memoryless_channel_causal"] = causal;
        ok = ok && causal;
        j["memoryless_certificate"] = to_string(geometric_source_certificate(memoryless, tol).status);

        if (declared >= 1) {
            const JointProcessModel filtered = stationary_filter_model(model, {1.0, 0.5}, 0.4, 6);
            const GeometricSourceCertificate cert = geometric_source_certificate(filtered, tol);
            j["filter_certificate"] = to_string(cert.status);
            if (cert.status != GeometricSourceCertificate::Status::MemorylessInconclusive) {
                j["filter_zeta"] = round12(cert.zeta);
                j["filter_geometric_residual"] = round12(cert.geometric_residual);
            }
            // A first-order source must certify geometric; higher order must not.
            ok = ok && ((declared <= 1) ==
                        (cert.status == GeometricSourceCertificate::Status::Geometric));
        }
    } else {
        const int horizon = input.at("horizon").get<int>();
        const CovarianceMatrix sigma = covariance_from_json(input.at("sigma"));
        const JointProcessModel m(horizon, sigma, "certify-input");
        bool causal = true;
        double worst = 0.0;
        for (const auto& cert : causality_audit(m, CausalityVariant::Short, tol)) {
            causal = causal && cert.holds;
            worst = std::max(worst, cert.residual);
        }
        j["causality_holds"] = causal;
        j["causality_residual"] = round12(worst);
        const StationarityReport st = joint_stationarity_audit(window_blocks(m, 2), tol);
        j["stationarity_holds"] = st.holds;
        j["stationarity_residual"] = round12(st.residual);
        if (horizon >= 3 && st.holds) {
            const GeometricSourceCertificate cert = geometric_source_certificate(m, tol);
            j["certificate"] = to_string(cert.status);
            if (cert.status != GeometricSourceCertificate::Status::MemorylessInconclusive) {
                j["zeta"] = round12(cert.zeta);
                j["geometric_residual"] = round12(cert.geometric_residual);
            }
        }
        ok = causal && st.holds;
    }
    j["pass"] = ok;
    emit(out_path, j.dump(2) + "\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal rate-distortion laboratory"};
    app.require_subcommand(1);

    std::string model_path, out_path, horizons_csv = "4,16,64,256,1024";
    std::string distortions_csv, suite = "all";
    double distortion = 0.1, tol = kDefaultCertificateTol;
    int horizon = 256;
    std::size_t samples = 200000;
    std::uint64_t seed = 0;

    CLI::App* solve = app.add_subcommand("solve", "stationary and finite-horizon rate values");
    solve->add_option("--model", model_path, "AR model JSON file")->required();
    solve->add_option("--distortion", distortion, "average MSE budget")->required();
    solve->add_option("--horizon", horizons_csv, "comma-separated horizons");
    solve->add_option("--out", out_path, "write JSON artifact here");

    CLI::App* sweep = app.add_subcommand("sweep", "rate-distortion sweep (CSV)");
    sweep->add_option("--model", model_path, "AR model JSON file")->required();
    sweep->add_option("--distortion", distortions_csv, "comma-separated distortions")->required();
    sweep->add_option("--horizon", horizon, "finite-horizon length per point");
    sweep->add_option("--out", out_path, "write CSV here");

    CLI::App* audit = app.add_subcommand("audit", "run an invariant suite");
    audit->add_option("--suite", suite, "gauss-core|constructions|solver|coder|all");
    audit->add_option("--seed", seed, "suite seed");
    audit->add_option("--out", out_path, "write JSON results here");

    CLI::App* code = app.add_subcommand("code", "run the zero-delay dithered predictive coder");
    code->add_option("--model", model_path, "AR model JSON file")->required();
    code->add_option("--distortion", distortion, "target distortion")->required();
    code->add_option("--samples", samples, "source samples (>= 1e4)");
    code->add_option("--seed", seed, "source and dither seed");
    code->add_option("--out", out_path, "write stats JSON here");

    CLI::App* certify = app.add_subcommand("certify", "stationarity/causality certificates");
    certify->add_option("--model", model_path, "AR model or joint-law JSON file")->required();
    certify->add_option("--tol", tol, "certificate tolerance");
    certify->add_option("--out", out_path, "write JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(model_path, distortion, horizons_csv, out_path);
        if (sweep->parsed()) return cmd_sweep(model_path, distortions_csv, horizon, out_path);
        if (audit->parsed()) return cmd_audit(suite, seed, out_path);
        if (code->parsed()) return cmd_code(model_path, distortion, samples, seed, out_path);
        if (certify->parsed()) return cmd_certify(model_path, tol, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
