// Acceptance suite: every release criterion, one pass/fail line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "crdlab/audits.hpp"
#include "crdlab/certificates.hpp"
#include "crdlab/coder.hpp"
#include "crdlab/constructions.hpp"
#include "crdlab/json_io.hpp"
#include "crdlab/solver.hpp"
#include "crdlab/stationary_models.hpp"

using namespace crdlab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d %s: %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return format12(v); }

// 1. Operational gap bounds at the pinned design point.
void criterion_gap_bounds() {
    const auto t0 = std::chrono::steady_clock::now();
    const EvaluationReport rep = evaluate(ArSourceModel({0.9}, 0.19), 0.1, 200000, 7);
    const double elapsed = seconds_since(t0);
    const bool pass = rep.entropy_gap_ok && rep.prefix_gap_ok && elapsed < 10.0;
    report(1, pass,
           "coder gaps at (a=0.9, sw2=0.19, D=0.1), N=2e5, seed 7: entropy gap " +
               fmt(rep.entropy_gap_bits) + " <= 0.304, prefix gap " + fmt(rep.prefix_gap_bits) +
               " <= 1.254, " + fmt(elapsed) + " s < 10 s");
}

// 2. Solver correctness: closed form plus ten pinned reference queries.
void criterion_solver_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    const double stationary = stationary_irdf(ArSourceModel({0.9}, 0.19), 0.1).rate_bits;
    const double closed_form = 0.5 * std::log2(2.71);
    bool pass = std::abs(stationary - closed_form) < 1e-5;

    struct Query { double a, s2, d; int n; };
    const std::vector<Query> queries = {
        {0.9, 0.19, 0.1, 1},  {0.9, 0.19, 0.1, 2},  {0.9, 0.19, 0.1, 3}, {0.9, 0.19, 0.25, 3},
        {0.5, 0.75, 0.1, 3},  {0.5, 0.75, 0.3, 2},  {0.0, 1.0, 0.25, 3}, {-0.7, 0.51, 0.2, 3},
        {0.9, 0.19, 0.5, 2},  {0.8, 0.36, 0.15, 3}};
    double worst = 0.0;
    for (const auto& q : queries) {
        const ArSourceModel m(q.a == 0.0 ? std::vector<double>{} : std::vector<double>{q.a}, q.s2);
        const double brute = brute_force_irdf(m, q.d, q.n, 1e-3).rate_bits;
        const double fine = finite_horizon_irdf(m, q.d, q.n).rate_bits;
        worst = std::max(worst, std::abs(brute - fine));
    }
    pass = pass && worst <= 5e-3;
    const double elapsed = seconds_since(t0);
    pass = pass && elapsed < 60.0;
    report(2, pass,
           "stationary value " + fmt(stationary) + " vs 0.5*log2(2.71) = " + fmt(closed_form) +
               " (<1e-5), worst |finite - brute| over 10 queries " + fmt(worst) + " <= 5e-3, " +
               fmt(elapsed) + " s < 60 s");
}

// 3. Finite-horizon values converge to the stationary value.
void criterion_convergence() {
    bool pass = true;
    std::ostringstream detail;
    for (double a : {0.5, 0.9}) {
        for (double d : {0.05, 0.1}) {
            const ArSourceModel m({a}, 1.0 - a * a);
            const ConvergenceReport r = convergence_report(m, d, {4, 16, 64, 256, 1024}, 1e-3);
            bool decreasing = true;
            for (std::size_t i = 1; i < r.rows.size(); ++i)
                decreasing = decreasing && r.rows[i].gap_bits < r.rows[i - 1].gap_bits;
            pass = pass && r.converged && decreasing;
            detail << "a=" << a << ",D=" << d << ": gap(1024)=" << fmt(r.rows.back().gap_bits)
                   << (decreasing ? " dec " : " NOT-DECREASING ");
        }
    }
    report(3, pass, "|R_1024 - R_stationary| < 1e-3 with shrinking gaps: " + detail.str());
}

// 4. Construction suite: replication identities, mixture stationarity, the
// conditional-information window bound, and the concatenation gap.
void criterion_constructions() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::ostringstream detail;

    {
        const ArSourceModel m({0.9}, 0.19);
        Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(4, 4);
        for (int i = 1; i < 4; ++i) gain(i, i - 1) = 0.4;
        const BlockChannel ch(gain, CovarianceMatrix(0.25 * Eigen::MatrixXd::Identity(4, 4)));
        const BlockIdentityReport idr = verify_block_identities(replicate_blocks(m, ch, 8));
        pass = pass && idr.equality_residual <= 1e-9 && idr.worst_superadditivity_slack <= 1e-9;
        detail << "block-mi equality " << fmt(idr.equality_residual) << ", superadditivity slack "
               << fmt(idr.worst_superadditivity_slack);
    }
    {
        const ArSourceModel ar2({0.5, -0.3}, 1.0);
        Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(4, 4);
        for (int i = 1; i < 4; ++i) gain(i, i - 1) = 0.4;
        const BlockChannel ch(gain, CovarianceMatrix(0.25 * Eigen::MatrixXd::Identity(4, 4)));
        const ReplicatedModel rep = replicate_blocks(ar2, ch, 18);
        const ShiftMixtureModel mix = shift_stationarize(rep, 64, 1);

        const StationarityReport st = mixture_stationarity_audit(mix, 4, 1e-9);
        pass = pass && st.holds;
        detail << ", mixture stationarity " << fmt(st.residual);

        bool window_bound = true;
        for (int mlen : {4, 8, 16, 64})
            window_bound = window_bound && mixture_conditional_mi(mix, mlen).pass;
        pass = pass && window_bound;
        detail << ", window bound m in {4,8,16,64} " << (window_bound ? "ok" : "violated");

        const ConcatenatedModel cat =
            concatenate_first_samples(mix, BlockChannel::identity_plus_noise(1, 1.0), 2);
        const auto rows = qjs_gap_audit(cat, {8, 16, 32, 64});
        bool decreasing = true;
        for (std::size_t i = 1; i < rows.size(); ++i)
            decreasing = decreasing && rows[i].gap_bits < rows[i - 1].gap_bits;
        pass = pass && decreasing && rows.back().gap_bits < 0.02;
        detail << ", concat gap(64) " << fmt(rows.back().gap_bits) << " < 0.02"
               << (decreasing ? " dec" : " NOT-DECREASING");
    }
    const double elapsed = seconds_since(t0);
    pass = pass && elapsed < 30.0;
    report(4, pass, detail.str() + ", " + fmt(elapsed) + " s < 30 s");
}

// 5. Stationarity/causality certificates across the three regimes.
void criterion_certificates() {
    const JointProcessModel ar1_pair =
        stationary_filter_model(ArSourceModel({0.9}, 0.19), {1.0, 0.5}, 0.4, 6);
    const GeometricSourceCertificate geo = geometric_source_certificate(ar1_pair);

    const ArSourceModel ar2({0.5, -0.3}, 1.0);
    const GeometricSourceCertificate inconclusive =
        geometric_source_certificate(stationary_filter_model(ar2, {1.0}, 0.3, 6));
    const GeometricSourceCertificate violated =
        geometric_source_certificate(stationary_filter_model(ar2, {1.0, 0.7}, 0.3, 6));

    const bool pass =
        geo.status == GeometricSourceCertificate::Status::Geometric &&
        std::abs(geo.zeta - 0.9) < 1e-6 &&
        inconclusive.status == GeometricSourceCertificate::Status::MemorylessInconclusive &&
        violated.status == GeometricSourceCertificate::Status::Violated &&
        violated.geometric_residual > 0.01;
    report(5, pass,
           std::string("first-order pair ") + to_string(geo.status) + " with |zeta - 0.9| = " +
               fmt(std::abs(geo.zeta - 0.9)) + ", memoryless second-order " +
               to_string(inconclusive.status) + ", mixing second-order " + to_string(violated.status) +
               " with residual " + fmt(violated.geometric_residual) + " > 0.01");
}

// 6. Information-identity property tests on randomized models.
void criterion_information_properties() {
    const std::vector<AuditResult> results = gauss_core_suite(2026, 100);
    double split = 0.0, chain = 0.0, monotone = 0.0;
    bool pass = true;
    for (const auto& r : results) {
        if (r.check == "mi-split-pair-identity") split = r.lhs;
        if (r.check == "mi-chain-rule") chain = r.lhs;
        if (r.check == "mi-monotonicity") monotone = r.lhs;
        pass = pass && r.pass;
    }
    pass = pass && split < 1e-8 && chain < 1e-8 && monotone <= 1e-9;
    report(6, pass,
           "split-pair identity err " + fmt(split) + " < 1e-8, chain-rule err " + fmt(chain) +
               " < 1e-8, monotonicity slack " + fmt(monotone) + " <= 1e-9 on 100 random models");
}

// 7. Dither physics at the design point.
void criterion_dither_physics() {
    const ArSourceModel m({0.9}, 0.19);
    CoderConfig cfg = design_coder(m, 0.1);
    cfg.dither_seed = 7;
    std::vector<double> x(200000);
    const double sw = std::sqrt(0.19);
    x[0] = gaussian_sample(7, kSourceStreamId, 0);
    for (std::size_t k = 1; k < x.size(); ++k)
        x[k] = 0.9 * x[k - 1] + sw * gaussian_sample(7, kSourceStreamId, k);
    const EncodeResult enc = encode(x, cfg);
    const auto results = dither_noise_audit(enc.quantizer_noise, enc.quantizer_input, cfg.step);
    bool pass = true;
    double var_err = 0.0, worst_corr = 0.0;
    for (const auto& r : results) {
        pass = pass && r.pass;
        if (r.check == "dither-variance") var_err = r.lhs;
        else worst_corr = std::max(worst_corr, r.lhs);
    }
    report(7, pass,
           "noise variance within " + fmt(var_err) + " of step^2/12 (<= 0.02), worst |corr| " +
               fmt(worst_corr) + " < 0.02 at N=2e5");
}

// 8. CLI determinism: identical configs give byte-identical artifacts.
void criterion_cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "crdlab_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path model = dir / "m.json";
    write_text_file(model.string(), to_json(ArSourceModel({0.9}, 0.19)).dump(2) + "\n");

    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"solve", "solve --model " + model.string() + " --distortion 0.1 --horizon 2,4,8"},
        {"sweep", "sweep --model " + model.string() + " --distortion 0.05,0.1,0.2 --horizon 8"},
        {"audit", "audit --suite gauss-core --seed 7"},
        {"code", "code --model " + model.string() + " --distortion 0.1 --samples 20000 --seed 7"},
        {"certify", "certify --model " + model.string()},
    };
    bool pass = true;
    std::string flaky;
    for (const auto& [name, args] : cmds) {
        const fs::path out1 = dir / (name + ".1"), out2 = dir / (name + ".2");
        auto run = [&](const fs::path& out) {
            const std::string cmd = std::string(CRDLAB_CLI_PATH) + " " + args + " --out " +
                                    out.string() + " >/dev/null 2>/dev/null";
            return WEXITSTATUS(std::system(cmd.c_str()));
        };
        const int rc1 = run(out1), rc2 = run(out2);
        auto slurp = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const bool same = rc1 == 0 && rc2 == 0 && !slurp(out1).empty() && slurp(out1) == slurp(out2);
        if (!same) flaky += name + " ";
        pass = pass && same;
    }
    fs::remove_all(dir);
    report(8, pass,
           pass ? "two runs of solve/sweep/audit/code/certify produced byte-identical artifacts"
                : "non-identical or failing commands: " + flaky);
}

}  // namespace

int main() {
    criterion_gap_bounds();
    criterion_solver_correctness();
    criterion_convergence();
    criterion_constructions();
    criterion_certificates();
    criterion_information_properties();
    criterion_dither_physics();
    criterion_cli_determinism();
    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                failures);
    return failures;
}
