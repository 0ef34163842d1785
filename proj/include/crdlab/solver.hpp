#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crdlab/ar_model.hpp"
#include "crdlab/joint_model.hpp"

namespace crdlab {

// ---------------------------------------------------------------------------
// Causal rate-distortion solver for scalar AR(1) Gaussian sources under
// average mean-squared error.
//
// The finite-horizon problem minimizes the per-sample rate of the sequential
// Gaussian test channel,
//
//   minimize (1/n) sum_k max(0, 0.5 log2(p_k / d_k))
//   subject to p_1 = rho_0,  p_k = a^2 d_{k-1} + sigma_w^2,
//              0 < d_k <= p_k,  (1/n) sum_k d_k <= D,
//
// where p_k is the one-step predictor error variance entering stage k and d_k
// the stage distortion.  In log coordinates the problem is convex, so a
// bisection on the average-distortion multiplier with an inner dynamic program
// attains the optimum; a coordinate polish sharpens the grid solution.
//
// The stationary value is the fixed point of the same recursion:
//
//   p* = a^2 D + sigma_w^2,   R(D) = 0.5 log2(p*/D) = 0.5 log2(a^2 + sigma_w^2/D)
//
// for D < rho_0, and zero otherwise.
// ---------------------------------------------------------------------------

struct StageAllocation {
    std::vector<double> distortions;          // d_1 .. d_n
    std::vector<double> predictor_variances;  // p_1 .. p_n
};

struct RdPoint {
    double distortion = 0.0;
    double rate_bits = 0.0;
    int horizon = 0;  // 0 marks the stationary value
    std::string method;
    std::optional<StageAllocation> allocation;
};

struct FiniteSolveOptions {
    int d_grid_points = 2048;       // log-spaced stage grid on (1e-6 p, p]
    double d_grid_floor = 1e-6;
    int state_grid_points = 401;    // predictor-variance grid in log space
    int refine_passes = 6;
    int max_bisect_iters = 200;
    double constraint_rtol = 1e-8;
    double value_iteration_tol = 1e-12;
};

namespace detail {

inline double rate_bits(double p, double d) {
    return d >= p ? 0.0 : 0.5 * std::log2(p / d);
}

inline void require_solver_model(const ArSourceModel& model, const char* op) {
    if (model.order() > 1)
        throw std::invalid_argument(std::string(op) +
                                    ": unsupported order " + std::to_string(model.order()) +
                                    " (closed-form solver covers AR(1); use the covariance and "
                                    "certificate operations for higher-order sources)");
}

}  // namespace detail

inline RdPoint stationary_irdf(const ArSourceModel& model, double distortion) {
    detail::require_solver_model(model, "stationary_irdf");
    if (!(distortion > 0.0)) throw std::invalid_argument("stationary_irdf: need D > 0");
    const double rho0 = model.stationary_variance();
    RdPoint point;
    point.distortion = distortion;
    point.horizon = 0;
    point.method = "stationary";
    if (distortion >= rho0) {
        point.rate_bits = 0.0;
        return point;
    }
    const double a = model.order() == 1 ? model.coeffs()[0] : 0.0;
    point.rate_bits = 0.5 * std::log2(a * a + model.innovation_variance() / distortion);
    return point;
}

namespace detail {

// Piecewise-linear value function over u = ln p.
struct ValueTable {
    double u_lo = 0.0, u_hi = 0.0;
    std::vector<double> values;

    double operator()(double u) const {
        if (values.size() == 1) return values[0];
        const double step = (u_hi - u_lo) / static_cast<double>(values.size() - 1);
        double x = (u - u_lo) / step;
        if (x <= 0.0) return values.front();
        if (x >= static_cast<double>(values.size() - 1)) return values.back();
        const std::size_t i = static_cast<std::size_t>(x);
        const double frac = x - static_cast<double>(i);
        return values[i] * (1.0 - frac) + values[i + 1] * frac;
    }
};

struct LambdaSolveResult {
    std::vector<double> d;
    std::vector<double> p;
    double avg_distortion = 0.0;
    double rate_bits_per_sample = 0.0;
};

class FiniteHorizonSolver {
public:
    FiniteHorizonSolver(const ArSourceModel& model, int n, const FiniteSolveOptions& opts)
        : a2_(model.order() == 1 ? model.coeffs()[0] * model.coeffs()[0] : 0.0),
          sigma2_(model.innovation_variance()), rho0_(model.stationary_variance()), n_(n),
          opts_(opts) {}

    LambdaSolveResult solve_for_multiplier(double lambda) const {
        std::vector<ValueTable> tables = build_tables(lambda);
        LambdaSolveResult r;
        r.d.resize(static_cast<std::size_t>(n_));
        r.p.resize(static_cast<std::size_t>(n_));
        double p = rho0_;
        for (int k = 1; k <= n_; ++k) {
            const ValueTable& next = table_for(tables, n_ - k);
            const double d = optimize_stage(p, lambda, n_ - k == 0 ? nullptr : &next, true);
            r.d[static_cast<std::size_t>(k - 1)] = d;
            r.p[static_cast<std::size_t>(k - 1)] = p;
            p = a2_ * d + sigma2_;
        }
        refine(lambda, r.d, r.p);
        finalize(r);
        return r;
    }

private:
    static const ValueTable& table_for(const std::vector<ValueTable>& tables, int stages_to_go) {
        const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(stages_to_go),
                                                      tables.size() - 1);
        return tables[idx];
    }

    // Backward value iteration.  The cost-to-go grows by a near-constant
    // amount per stage while its shape contracts through a^2 < 1; only the
    // shape steers the stage decisions, so iteration stops once the shape
    // settles and the converged table stands in for all earlier stages.
    std::vector<ValueTable> build_tables(double lambda) const {
        const int ns = std::max(2, opts_.state_grid_points);
        ValueTable zero;
        zero.u_lo = std::log(std::min(sigma2_, rho0_));
        zero.u_hi = std::log(rho0_) + 1e-12;
        zero.values.assign(static_cast<std::size_t>(ns), 0.0);

        std::vector<ValueTable> tables{zero};  // tables[s] = value with s stages to go
        for (int s = 1; s <= n_; ++s) {
            const ValueTable& next = tables.back();
            ValueTable cur = zero;
            double shape_change = 0.0;
            for (int i = 0; i < ns; ++i) {
                const double u = zero.u_lo + (zero.u_hi - zero.u_lo) * i / (ns - 1);
                const double p = std::exp(u);
                const double d = optimize_stage(p, lambda, s == 1 ? nullptr : &next, false);
                double value = rate_bits(p, d) + lambda * d;
                if (s > 1) value += next(std::log(a2_ * d + sigma2_));
                cur.values[static_cast<std::size_t>(i)] = value;
                shape_change = std::max(
                    shape_change,
                    std::abs((value - cur.values[0]) -
                             (next.values[static_cast<std::size_t>(i)] - next.values[0])));
            }
            tables.push_back(std::move(cur));
            if (s > 1 && shape_change < opts_.value_iteration_tol) break;
        }
        return tables;
    }

    // Stage objective at predictor variance p: rate + lambda d + V(ln p').
    double stage_cost(double p, double d, double lambda, const ValueTable* next) const {
        double c = rate_bits(p, d) + lambda * d;
        if (next) c += (*next)(std::log(a2_ * d + sigma2_));
        return c;
    }

    // Minimize the stage objective over the log-spaced d grid (the objective
    // is convex in ln d, so a slope bisection over grid indices is exact),
    // optionally polishing continuously inside the bracketing cell.
    double optimize_stage(double p, double lambda, const ValueTable* next, bool polish) const {
        const int g = std::max(8, opts_.d_grid_points);
        const double v_lo = std::log(opts_.d_grid_floor * p);
        const double v_hi = std::log(p);
        const double step = (v_hi - v_lo) / (g - 1);
        auto d_at = [&](int j) { return std::exp(v_lo + step * j); };
        auto f = [&](int j) { return stage_cost(p, d_at(j), lambda, next); };

        int lo = 0, hi = g - 1;
        while (hi - lo > 1) {
            const int mid = lo + (hi - lo) / 2;
            if (f(mid) <= f(mid + 1)) hi = mid; else lo = mid + 1;
        }
        const int best = f(lo) <= f(hi) ? lo : hi;
        if (!polish) return d_at(best);

        double bl = v_lo + step * std::max(0, best - 1);
        double bh = v_lo + step * std::min(g - 1, best + 1);
        for (int it = 0; it < 40 && bh - bl > 1e-13; ++it) {
            const double m1 = bl + (bh - bl) / 3.0;
            const double m2 = bh - (bh - bl) / 3.0;
            if (stage_cost(p, std::exp(m1), lambda, next) <= stage_cost(p, std::exp(m2), lambda, next))
                bh = m2;
            else
                bl = m1;
        }
        return std::exp((bl + bh) / 2.0);
    }

    // Coordinate polish of the multiplier objective.  Changing d_k moves the
    // stage-k rate and the stage-(k+1) predictor variance; both enter the 1-D
    // objective below, which stays convex in ln d.
    void refine(double lambda, std::vector<double>& d, std::vector<double>& p) const {
        for (int pass = 0; pass < opts_.refine_passes; ++pass) {
            for (int k = 1; k <= n_; ++k) {
                const double pk = p[static_cast<std::size_t>(k - 1)];
                auto g = [&](double dk) {
                    double c = rate_bits(pk, dk) + lambda * dk;
                    if (k < n_)
                        c += rate_bits(a2_ * dk + sigma2_, d[static_cast<std::size_t>(k)]);
                    return c;
                };
                double bl = std::log(1e-9 * pk), bh = std::log(pk);
                for (int it = 0; it < 80 && bh - bl > 1e-14; ++it) {
                    const double m1 = bl + (bh - bl) / 3.0;
                    const double m2 = bh - (bh - bl) / 3.0;
                    if (g(std::exp(m1)) <= g(std::exp(m2))) bh = m2; else bl = m1;
                }
                d[static_cast<std::size_t>(k - 1)] = std::exp((bl + bh) / 2.0);
                if (k < n_)
                    p[static_cast<std::size_t>(k)] =
                        a2_ * d[static_cast<std::size_t>(k - 1)] + sigma2_;
            }
        }
        // Clamp zero-rate stages onto the boundary d = p.
        double pk = rho0_;
        for (int k = 1; k <= n_; ++k) {
            p[static_cast<std::size_t>(k - 1)] = pk;
            d[static_cast<std::size_t>(k - 1)] = std::min(d[static_cast<std::size_t>(k - 1)], pk);
            pk = a2_ * d[static_cast<std::size_t>(k - 1)] + sigma2_;
        }
    }

    void finalize(LambdaSolveResult& r) const {
        double dist = 0.0, rate = 0.0;
        for (int k = 0; k < n_; ++k) {
            dist += r.d[static_cast<std::size_t>(k)];
            rate += rate_bits(r.p[static_cast<std::size_t>(k)], r.d[static_cast<std::size_t>(k)]);
        }
        r.avg_distortion = dist / n_;
        r.rate_bits_per_sample = rate / n_;
    }

    double a2_, sigma2_, rho0_;
    int n_;
    FiniteSolveOptions opts_;
};

}  // namespace detail

/// Finite-horizon causal rate-distortion value with its optimal stage
/// allocation.  Also reports the multiplier bracket used, so sweeps over
/// horizons can warm-start each other.
inline RdPoint finite_horizon_irdf(const ArSourceModel& model, double distortion, int n,
                                   FiniteSolveOptions opts = {}) {
    detail::require_solver_model(model, "finite_horizon_irdf");
    if (!(distortion > 0.0)) throw std::invalid_argument("finite_horizon_irdf: need D > 0");
    if (n < 1) throw std::invalid_argument("finite_horizon_irdf: need n >= 1");
    const double rho0 = model.stationary_variance();

    RdPoint point;
    point.distortion = distortion;
    point.horizon = n;
    point.method = "finite-horizon";

    StageAllocation alloc;
    if (distortion >= rho0 * (1.0 - 1e-12)) {
        alloc.distortions.assign(static_cast<std::size_t>(n), rho0);
        alloc.predictor_variances.assign(static_cast<std::size_t>(n), rho0);
        point.rate_bits = 0.0;
        point.allocation = std::move(alloc);
        return point;
    }
    if (model.order() == 0) {
        // Stages decouple: equal allocation at the budget is optimal.
        alloc.distortions.assign(static_cast<std::size_t>(n), distortion);
        alloc.predictor_variances.assign(static_cast<std::size_t>(n), rho0);
        point.rate_bits = detail::rate_bits(rho0, distortion);
        point.allocation = std::move(alloc);
        return point;
    }

    const detail::FiniteHorizonSolver solver(model, n, opts);
    double lo = 0.0, hi = 1.0 / distortion;
    double excess_lo = rho0 - distortion;  // avg distortion at lambda = 0 is rho0
    detail::LambdaSolveResult best;
    bool have_feasible = false;
    // Grow the bracket until the high side meets the budget.
    double excess_hi = 0.0;
    for (int it = 0;; ++it) {
        const detail::LambdaSolveResult r = solver.solve_for_multiplier(hi);
        excess_hi = r.avg_distortion - distortion;
        if (excess_hi <= 0.0) {
            best = r;
            have_feasible = true;
            break;
        }
        lo = hi;
        excess_lo = excess_hi;
        hi *= 2.0;
        if (it > 200) throw std::runtime_error("finite_horizon_irdf: multiplier bracket failed to close");
    }
    // Bracketing root-find on the budget excess (regula falsi with the
    // Illinois safeguard, midpoint fallback keeps it a bisection at worst).
    double weight_lo = 1.0, weight_hi = 1.0;
    for (int it = 0; it < opts.max_bisect_iters; ++it) {
        if (std::abs(best.avg_distortion - distortion) <= opts.constraint_rtol * distortion) break;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
        double mid;
        const double denom = weight_lo * excess_lo - weight_hi * excess_hi;
        if (std::abs(denom) > 0.0) {
            mid = (hi * weight_lo * excess_lo - lo * weight_hi * excess_hi) / denom;
            const double guard = 1e-3 * (hi - lo);
            mid = std::clamp(mid, lo + guard, hi - guard);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const detail::LambdaSolveResult r = solver.solve_for_multiplier(mid);
        const double excess = r.avg_distortion - distortion;
        if (excess <= 0.0) {
            hi = mid;
            excess_hi = excess;
            best = r;
            weight_hi = 1.0;
            weight_lo *= 0.5;
        } else {
            lo = mid;
            excess_lo = excess;
            weight_lo = 1.0;
            weight_hi *= 0.5;
        }
    }
    if (!have_feasible) throw std::runtime_error("finite_horizon_irdf: no feasible allocation found");

    // Any remaining budget is free rate reduction at the last stage.
    const double slack = n * (distortion - best.avg_distortion);
    if (slack > 0.0) {
        auto& dn = best.d.back();
        dn = std::min(best.p.back(), dn + slack);
    }
    double rate = 0.0, dist = 0.0;
    for (int k = 0; k < n; ++k) {
        rate += detail::rate_bits(best.p[static_cast<std::size_t>(k)], best.d[static_cast<std::size_t>(k)]);
        dist += best.d[static_cast<std::size_t>(k)];
    }
    point.rate_bits = rate / n;
    alloc.distortions = std::move(best.d);
    alloc.predictor_variances = std::move(best.p);
    point.allocation = std::move(alloc);
    point.distortion = dist / n;
    return point;
}

/// Exhaustive reference optimizer.  Stage grids are multiples of grid_step
/// (plus the d = p boundary); the last stage is filled in closed form since
/// rate is nonincreasing in its distortion.
inline RdPoint brute_force_irdf(const ArSourceModel& model, double distortion, int n,
                                double grid_step) {
    detail::require_solver_model(model, "brute_force_irdf");
    if (!(grid_step > 0.0)) throw std::invalid_argument("brute_force_irdf: grid_step must be positive");
    if (n < 1 || n > 4) throw std::invalid_argument("brute_force_irdf: n must lie in 1..4");
    if (!(distortion > 0.0)) throw std::invalid_argument("brute_force_irdf: need D > 0");

    const double a = model.order() == 1 ? model.coeffs()[0] : 0.0;
    const double a2 = a * a;
    const double sigma2 = model.innovation_variance();
    const double rho0 = model.stationary_variance();
    const double budget = n * distortion;

    double best_rate = std::numeric_limits<double>::infinity();
    std::vector<double> best_d;
    std::vector<double> d(static_cast<std::size_t>(n), 0.0);

    std::function<void(int, double, double, double)> recurse =
        [&](int stage, double p, double used, double rate_acc) {
        if (rate_acc >= best_rate) return;
        const double remaining = budget - used;
        if (remaining <= 0.0) return;
        if (stage == n) {
            const double dn = std::min(p, remaining);
            const double rate = rate_acc + detail::rate_bits(p, dn);
            if (rate < best_rate) {
                best_rate = rate;
                d[static_cast<std::size_t>(n - 1)] = dn;
                best_d = d;
            }
            return;
        }
        const double d_max = std::min(p, remaining);
        const int steps = static_cast<int>(d_max / grid_step);
        for (int m = 1; m <= steps + 1; ++m) {
            const double dk = m <= steps ? m * grid_step : d_max;
            if (m > steps && steps >= 1 && dk <= steps * grid_step) break;  // boundary already on grid
            d[static_cast<std::size_t>(stage - 1)] = dk;
            recurse(stage + 1, a2 * dk + sigma2, used + dk, rate_acc + detail::rate_bits(p, dk));
        }
    };
    recurse(1, rho0, 0.0, 0.0);

    if (!std::isfinite(best_rate))
        throw std::runtime_error("brute_force_irdf: no feasible grid point (grid_step too coarse)");

    RdPoint point;
    point.distortion = distortion;
    point.horizon = n;
    point.method = "brute-force";
    point.rate_bits = best_rate / n;
    StageAllocation alloc;
    alloc.distortions = best_d;
    double p = rho0;
    for (int k = 0; k < n; ++k) {
        alloc.predictor_variances.push_back(p);
        p = a2 * best_d[static_cast<std::size_t>(k)] + sigma2;
    }
    point.allocation = std::move(alloc);
    return point;
}

struct ConvergenceRow {
    int horizon = 0;
    double rate_bits = 0.0;
    double gap_bits = 0.0;  // |finite - stationary|
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double stationary_rate_bits = 0.0;
    bool gap_shrinks = false;   // final gap below first gap
    bool converged = false;     // final gap below tolerance
};

inline ConvergenceReport convergence_report(const ArSourceModel& model, double distortion,
                                            const std::vector<int>& horizons,
                                            double tolerance_bits = 1e-3,
                                            FiniteSolveOptions opts = {}) {
    if (horizons.empty()) throw std::invalid_argument("convergence_report: need at least one horizon");
    for (std::size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            throw std::invalid_argument("convergence_report: horizons must be increasing");
    ConvergenceReport report;
    report.stationary_rate_bits = stationary_irdf(model, distortion).rate_bits;
    for (int n : horizons) {
        const RdPoint p = finite_horizon_irdf(model, distortion, n, opts);
        report.rows.push_back({n, p.rate_bits, std::abs(p.rate_bits - report.stationary_rate_bits)});
    }
    report.gap_shrinks = report.rows.back().gap_bits < report.rows.front().gap_bits ||
                         report.rows.front().gap_bits == 0.0;
    report.converged = report.rows.back().gap_bits < tolerance_bits;
    return report;
}

struct SweepRow {
    double distortion = 0.0;
    double stationary_rate_bits = 0.0;
    double finite_rate_bits = 0.0;
    int horizon = 0;
    double gap_bits = 0.0;
};

inline std::vector<SweepRow> rd_sweep(const ArSourceModel& model, const std::vector<double>& distortions,
                                      int finite_horizon = 256, FiniteSolveOptions opts = {}) {
    for (double d : distortions)
        if (!(d > 0.0)) throw std::invalid_argument("rd_sweep: all distortions must be positive");
    std::vector<SweepRow> rows;
    rows.reserve(distortions.size());
    for (double d : distortions) {
        SweepRow row;
        row.distortion = d;
        row.stationary_rate_bits = stationary_irdf(model, d).rate_bits;
        row.finite_rate_bits = finite_horizon_irdf(model, d, finite_horizon, opts).rate_bits;
        row.horizon = finite_horizon;
        row.gap_bits = std::abs(row.finite_rate_bits - row.stationary_rate_bits);
        rows.push_back(row);
    }
    // R(D) is nonincreasing; check it on the sorted view.
    std::vector<SweepRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const SweepRow& a, const SweepRow& b) { return a.distortion < b.distortion; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].stationary_rate_bits > sorted[i - 1].stationary_rate_bits + 1e-12)
            throw std::logic_error("rd_sweep: stationary rate not monotone in distortion");
    return rows;
}

/// Joint law of the sequential test channel realizing a stage allocation:
/// x is the stationary AR(1) source and each stage applies the jointly
/// Gaussian channel with MMSE scaling,
///
///   y(k) = (1-b_k) a y(k-1) + b_k x(k) + b_k q(k),
///   theta_k = p_k d_k / (p_k - d_k),  b_k = p_k / (p_k + theta_k),
///
/// with q(k) ~ N(0, theta_k) independent.  Zero-rate stages (d_k = p_k) send
/// nothing: y(k) = a y(k-1).
inline JointProcessModel realize_allocation(const ArSourceModel& model, const StageAllocation& alloc) {
    detail::require_solver_model(model, "realize_allocation");
    const int n = static_cast<int>(alloc.distortions.size());
    if (n < 1 || alloc.predictor_variances.size() != alloc.distortions.size())
        throw std::invalid_argument("realize_allocation: malformed allocation");
    const double a = model.order() == 1 ? model.coeffs()[0] : 0.0;
    const double sigma2 = model.innovation_variance();
    const double rho0 = model.stationary_variance();

    // Basis: x(1), w(2..n), then one q per coded stage.
    std::vector<double> basis_var{rho0};
    for (int k = 2; k <= n; ++k) basis_var.push_back(sigma2);
    std::vector<int> q_slot(static_cast<std::size_t>(n), -1);
    std::vector<double> beta(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
        const double p = alloc.predictor_variances[static_cast<std::size_t>(k)];
        const double d = alloc.distortions[static_cast<std::size_t>(k)];
        if (d < p * (1.0 - 1e-9)) {
            const double theta = p * d / (p - d);
            beta[static_cast<std::size_t>(k)] = p / (p + theta);
            q_slot[static_cast<std::size_t>(k)] = static_cast<int>(basis_var.size());
            basis_var.push_back(theta);
        }
    }
    const int m = static_cast<int>(basis_var.size());
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(2 * n, m);
    for (int k = 0; k < n; ++k) {  // x rows
        if (k == 0) coeff(0, 0) = 1.0;
        else {
            coeff.row(k) = a * coeff.row(k - 1);
            coeff(k, k) += 1.0;  // w(k+1) sits in column k
        }
    }
    for (int k = 0; k < n; ++k) {  // y rows
        const double b = beta[static_cast<std::size_t>(k)];
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
        if (k > 0) row = (1.0 - b) * a * coeff.row(n + k - 1);
        row += b * coeff.row(k);
        if (q_slot[static_cast<std::size_t>(k)] >= 0) row(q_slot[static_cast<std::size_t>(k)]) += b;
        coeff.row(n + k) = row;
    }
    Eigen::VectorXd variances(m);
    for (int i = 0; i < m; ++i) variances(i) = basis_var[static_cast<std::size_t>(i)];
    Eigen::MatrixXd sigma = coeff * variances.asDiagonal() * coeff.transpose();
    return JointProcessModel(n, CovarianceMatrix(std::move(sigma)), "test-channel", model);
}

}  // namespace crdlab
