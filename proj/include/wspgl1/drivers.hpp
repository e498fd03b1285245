#pragma once

// Newton root finding on the Pareto curve phi(tau) = ||r_tau||_2 of the
// (weighted) LASSO family, for BPDN and its weighted variants.
//
// Every driver runs the same loop. At iteration t the weight schedule picks
// the weights from the previous iterate x^(t-1); the radius is re-based to
// tau' = ||x^(t-1)||_{1,w}; a Newton step
//
//     tau_t = tau' + (||r|| - eps) / (||A^T r||_{inf,w} / ||r||)
//
// gives the next radius; and (LS_{tau_t,w}) is solved warm-started from
// x^(t-1). When the weights change, the re-based iterate is first settled
// onto the new curve by solving (LS_{tau',w}) (see settle_after_reweight).
// The schedules differ only in how they choose w:
//
//   spgl1   all ones throughout
//   wspgl1  all ones for t = 1, then omega on the k largest entries of x^(t-1)
//   oracle  omega on a known support for every t

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linop.hpp"
#include "norms.hpp"
#include "spg_lasso.hpp"

namespace wspgl1 {

/// round(n / (2 ln(N/n))), clamped to [1, n-1].
inline Index default_support_size(Index n, Index N)
{
    if (n <= 0 || n > N) {
        throw DimensionError("default_support_size: need 0 < n <= N");
    }
    const Index hi = std::max<Index>(1, n - 1);
    const double ratio = std::log(static_cast<double>(N) / static_cast<double>(n));
    if (!(ratio > 0.0)) {
        return hi;
    }
    const double k = std::round(static_cast<double>(n) / (2.0 * ratio));
    if (!(k < static_cast<double>(hi))) {
        return hi;
    }
    return std::max<Index>(1, static_cast<Index>(k));
}

/// supp(x|_k): the nonzero entries among the k largest in magnitude. Empty
/// for x = 0, which makes the first WSPGL1 iteration unweighted.
inline SupportEstimate estimate_support(const Eigen::Ref<const Vector>& x, Index k)
{
    SupportEstimate s = top_k_support(x, k);
    std::erase_if(s.indices, [&](Index i) { return x[i] == 0.0; });
    return s;
}

struct DriverConfig {
    double omega = 0.3;
    /// Size of the support estimate; default_support_size(n, N) when unset.
    std::optional<Index> support_size;
    int max_newton_iters = 40;
    /// Root test: | ||r|| - eps | <= root_tol * max(1, ||y||).
    double root_tol = 1e-6;
    /// After a weight change, solve (LS_{tau',w}) at the re-based radius
    /// before the Newton step so the step starts on the weighted Pareto
    /// curve. With this off the loop is the bare re-base-then-step iteration,
    /// which can overshoot the weighted root.
    bool settle_after_reweight = true;
    SpgConfig spg;

    void validate(Index n) const
    {
        if (!(omega > 0.0 && omega <= 1.0)) throw ValidationError("DriverConfig: omega must lie in (0, 1]");
        if (max_newton_iters <= 0) throw ValidationError("DriverConfig: max_newton_iters must be positive");
        if (!(root_tol > 0.0)) throw ValidationError("DriverConfig: root_tol must be positive");
        if (support_size && (*support_size <= 0 || (n > 1 && *support_size >= n))) {
            throw ValidationError("DriverConfig: support_size must lie in [1, n-1]");
        }
        spg.validate();
    }

    Index support_size_for(Index n, Index N) const
    {
        return support_size ? *support_size : default_support_size(n, N);
    }
};

struct TracePoint {
    double tau = 0.0;            ///< ||x||_{1,w} of the iterate under its weights
    double residual_norm = 0.0;
    double lambda = 0.0;         ///< ||A^T r||_{inf,w} / ||r||
    bool weighted = false;       ///< weights differ from all ones
    int segment = 0;             ///< increments whenever the weight vector changes
};

struct RebaseEvent {
    double old_tau = 0.0;
    double new_tau = 0.0;
};

struct ParetoTrace {
    std::vector<TracePoint> points;
    std::vector<RebaseEvent> rebases;
};

struct RecoveryResult {
    Vector x_hat;
    SupportEstimate final_support;
    std::optional<WeightVector> final_weights;
    double residual_norm = 0.0;
    int newton_iters = 0;
    /// Radius handed to each Newton iteration's subproblem.
    std::vector<double> newton_taus;
    std::size_t total_products = 0;
    ParetoTrace trace;
    bool converged = false;
};

namespace detail {

inline double lambda_of(double dual_norm_adjoint, double residual_norm)
{
    return residual_norm > 0.0 ? dual_norm_adjoint / residual_norm : 0.0;
}

/// `schedule(t, x_prev)` returns the weights for Newton iteration t >= 1.
template <class Schedule>
RecoveryResult newton_root(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y, double epsilon,
                           const DriverConfig& cfg, Schedule&& schedule)
{
    const Index n = op.rows();
    const Index N = op.cols();
    cfg.validate(n);
    require_size(y.size(), n, "driver: y");
    require_finite(y, "driver: y");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw NumericError("driver: epsilon must be finite and non-negative");
    }

    const std::size_t products_before = op.products();
    const Index k_support = cfg.support_size_for(n, N);
    const double y_norm = y.norm();
    const double tol = cfg.root_tol * std::max(1.0, y_norm);

    RecoveryResult result;
    Vector x = Vector::Zero(N);

    if (y_norm <= epsilon) {
        // x = 0 already satisfies the constraint.
        result.x_hat = std::move(x);
        result.final_support = top_k_support(result.x_hat, k_support);
        result.residual_norm = y_norm;
        result.trace.points.push_back({0.0, y_norm, 0.0, false, 0});
        result.converged = true;
        result.total_products = op.products() - products_before;
        return result;
    }

    Vector r = y;
    Vector adj = op.apply_adjoint(r);
    double r_norm = y_norm;

    WeightVector w = schedule(1, x);
    require_size(w.size(), N, "driver: weights");
    int segment = 0;
    result.trace.points.push_back(
        {0.0, r_norm, lambda_of(weighted_linf_dual(adj, w), r_norm), !w.all_ones(), segment});

    // Bracket on the current weight segment: phi(lo) > eps, phi(hi) < eps.
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double tau_prev = 0.0;

    SpgConfig spg = cfg.spg;
    spg.residual_target = std::max(cfg.spg.residual_target, epsilon + tol);

    for (int t = 1; t <= cfg.max_newton_iters; ++t) {
        if (t > 1) {
            WeightVector next = schedule(t, x);
            require_size(next.size(), N, "driver: weights");
            if (!(next == w)) {
                w = std::move(next);
                ++segment;
                const double rebased = weighted_l1(x, w);
                result.trace.rebases.push_back({tau_prev, rebased});
                result.trace.points.push_back(
                    {rebased, r_norm, lambda_of(weighted_linf_dual(adj, w), r_norm), !w.all_ones(), segment});
                lo = rebased;
                hi = std::numeric_limits<double>::infinity();

                if (cfg.settle_after_reweight) {
                    const LassoSolution settled = solve_lasso(op, y, WeightedL1Norm(w), rebased, x, spg);
                    x = settled.x;
                    r = settled.residual;
                    adj = settled.adjoint_residual;
                    r_norm = settled.residual_norm;
                    result.trace.points.push_back(
                        {weighted_l1(x, w), r_norm, settled.dual_lambda, !w.all_ones(), segment});
                    if (std::abs(r_norm - epsilon) <= tol) {
                        result.converged = true;
                        break;
                    }
                }
            }
        }

        const double tau_base = weighted_l1(x, w);
        const double dual = weighted_linf_dual(adj, w);
        if (!(dual > 0.0)) {
            break;  // A^T r = 0 with r != 0: phi cannot decrease further
        }
        double tau = tau_base + (r_norm - epsilon) / (dual / r_norm);
        if (std::isfinite(hi) && !(tau > lo && tau < hi)) {
            tau = 0.5 * (lo + hi);
        }
        if (!(tau >= 0.0) || !std::isfinite(tau)) {
            break;
        }

        result.newton_taus.push_back(tau);
        const LassoSolution sol = solve_lasso(op, y, WeightedL1Norm(w), tau, x, spg);
        result.newton_iters = t;

        x = sol.x;
        r = sol.residual;
        adj = sol.adjoint_residual;
        r_norm = sol.residual_norm;
        result.trace.points.push_back({weighted_l1(x, w), r_norm, sol.dual_lambda, !w.all_ones(), segment});

        if (std::abs(r_norm - epsilon) <= tol) {
            result.converged = true;
            break;
        }
        if (r_norm > epsilon) {
            lo = std::max(lo, tau);
        } else {
            hi = std::min(hi, tau);
        }
        if (std::abs(tau - tau_prev) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, tau)
            && t > 1) {
            break;  // stalled
        }
        tau_prev = tau;
    }

    result.x_hat = std::move(x);
    result.final_support = top_k_support(result.x_hat, k_support);
    result.final_weights = std::move(w);
    result.residual_norm = r_norm;
    result.total_products = op.products() - products_before;
    return result;
}

} // namespace detail

/// BPDN: minimize ||u||_1 subject to ||A u - y||_2 <= epsilon.
inline RecoveryResult solve_spgl1(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y, double epsilon,
                                  const DriverConfig& cfg = {})
{
    const Index N = op.cols();
    return detail::newton_root(op, y, epsilon, cfg, [N](int, const Vector&) { return WeightVector::ones(N); });
}

/// Weighted LASSO subproblems with a support estimate refreshed every Newton
/// iteration from the current iterate.
inline RecoveryResult solve_wspgl1(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y, double epsilon,
                                   const DriverConfig& cfg = {})
{
    const Index N = op.cols();
    const Index k = cfg.support_size_for(op.rows(), N);
    const double omega = cfg.omega;
    return detail::newton_root(op, y, epsilon, cfg, [N, k, omega](int t, const Vector& x_prev) {
        if (t == 1) {
            return WeightVector::ones(N);
        }
        return WeightVector::two_level(N, estimate_support(x_prev, k).indices, omega);
    });
}

/// Fixed weights omega on `support`, 1 elsewhere, for every iteration.
inline RecoveryResult solve_oracle_weighted(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                                            double epsilon, std::span<const Index> support,
                                            const DriverConfig& cfg = {})
{
    const WeightVector w = WeightVector::two_level(op.cols(), support, cfg.omega);
    return detail::newton_root(op, y, epsilon, cfg, [&w](int, const Vector&) { return w; });
}

/// BPDN with arbitrary fixed weights.
inline RecoveryResult solve_weighted_bpdn(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                                          double epsilon, const WeightVector& w, const DriverConfig& cfg = {})
{
    return detail::newton_root(op, y, epsilon, cfg, [&w](int, const Vector&) { return w; });
}

/// Samples (tau, phi(tau), lambda(tau)) on an increasing grid, warm-starting
/// each solve from the previous one.
inline ParetoTrace pareto_phi(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                              const WeightVector& w, std::span<const double> tau_grid, const SpgConfig& cfg)
{
    detail::require_size(w.size(), op.cols(), "pareto_phi: w");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] >= 0.0) || (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))) {
            throw ValidationError("pareto_phi: tau grid must be non-negative and increasing");
        }
    }
    ParetoTrace trace;
    Vector x = Vector::Zero(op.cols());
    for (double tau : tau_grid) {
        const LassoSolution sol = solve_lasso(op, y, w, tau, x, cfg);
        trace.points.push_back({tau, sol.residual_norm, sol.dual_lambda, !w.all_ones(), 0});
        x = sol.x;
    }
    return trace;
}

} // namespace wspgl1
