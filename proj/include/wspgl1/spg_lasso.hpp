#pragma once

// Spectral projected gradient for the (weighted) LASSO subproblem
//
//     minimize ||A u - y||_2  subject to  ||u||_{1,w} <= tau.
//
// The smooth objective handled internally is f(u) = 0.5 ||A u - y||_2^2 with
// gradient g = -A^T r. Step lengths are Barzilai-Borwein, safeguarded into
// [step_min, step_max]; the search direction d = P(x - step g) - x is
// backtracked with the Grippo-Lampariello-Lucidi nonmonotone Armijo test
// against the last `nonmonotone_memory` objective values. Every trial point
// x + alpha d is a convex combination of feasible points, so iterates never
// leave the ball, and A(x + alpha d) = A x + alpha A d costs one forward
// product per iteration regardless of the number of backtracks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linop.hpp"
#include "norms.hpp"

namespace wspgl1 {

struct SpgConfig {
    int max_iterations = 10000;
    /// Relative duality gap: gap / max(1, ||r||_2) <= optimality_tol.
    double optimality_tol = 1e-6;
    double step_min = 1e-16;
    double step_max = 1e16;
    int nonmonotone_memory = 3;
    double sufficient_decrease = 1e-4;
    /// Stop as soon as ||r||_2 <= residual_target. Zero disables the test;
    /// the root-finding drivers set it from their own epsilon.
    double residual_target = 0.0;
    /// Keep per-iteration objective and primal-norm values in the solution.
    bool record_history = false;

    void validate() const
    {
        if (max_iterations <= 0) throw ValidationError("SpgConfig: max_iterations must be positive");
        if (!(optimality_tol > 0.0)) throw ValidationError("SpgConfig: optimality_tol must be positive");
        if (!(step_min > 0.0 && step_min < step_max)) throw ValidationError("SpgConfig: need 0 < step_min < step_max");
        if (nonmonotone_memory <= 0) throw ValidationError("SpgConfig: nonmonotone_memory must be positive");
        if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
            throw ValidationError("SpgConfig: sufficient_decrease must lie in (0, 1)");
        }
        if (!(residual_target >= 0.0)) throw ValidationError("SpgConfig: residual_target must be non-negative");
    }
};

enum class SpgStatus {
    optimal,          ///< duality-gap test met
    residual_target,  ///< ||r|| dropped below cfg.residual_target
    stationary,       ///< projected gradient direction is not a descent direction
    line_search_failed,
    max_iterations,
};

inline const char* to_string(SpgStatus s) noexcept
{
    switch (s) {
    case SpgStatus::optimal: return "optimal";
    case SpgStatus::residual_target: return "residual_target";
    case SpgStatus::stationary: return "stationary";
    case SpgStatus::line_search_failed: return "line_search_failed";
    case SpgStatus::max_iterations: return "max_iterations";
    }
    return "unknown";
}

struct LassoSolution {
    Vector x;
    Vector residual;          ///< y - A x, recomputed from x on exit
    Vector adjoint_residual;  ///< A^T residual
    double tau = 0.0;
    double residual_norm = 0.0;
    double dual_lambda = 0.0;  ///< ||A^T r||_{inf,w} / ||r||_2, zero when r = 0
    double gap = 0.0;
    int iterations = 0;
    std::size_t products = 0;
    SpgStatus status = SpgStatus::max_iterations;

    /// Filled when SpgConfig::record_history is set; index 0 is the start point.
    std::vector<double> objective_history;
    std::vector<double> primal_norm_history;

    bool converged() const noexcept
    {
        return status != SpgStatus::max_iterations && status != SpgStatus::line_search_failed;
    }
};

/// ||r|| - (<y, r> - tau ||A^T r||_dual) / ||r||, from precomputed pieces.
/// Defined as zero for r = 0.
inline double duality_gap_from(double residual_norm, double y_dot_r, double tau, double dual_norm_adjoint)
{
    if (residual_norm == 0.0) {
        return 0.0;
    }
    return residual_norm - (y_dot_r - tau * dual_norm_adjoint) / residual_norm;
}

/// Duality gap of (LS_{tau,w}) at residual r. Costs one adjoint product.
inline double duality_gap(const MeasurementOperator& op, const Eigen::Ref<const Vector>& r,
                          const Eigen::Ref<const Vector>& y, const WeightVector& w, double tau)
{
    detail::require_size(y.size(), op.rows(), "duality_gap: y");
    detail::require_size(r.size(), op.rows(), "duality_gap: r");
    const double rnorm = r.norm();
    if (rnorm == 0.0) {
        return 0.0;
    }
    return duality_gap_from(rnorm, y.dot(r), tau, weighted_linf_dual(op.apply_adjoint(r), w));
}

namespace detail {

inline void require_finite(const Eigen::Ref<const Vector>& v, const char* what)
{
    if (!v.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite entries");
    }
}

inline double clamp_step(double s, const SpgConfig& cfg)
{
    return std::min(cfg.step_max, std::max(cfg.step_min, s));
}

} // namespace detail

/// Solves (LS_{tau}) for the ball described by `norm` (L1Norm or
/// WeightedL1Norm), warm-started from the projection of x0.
template <class Norm>
LassoSolution solve_lasso(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y, const Norm& norm,
                          double tau, const Eigen::Ref<const Vector>& x0, const SpgConfig& cfg)
{
    cfg.validate();
    detail::require_size(y.size(), op.rows(), "solve_lasso: y");
    detail::require_size(x0.size(), op.cols(), "solve_lasso: x0");
    detail::require_finite(y, "solve_lasso: y");
    detail::require_finite(x0, "solve_lasso: x0");
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw NumericError("solve_lasso: tau must be finite and non-negative");
    }

    const std::size_t products_before = op.products();
    const std::size_t memory = static_cast<std::size_t>(cfg.nonmonotone_memory);

    LassoSolution sol;
    sol.tau = tau;

    Vector x = norm.project(x0, tau);
    Vector r = y - op.apply(x);
    Vector g = -op.apply_adjoint(r);
    double f = 0.5 * r.squaredNorm();

    std::vector<double> window(memory, -std::numeric_limits<double>::infinity());
    window[0] = f;

    if (cfg.record_history) {
        sol.objective_history.push_back(f);
        sol.primal_norm_history.push_back(norm.primal(x));
    }

    // Initial scaling from the length of a unit projected-gradient step.
    double step = 1.0;
    {
        const double dnorm = (norm.project(x - g, tau) - x).template lpNorm<Eigen::Infinity>();
        step = dnorm < 1.0 / cfg.step_max ? cfg.step_max : detail::clamp_step(1.0 / dnorm, cfg);
    }

    int iter = 0;
    while (true) {
        const double rnorm = std::sqrt(2.0 * f);
        const double dual = norm.dual(g);
        const double gap = duality_gap_from(rnorm, y.dot(r), tau, dual);
        sol.gap = gap;

        if (rnorm <= cfg.residual_target) {
            sol.status = SpgStatus::residual_target;
            break;
        }
        if (rnorm == 0.0 || gap / std::max(1.0, rnorm) <= cfg.optimality_tol) {
            sol.status = SpgStatus::optimal;
            break;
        }
        if (iter >= cfg.max_iterations) {
            sol.status = SpgStatus::max_iterations;
            break;
        }

        const Vector d = norm.project(x - step * g, tau) - x;
        const double gtd = g.dot(d);
        if (!(gtd < 0.0)) {
            sol.status = SpgStatus::stationary;
            break;
        }
        const Vector ad = op.apply(d);
        const double f_ref = *std::max_element(window.begin(), window.end());

        double alpha = 1.0;
        Vector r_trial;
        double f_trial = 0.0;
        bool accepted = false;
        for (int backtrack = 0; backtrack < 50; ++backtrack) {
            r_trial = r - alpha * ad;
            f_trial = 0.5 * r_trial.squaredNorm();
            if (f_trial <= f_ref + cfg.sufficient_decrease * alpha * gtd) {
                accepted = true;
                break;
            }
            // Safeguarded quadratic interpolation of f along d.
            const double denom = 2.0 * (f_trial - f - alpha * gtd);
            double next = -gtd * alpha * alpha / denom;
            if (!(next >= 0.1 * alpha && next <= 0.9 * alpha)) {
                next = 0.5 * alpha;
            }
            alpha = next;
        }
        if (!accepted) {
            sol.status = SpgStatus::line_search_failed;
            break;
        }

        const Vector s = alpha * d;
        x += s;
        r = std::move(r_trial);
        f = f_trial;
        Vector g_next = -op.apply_adjoint(r);
        // For least squares, <s, g_next - g> = alpha^2 ||A d||^2.
        const double sty = s.dot(g_next - g);
        step = sty <= 0.0 ? cfg.step_max : detail::clamp_step(s.squaredNorm() / sty, cfg);
        g = std::move(g_next);

        ++iter;
        window[static_cast<std::size_t>(iter) % memory] = f;
        if (cfg.record_history) {
            sol.objective_history.push_back(f);
            sol.primal_norm_history.push_back(norm.primal(x));
        }
    }

    // Fresh residual so r = y - A x holds to rounding rather than drift.
    sol.residual = y - op.apply(x);
    sol.adjoint_residual = op.apply_adjoint(sol.residual);
    sol.residual_norm = sol.residual.norm();
    const double dual = norm.dual(sol.adjoint_residual);
    sol.dual_lambda = sol.residual_norm > 0.0 ? dual / sol.residual_norm : 0.0;
    sol.gap = duality_gap_from(sol.residual_norm, y.dot(sol.residual), tau, dual);
    sol.x = std::move(x);
    sol.iterations = iter;
    sol.products = op.products() - products_before;
    return sol;
}

/// Weighted convenience overload.
inline LassoSolution solve_lasso(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                                 const WeightVector& w, double tau, const Eigen::Ref<const Vector>& x0,
                                 const SpgConfig& cfg)
{
    detail::require_size(w.size(), op.cols(), "solve_lasso: w");
    return solve_lasso(op, y, WeightedL1Norm(w), tau, x0, cfg);
}

} // namespace wspgl1
