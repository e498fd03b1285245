#pragma once

// Iteratively reweighted l1 (Candes, Wakin & Boyd): a short sequence of
// weighted BPDN solves, reweighting with w_i = 1 / (|x_i| + delta).

#include <algorithm>
#include <cmath>

#include "drivers.hpp"

namespace wspgl1 {

struct IrwConfig {
    int outer_iters = 4;
    double delta = 0.1;
    DriverConfig driver;

    void validate() const
    {
        if (outer_iters <= 0) throw ValidationError("IrwConfig: outer_iters must be positive");
        if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("IrwConfig: delta must be positive");
    }
};

/// 1 / (|x_i| + delta), rescaled so the largest weight is exactly 1.
inline WeightVector reweight(const Eigen::Ref<const Vector>& x, double delta)
{
    Vector w = (x.array().abs() + delta).inverse().matrix();
    const double top = w.maxCoeff();
    w /= top;
    // Division can round the maximum just above 1.
    w = w.cwiseMin(1.0);
    return WeightVector(std::move(w));
}

/// Continues IRWL1 from an already computed unit-weight BPDN solve, which is
/// exactly its first pass. Products and iterations of that pass are counted.
inline RecoveryResult solve_irwl1_from(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y,
                                       double epsilon, RecoveryResult first_pass, const IrwConfig& cfg = {})
{
    cfg.validate();
    RecoveryResult total = std::move(first_pass);
    for (int pass = 1; pass < cfg.outer_iters; ++pass) {
        const WeightVector w = reweight(total.x_hat, cfg.delta);
        RecoveryResult step = solve_weighted_bpdn(op, y, epsilon, w, cfg.driver);
        step.newton_iters += total.newton_iters;
        step.newton_taus.insert(step.newton_taus.begin(), total.newton_taus.begin(), total.newton_taus.end());
        step.total_products += total.total_products;
        total = std::move(step);
    }
    return total;
}

/// Each outer pass is a full weighted BPDN solve from x = 0; the first pass
/// uses unit weights.
inline RecoveryResult solve_irwl1(const MeasurementOperator& op, const Eigen::Ref<const Vector>& y, double epsilon,
                                  const IrwConfig& cfg = {})
{
    cfg.validate();
    return solve_irwl1_from(op, y, epsilon, solve_spgl1(op, y, epsilon, cfg.driver), cfg);
}

} // namespace wspgl1
