#include <gtest/gtest.h>

#include <wspgl1/baselines.hpp>

using namespace wspgl1;

namespace {

struct Instance {
    MeasurementOperator op;
    Vector y;
    SparseSignal x;
    double eps;
};

Instance make(Index n, Index N, Index k, std::uint64_t seed)
{
    auto op = gaussian_operator(n, N, seed);
    auto x = sparse_signal(N, k, seed ^ 0x1234ULL);
    Vector y = op.matrix() * x.values;
    const double eps = 1e-6 * y.norm();
    return {std::move(op), std::move(y), std::move(x), eps};
}

bool success(const Vector& xh, const SparseSignal& x)
{
    return (xh - x.values).norm() / x.values.norm() <= 1e-3;
}

} // namespace

TEST(Reweight, ValidWeights)
{
    Vector x(4);
    x << 0.0, 2.0, -0.5, 10.0;
    const auto w = reweight(x, 0.1);
    EXPECT_EQ(w[0], 1.0);
    for (Index i = 0; i < 4; ++i) {
        EXPECT_GT(w[i], 0.0);
        EXPECT_LE(w[i], 1.0);
    }
    EXPECT_NEAR(w[1], 0.1 / 2.1, 1e-15);
    EXPECT_LT(w[3], w[1]);
}

TEST(Irwl1, SinglePassIsSpgl1)
{
    auto inst = make(40, 120, 6, 1);
    IrwConfig cfg;
    cfg.outer_iters = 1;
    const auto a = solve_irwl1(inst.op, inst.y, inst.eps, cfg);
    const auto b = solve_spgl1(inst.op, inst.y, inst.eps);
    EXPECT_TRUE((a.x_hat.array() == b.x_hat.array()).all());
    EXPECT_EQ(a.total_products, b.total_products);
}

TEST(Irwl1, ExactRecoveryIsAFixedPoint)
{
    auto inst = make(80, 200, 5, 2);
    const auto res = solve_irwl1(inst.op, inst.y, inst.eps);
    ASSERT_TRUE(success(res.x_hat, inst.x));
    ASSERT_TRUE(res.final_weights.has_value());
    // Off-support coordinates keep the largest weight.
    for (Index i = 0; i < 200; ++i) {
        if (!std::binary_search(inst.x.support.begin(), inst.x.support.end(), i)) {
            EXPECT_GT((*res.final_weights)[i], 0.9);
        }
    }
}

TEST(Irwl1, AtLeastAsGoodAsSpgl1)
{
    int spg = 0, irw = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make(100, 400, 30, 50 + seed);
        const auto first = solve_spgl1(inst.op, inst.y, inst.eps);
        spg += success(first.x_hat, inst.x) ? 1 : 0;
        irw += success(solve_irwl1_from(inst.op, inst.y, inst.eps, first).x_hat, inst.x) ? 1 : 0;
    }
    EXPECT_GE(irw, spg);
}

TEST(Irwl1, ProductsAccumulateOverPasses)
{
    auto inst = make(40, 120, 6, 3);
    inst.op.reset_counters();
    const auto res = solve_irwl1(inst.op, inst.y, inst.eps);
    EXPECT_EQ(res.total_products, inst.op.products());
    EXPECT_EQ(res.newton_iters, static_cast<int>(res.newton_taus.size()));
    const auto first = solve_spgl1(inst.op, inst.y, inst.eps);
    EXPECT_GT(res.total_products, first.total_products);
}

TEST(IrwConfig, Validation)
{
    auto inst = make(20, 60, 3, 4);
    IrwConfig cfg;
    cfg.outer_iters = 0;
    EXPECT_THROW(solve_irwl1(inst.op, inst.y, inst.eps, cfg), ValidationError);
    cfg = {};
    cfg.delta = 0.0;
    EXPECT_THROW(solve_irwl1(inst.op, inst.y, inst.eps, cfg), ValidationError);
}
