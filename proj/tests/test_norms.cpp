#include <gtest/gtest.h>

#include <random>

#include <wspgl1/norms.hpp>

#include "oracles.hpp"

using namespace wspgl1;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

struct RandomCase {
    Vector v;
    WeightVector w;
    double tau;
};

RandomCase random_case(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> size(1, 20);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    const int n = size(rng);
    Vector v(n), w(n);
    for (int i = 0; i < n; ++i) {
        v[i] = normal(rng);
        w[i] = unit(rng);
    }
    const double full = v.cwiseAbs().dot(w);
    std::uniform_real_distribution<double> frac(0.0, 1.2);
    return {v, WeightVector(w), frac(rng) * full};
}

} // namespace

TEST(WeightVector, RejectsOutOfRange)
{
    EXPECT_THROW(WeightVector(vec({0.5, 0.0})), NumericError);
    EXPECT_THROW(WeightVector(vec({1.5})), NumericError);
    EXPECT_THROW(WeightVector(vec({-0.1})), NumericError);
    EXPECT_NO_THROW(WeightVector(vec({1.0, 0.3})));
}

TEST(WeightVector, TwoLevel)
{
    const std::vector<Index> idx{0, 3};
    const auto w = WeightVector::two_level(5, idx, 0.3);
    EXPECT_EQ(w[0], 0.3);
    EXPECT_EQ(w[1], 1.0);
    EXPECT_EQ(w[3], 0.3);
    EXPECT_FALSE(w.all_ones());
    EXPECT_TRUE(WeightVector::ones(5).all_ones());
    const std::vector<Index> bad{5};
    EXPECT_THROW(WeightVector::two_level(5, bad, 0.3), DimensionError);
}

TEST(WeightedNorms, Examples)
{
    EXPECT_DOUBLE_EQ(weighted_l1(vec({1, -2, 3}), WeightVector::ones(3)), 6.0);
    EXPECT_DOUBLE_EQ(weighted_l1(vec({1, -2, 3}), WeightVector(vec({0.3, 1, 0.3}))), 3.2);
    EXPECT_DOUBLE_EQ(weighted_linf_dual(vec({0.3, 0.2}), WeightVector(vec({0.3, 1}))), 1.0);
    EXPECT_THROW(weighted_l1(vec({1, 2}), WeightVector::ones(3)), DimensionError);
}

TEST(WeightedNorms, DualityInequality)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (int draw = 0; draw < 200; ++draw) {
        const auto c = random_case(rng);
        Vector v(c.v.size());
        for (auto& e : v) e = normal(rng);
        const double lhs = std::abs(c.v.dot(v));
        const double rhs = weighted_l1(c.v, c.w) * weighted_linf_dual(v, c.w);
        EXPECT_LE(lhs, rhs * (1 + 1e-12));

        // u = sign(v_j) e_j / w_j at j = argmax |v_j|/w_j has unit weighted norm and attains the bound.
        Index j = 0;
        (v.cwiseAbs().cwiseQuotient(c.w.values())).maxCoeff(&j);
        Vector u = Vector::Zero(v.size());
        u[j] = (v[j] >= 0 ? 1.0 : -1.0) / c.w[j];
        EXPECT_NEAR(weighted_l1(u, c.w), 1.0, 1e-14);
        EXPECT_NEAR(u.dot(v), weighted_linf_dual(v, c.w), 1e-12);
    }
}

TEST(TopK, Examples)
{
    EXPECT_EQ(top_k_support(vec({5, -7, 1}), 2).indices, (std::vector<Index>{1, 0}));
    EXPECT_EQ(top_k_support(vec({3, 3, 0}), 1).indices, (std::vector<Index>{0}));
    EXPECT_EQ(top_k_support(vec({0, 0, 0}), 3).sorted(), (std::vector<Index>{0, 1, 2}));
    EXPECT_THROW(top_k_support(vec({1, 2}), 0), DimensionError);
    EXPECT_THROW(top_k_support(vec({1, 2}), 3), DimensionError);
}

TEST(Projection, Examples)
{
    const Vector inside = vec({0.1, -0.2});
    EXPECT_TRUE((project_l1_ball(inside, 1.0).array() == inside.array()).all());
    EXPECT_TRUE((project_l1_ball(vec({3, 1}), 0.0).array() == 0.0).all());
    const Vector p = project_l1_ball(vec({3, 1}), 2.0);
    EXPECT_NEAR(p[0], 2.0, 1e-15);
    EXPECT_NEAR(p[1], 0.0, 1e-15);
    const Vector q = project_l1_ball(vec({-3, 1}), 2.0);
    EXPECT_NEAR(q[0], -2.0, 1e-15);
}

TEST(Projection, MatchesBisectionOracle)
{
    std::mt19937_64 rng(2024);
    for (int draw = 0; draw < 1000; ++draw) {
        const auto c = random_case(rng);
        const Vector p = project_weighted_l1_ball(c.v, c.w, c.tau);
        const Vector ref = oracle::project_bisection(c.v, c.w.values(), c.tau);
        ASSERT_LE((p - ref).lpNorm<Eigen::Infinity>(), 1e-8) << "draw " << draw;
    }
}

TEST(Projection, Properties)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (int draw = 0; draw < 300; ++draw) {
        const auto c = random_case(rng);
        const Vector p = project_weighted_l1_ball(c.v, c.w, c.tau);
        // Feasible up to rounding.
        EXPECT_LE(weighted_l1(p, c.w), c.tau * (1 + 1e-12) + 1e-15);
        // Idempotent.
        const Vector pp = project_weighted_l1_ball(p, c.w, c.tau);
        EXPECT_LE((pp - p).lpNorm<Eigen::Infinity>(), 1e-12);
        // Non-expansive.
        Vector v2 = c.v;
        for (auto& e : v2) e += 0.3 * normal(rng);
        const Vector p2 = project_weighted_l1_ball(v2, c.w, c.tau);
        EXPECT_LE((p - p2).norm(), (c.v - v2).norm() * (1 + 1e-12));
        // Variational inequality against feasible points: vertices +-tau/w_i e_i.
        const Vector resid = c.v - p;
        for (Index i = 0; i < c.v.size(); ++i) {
            for (double s : {-1.0, 1.0}) {
                Vector z = Vector::Zero(c.v.size());
                z[i] = s * c.tau / c.w[i];
                EXPECT_LE(resid.dot(z - p), 1e-10 * std::max(1.0, c.v.squaredNorm()));
            }
        }
    }
}

TEST(Projection, UnweightedMatchesAllOnesBitwise)
{
    std::mt19937_64 rng(9);
    for (int draw = 0; draw < 300; ++draw) {
        const auto c = random_case(rng);
        const Vector a = project_l1_ball(c.v, c.tau);
        const Vector b = project_weighted_l1_ball(c.v, WeightVector::ones(c.v.size()), c.tau);
        ASSERT_TRUE((a.array() == b.array()).all());
    }
}

TEST(Projection, Errors)
{
    EXPECT_THROW(project_weighted_l1_ball(vec({1, 2}), WeightVector::ones(3), 1.0), DimensionError);
    EXPECT_THROW(project_l1_ball(vec({1, 2}), -1.0), NumericError);
}

TEST(NormPolicies, Agree)
{
    const Vector v = vec({1, -2, 0.5});
    const WeightVector w = WeightVector::ones(3);
    const L1Norm l1;
    const WeightedL1Norm wl1(w);
    EXPECT_EQ(l1.primal(v), wl1.primal(v));
    EXPECT_EQ(l1.dual(v), wl1.dual(v));
}
