#pragma once

// Weighted l1 norm, its dual, top-k support extraction and the Euclidean
// projection onto the weighted l1 ball { u : sum_i w_i |u_i| <= tau }.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linop.hpp"

namespace wspgl1 {

/// Per-coordinate weights, every entry in (0, 1].
class WeightVector {
public:
    explicit WeightVector(Vector w)
        : w_(std::move(w))
    {
        for (Index i = 0; i < w_.size(); ++i) {
            const double wi = w_[i];
            if (!(wi > 0.0 && wi <= 1.0)) {
                throw NumericError("WeightVector: entry " + std::to_string(i) + " = " + std::to_string(wi)
                                   + " outside (0, 1]");
            }
        }
    }

    static WeightVector ones(Index N) { return WeightVector(Vector::Ones(N)); }

    /// omega on `indices`, 1 elsewhere.
    static WeightVector two_level(Index N, std::span<const Index> indices, double omega)
    {
        Vector w = Vector::Ones(N);
        for (Index i : indices) {
            if (i < 0 || i >= N) {
                throw DimensionError("WeightVector::two_level: index out of range");
            }
            w[i] = omega;
        }
        return WeightVector(std::move(w));
    }

    Index size() const noexcept { return w_.size(); }
    double operator[](Index i) const noexcept { return w_[i]; }
    const Vector& values() const noexcept { return w_; }

    bool all_ones() const noexcept { return (w_.array() == 1.0).all(); }

    friend bool operator==(const WeightVector& a, const WeightVector& b)
    {
        return a.w_.size() == b.w_.size() && (a.w_.array() == b.w_.array()).all();
    }

private:
    Vector w_;
};

/// Indices of the k largest-magnitude entries, listed by decreasing magnitude.
struct SupportEstimate {
    std::vector<Index> indices;

    std::size_t size() const noexcept { return indices.size(); }

    bool contains(Index i) const
    {
        return std::find(indices.begin(), indices.end(), i) != indices.end();
    }

    std::vector<Index> sorted() const
    {
        std::vector<Index> s = indices;
        std::sort(s.begin(), s.end());
        return s;
    }
};

namespace detail {

// Weight accessors: the unweighted ball is the weighted one with a literal 1.0,
// so both produce identical floating-point results on all-ones weights.
struct UnitWeight {
    double operator()(Index) const noexcept { return 1.0; }
};

struct VectorWeight {
    const Vector* w;
    double operator()(Index i) const noexcept { return (*w)[i]; }
};

template <class Weight>
double weighted_l1_impl(const Eigen::Ref<const Vector>& u, Weight weight)
{
    double s = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
        s += weight(i) * std::abs(u[i]);
    }
    return s;
}

template <class Weight>
double weighted_linf_impl(const Eigen::Ref<const Vector>& v, Weight weight)
{
    double m = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
        m = std::max(m, std::abs(v[i]) / weight(i));
    }
    return m;
}

template <class Weight>
Vector soft_threshold(const Eigen::Ref<const Vector>& v, double theta, Weight weight)
{
    Vector u(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const double mag = std::max(std::abs(v[i]) - theta * weight(i), 0.0);
        u[i] = std::copysign(mag, v[i]);
        if (mag == 0.0) {
            u[i] = 0.0;
        }
    }
    return u;
}

// Sort-based threshold search. With breakpoints b_i = |v_i| / w_i sorted in
// decreasing order, the map theta -> sum_i w_i max(|v_i| - theta w_i, 0) is
// linear between consecutive breakpoints; walk down until the segment that
// crosses tau.
template <class Weight>
Vector project_impl(const Eigen::Ref<const Vector>& v, double tau, Weight weight)
{
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw NumericError("project_weighted_l1_ball: tau must be finite and non-negative");
    }
    const Index N = v.size();
    if (weighted_l1_impl(v, weight) <= tau) {
        return v;
    }
    if (tau == 0.0) {
        return Vector::Zero(N);
    }

    // Every theta solving the all-active linear equation is a lower bound on
    // the true threshold, so coordinates with breakpoint <= that bound stay
    // inactive and can be dropped before sorting. Repeat until nothing drops.
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(N));
    std::vector<double> breaks(static_cast<std::size_t>(N), 0.0);
    double mass_all = 0.0;
    double curv_all = 0.0;
    for (Index i = 0; i < N; ++i) {
        if (v[i] != 0.0) {
            const double wi = weight(i);
            order.push_back(i);
            breaks[static_cast<std::size_t>(i)] = std::abs(v[i]) / wi;
            mass_all += wi * std::abs(v[i]);
            curv_all += wi * wi;
        }
    }
    while (true) {
        const double bound = (mass_all - tau) / curv_all;
        const std::size_t before = order.size();
        mass_all = 0.0;
        curv_all = 0.0;
        std::erase_if(order, [&](Index i) { return breaks[static_cast<std::size_t>(i)] <= bound; });
        for (Index i : order) {
            const double wi = weight(i);
            mass_all += wi * std::abs(v[i]);
            curv_all += wi * wi;
        }
        if (order.size() == before || order.empty()) {
            break;
        }
    }
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ba = breaks[static_cast<std::size_t>(a)];
        const double bb = breaks[static_cast<std::size_t>(b)];
        return ba > bb || (ba == bb && a < b);
    });

    double mass = 0.0;   // sum of w_i |v_i| over the active prefix
    double curv = 0.0;   // sum of w_i^2 over the active prefix
    double theta = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        const Index i = order[j];
        const double wi = weight(i);
        mass += wi * std::abs(v[i]);
        curv += wi * wi;
        theta = (mass - tau) / curv;
        const double next = j + 1 < order.size() ? breaks[static_cast<std::size_t>(order[j + 1])] : 0.0;
        if (theta >= next) {
            break;
        }
    }
    theta = std::max(theta, 0.0);

    Vector u = soft_threshold(v, theta, weight);
    // Rounding may leave the result a few ulps outside the ball.
    for (int pass = 0; pass < 4; ++pass) {
        const double excess = weighted_l1_impl(u, weight) - tau;
        if (excess <= 0.0) {
            break;
        }
        double active = 0.0;
        for (Index i = 0; i < N; ++i) {
            if (u[i] != 0.0) {
                active += weight(i) * weight(i);
            }
        }
        theta += std::max(excess / active, theta * 4.0 * std::numeric_limits<double>::epsilon());
        u = soft_threshold(v, theta, weight);
    }
    return u;
}

} // namespace detail

/// sum_i w_i |u_i|
inline double weighted_l1(const Eigen::Ref<const Vector>& u, const WeightVector& w)
{
    detail::require_size(u.size(), w.size(), "weighted_l1");
    return detail::weighted_l1_impl(u, detail::VectorWeight{&w.values()});
}

/// Dual of the weighted l1 norm: max_i |v_i| / w_i.
inline double weighted_linf_dual(const Eigen::Ref<const Vector>& v, const WeightVector& w)
{
    detail::require_size(v.size(), w.size(), "weighted_linf_dual");
    return detail::weighted_linf_impl(v, detail::VectorWeight{&w.values()});
}

/// Ties go to the lowest index.
inline SupportEstimate top_k_support(const Eigen::Ref<const Vector>& u, Index k)
{
    if (k <= 0 || k > u.size()) {
        throw DimensionError("top_k_support: k=" + std::to_string(k) + " outside [1, "
                             + std::to_string(u.size()) + "]");
    }
    std::vector<Index> idx(static_cast<std::size_t>(u.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
        const double ma = std::abs(u[a]);
        const double mb = std::abs(u[b]);
        return ma > mb || (ma == mb && a < b);
    });
    idx.resize(static_cast<std::size_t>(k));
    return SupportEstimate{std::move(idx)};
}

/// argmin_u ||u - v||_2 subject to ||u||_{1,w} <= tau.
inline Vector project_weighted_l1_ball(const Eigen::Ref<const Vector>& v, const WeightVector& w, double tau)
{
    detail::require_size(v.size(), w.size(), "project_weighted_l1_ball");
    return detail::project_impl(v, tau, detail::VectorWeight{&w.values()});
}

/// Unweighted l1-ball projection (all weights exactly 1).
inline Vector project_l1_ball(const Eigen::Ref<const Vector>& v, double tau)
{
    return detail::project_impl(v, tau, detail::UnitWeight{});
}

// Norm policies consumed by the SPG solver.

/// ||.||_1 and its dual ||.||_inf.
struct L1Norm {
    double primal(const Eigen::Ref<const Vector>& u) const { return detail::weighted_l1_impl(u, detail::UnitWeight{}); }
    double dual(const Eigen::Ref<const Vector>& v) const { return detail::weighted_linf_impl(v, detail::UnitWeight{}); }
    Vector project(const Eigen::Ref<const Vector>& v, double tau) const { return project_l1_ball(v, tau); }
};

/// ||.||_{1,w} and its dual ||.||_{inf,w}. Holds a reference to the weights.
class WeightedL1Norm {
public:
    explicit WeightedL1Norm(const WeightVector& w)
        : w_(&w)
    {
    }

    double primal(const Eigen::Ref<const Vector>& u) const { return weighted_l1(u, *w_); }
    double dual(const Eigen::Ref<const Vector>& v) const { return weighted_linf_dual(v, *w_); }
    Vector project(const Eigen::Ref<const Vector>& v, double tau) const
    {
        return project_weighted_l1_ball(v, *w_, tau);
    }
    const WeightVector& weights() const noexcept { return *w_; }

private:
    const WeightVector* w_;
};

} // namespace wspgl1
