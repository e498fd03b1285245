#pragma once

// Dense measurement operators, seeded random ensembles and planted sparse
// signals.
//
// Random streams: every generator takes a 64-bit seed, passes it through
// SplitMix64 (Steele, Lea & Flood 2014) and seeds a std::mt19937_64 with the
// result. Normal variates come from std::normal_distribution<double>, so
// output is bit-identical for the same seed on the same standard library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace wspgl1 {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// SplitMix64 finalizer; also used to mix grid coordinates into seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed)
{
    return std::mt19937_64(splitmix64(seed));
}

/// Dense n x N operator A with forward/adjoint product counters.
///
/// Storage is Eigen's default column-major layout. The operator is immutable
/// after construction apart from the counters, which are plain integers: an
/// instance must not be shared between concurrently running solves.
class MeasurementOperator {
public:
    explicit MeasurementOperator(Matrix matrix)
        : matrix_(std::move(matrix))
    {
        if (matrix_.rows() <= 0 || matrix_.cols() <= 0) {
            throw DimensionError("MeasurementOperator: empty matrix");
        }
        if (matrix_.rows() > matrix_.cols()) {
            throw DimensionError("MeasurementOperator: rows (" + std::to_string(matrix_.rows())
                                 + ") exceed columns (" + std::to_string(matrix_.cols())
                                 + "); system must be underdetermined");
        }
    }

    Index rows() const noexcept { return matrix_.rows(); }
    Index cols() const noexcept { return matrix_.cols(); }
    const Matrix& matrix() const noexcept { return matrix_; }

    /// A u
    Vector apply(const Eigen::Ref<const Vector>& u) const
    {
        detail::require_size(u.size(), cols(), "apply");
        ++forward_count_;
        return matrix_ * u;
    }

    /// A^T v (real case of the Hermitian adjoint)
    Vector apply_adjoint(const Eigen::Ref<const Vector>& v) const
    {
        detail::require_size(v.size(), rows(), "apply_adjoint");
        ++adjoint_count_;
        return matrix_.transpose() * v;
    }

    std::size_t forward_count() const noexcept { return forward_count_; }
    std::size_t adjoint_count() const noexcept { return adjoint_count_; }
    std::size_t products() const noexcept { return forward_count_ + adjoint_count_; }

    void reset_counters() const noexcept
    {
        forward_count_ = 0;
        adjoint_count_ = 0;
    }

private:
    Matrix matrix_;
    mutable std::size_t forward_count_ = 0;
    mutable std::size_t adjoint_count_ = 0;
};

/// Planted k-sparse vector. `support` is sorted ascending.
struct SparseSignal {
    Vector values;
    std::vector<Index> support;
    std::uint64_t seed = 0;
};

/// y = A x + e together with the noise bound ||e||_2 <= epsilon.
struct Measurement {
    Vector y;
    double epsilon = 0.0;
};

/// i.i.d. N(0, 1/n) entries, so every column has unit expected norm.
inline MeasurementOperator gaussian_operator(Index n, Index N, std::uint64_t seed)
{
    if (n <= 0 || N <= 0 || n > N) {
        throw DimensionError("gaussian_operator: need 0 < n <= N, got n=" + std::to_string(n)
                             + ", N=" + std::to_string(N));
    }
    auto rng = make_stream(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    Matrix a(n, N);
    // Column by column so the stream order matches the storage order.
    for (Index j = 0; j < N; ++j) {
        for (Index i = 0; i < n; ++i) {
            a(i, j) = normal(rng);
        }
    }
    return MeasurementOperator(std::move(a));
}

/// Support drawn uniformly without replacement, standard normal amplitudes.
inline SparseSignal sparse_signal(Index N, Index k, std::uint64_t seed)
{
    if (N <= 0) {
        throw DimensionError("sparse_signal: N must be positive");
    }
    if (k <= 0 || k > N) {
        throw DimensionError("sparse_signal: need 0 < k <= N, got k=" + std::to_string(k)
                             + ", N=" + std::to_string(N));
    }
    auto rng = make_stream(seed);

    // Partial Fisher-Yates over the index set.
    std::vector<Index> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, N - 1);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Index> support(perm.begin(), perm.begin() + k);
    std::sort(support.begin(), support.end());

    SparseSignal signal;
    signal.values = Vector::Zero(N);
    signal.seed = seed;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index idx : support) {
        double v = 0.0;
        while (v == 0.0) {
            v = normal(rng);
        }
        signal.values[idx] = v;
    }
    signal.support = std::move(support);
    return signal;
}

/// Noiseless measurement y = A x.
inline Measurement measure(const MeasurementOperator& op, const SparseSignal& signal, double epsilon = 0.0)
{
    return Measurement{op.matrix() * signal.values, epsilon};
}

} // namespace wspgl1
