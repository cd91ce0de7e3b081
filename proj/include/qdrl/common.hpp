#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qdrl {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Real = double;
using Mat = MatX<Real>;
using Vec = VecX<Real>;
using Index = Eigen::Index;

/// Pairwise (tree) summation. Rounding depth is O(log n), and the sum of n
/// identical values is exact whenever n is a power of two — the repro module
/// relies on that to make re-evaluated means reproduce stored fitnesses.
inline Real pairwise_sum(const Eigen::Ref<const Vec>& values) {
    const Index n = values.size();
    if (n == 0) return 0.0;
    if (n == 1) return values[0];
    if (n == 2) return values[0] + values[1];
    const Index half = n / 2;
    return pairwise_sum(values.head(half)) + pairwise_sum(values.tail(n - half));
}

inline Real pairwise_mean(const Eigen::Ref<const Vec>& values) {
    if (values.size() == 0) throw std::invalid_argument("pairwise_mean: empty input");
    return pairwise_sum(values) / static_cast<Real>(values.size());
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

inline void require_finite(const Eigen::Ref<const Vec>& v, const std::string& what) {
    if (!v.allFinite()) throw std::domain_error(what + ": non-finite value");
}

}  // namespace qdrl
