#ifndef LBPS_TYPES_HPP
#define LBPS_TYPES_HPP

#include <compare>
#include <cstddef>

#include <Eigen/Dense>

namespace lbps {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One unordered image pair inside a reference; always i < j.
struct PairKey {
  std::size_t ref = 0;
  Index i = 0;
  Index j = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

/// Orthonormal basis (n x n-1) of the zero-sum subspace {x : sum(x) = 0}.
/// Columns are the normalized Helmert contrasts.
inline Matrix zero_sum_basis(Index n) {
  Matrix u = Matrix::Zero(n, n - 1);
  for (Index k = 1; k < n; ++k) {
    const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
    u.col(k - 1).head(k).setConstant(1.0 / norm);
    u(k, k - 1) = -static_cast<double>(k) / norm;
  }
  return u;
}

}  // namespace lbps

#endif  // LBPS_TYPES_HPP
