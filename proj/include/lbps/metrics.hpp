#ifndef LBPS_METRICS_HPP
#define LBPS_METRICS_HPP

#include "lbps/types.hpp"

namespace lbps {

/// Pearson linear correlation. Needs equal lengths >= 3 and non-constant inputs.
double plcc(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// Spearman rank-order correlation; ties receive their average rank.
double srocc(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

double rmse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

/// 1-based fractional ranks (ties averaged).
Vector fractional_ranks(const Eigen::Ref<const Vector>& x);

}  // namespace lbps

#endif  // LBPS_METRICS_HPP
