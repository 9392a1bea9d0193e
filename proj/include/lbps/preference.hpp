#ifndef LBPS_PREFERENCE_HPP
#define LBPS_PREFERENCE_HPP

// Thurstone-style preference between two images whose latent qualities are
// independent Gaussians, plus the fidelity loss between two probabilities.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <string>

#include "lbps/error.hpp"

namespace lbps {

/// Predictors may emit arbitrarily small sigmas; anything below this floor is
/// lifted to it before use.
inline constexpr double kSigmaFloor = 1e-6;

template <std::floating_point Scalar>
struct QualityEstimateT {
  Scalar mu{0};
  Scalar sigma{1};
};
using QualityEstimate = QualityEstimateT<double>;

template <std::floating_point Scalar>
struct PairDiffT {
  Scalar mu_ab{0};
  Scalar var_ab{1};
};
using PairDiff = PairDiffT<double>;

template <std::floating_point Scalar>
QualityEstimateT<Scalar> make_estimate(Scalar mu, Scalar sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma)) {
    throw InvalidArgument("quality estimate must be finite");
  }
  return {mu, std::max(sigma, static_cast<Scalar>(kSigmaFloor))};
}

template <std::floating_point Scalar>
void check_estimate(const QualityEstimateT<Scalar>& e) {
  if (!std::isfinite(e.mu) || !std::isfinite(e.sigma) || !(e.sigma > 0)) {
    throw InvalidArgument("quality estimate requires finite mu and sigma > 0");
  }
}

/// Standard normal CDF.
template <std::floating_point Scalar>
Scalar std_normal_cdf(Scalar z) {
  if (!std::isfinite(z)) throw InvalidArgument("std_normal_cdf: non-finite argument");
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

template <std::floating_point Scalar>
PairDiffT<Scalar> diff_distribution(const QualityEstimateT<Scalar>& a,
                                    const QualityEstimateT<Scalar>& b) {
  return {a.mu - b.mu, a.sigma * a.sigma + b.sigma * b.sigma};
}

/// Probability that `a` is preferred over `b`: Phi(mu_ab / sqrt(var_ab)).
/// Not clamped; saturates to exactly 0 or 1 in the far tails.
template <std::floating_point Scalar>
Scalar preference_probability(const QualityEstimateT<Scalar>& a,
                              const QualityEstimateT<Scalar>& b) {
  const auto d = diff_distribution(a, b);
  return std_normal_cdf(d.mu_ab / std::sqrt(d.var_ab));
}

/// Aleatoric uncertainty of a pair: the variance of the quality difference.
template <std::floating_point Scalar>
Scalar data_uncertainty(const QualityEstimateT<Scalar>& a, const QualityEstimateT<Scalar>& b) {
  return diff_distribution(a, b).var_ab;
}

/// 1 - sqrt(p q) - sqrt((1-p)(1-q)); in [0, 1], zero iff p == q.
template <std::floating_point Scalar>
Scalar fidelity_loss(Scalar p_true, Scalar p_hat) {
  const auto in_unit = [](Scalar p) { return p >= Scalar(0) && p <= Scalar(1); };
  if (!in_unit(p_true) || !in_unit(p_hat)) {
    throw InvalidArgument("fidelity_loss: probabilities must lie in [0, 1]");
  }
  const Scalar loss =
      Scalar(1) - std::sqrt(p_true * p_hat) - std::sqrt((Scalar(1) - p_true) * (Scalar(1) - p_hat));
  return std::clamp(loss, Scalar(0), Scalar(1));
}

}  // namespace lbps

#endif  // LBPS_PREFERENCE_HPP
