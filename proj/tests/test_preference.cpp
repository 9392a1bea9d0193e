#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lbps/preference.hpp"
#include "lbps/rng.hpp"
#include "oracles/erf_series.hpp"

using namespace lbps;

TEST(Phi, MatchesSeriesOracle) {
  for (int k = -60; k <= 60; ++k) {
    const double z = k / 10.0;
    EXPECT_NEAR(std_normal_cdf(z), static_cast<double>(oracle::phi(z)), 1e-7) << "z=" << z;
  }
}

TEST(Phi, OracleAnchors) {
  // The oracle itself against tabulated values.
  EXPECT_NEAR(static_cast<double>(oracle::phi(1.0L)), 0.8413447461, 1e-10);
  EXPECT_NEAR(static_cast<double>(oracle::phi(1.0L / std::sqrt(2.0L))), 0.7602499389, 1e-10);
  EXPECT_NEAR(static_cast<double>(oracle::phi(-4.5L)), 3.3976731247e-6, 1e-15);
}

TEST(Phi, KnownValues) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(1.0), 0.8413447461, 1e-10);
  EXPECT_LT(std_normal_cdf(-8.0), 1e-14);
  EXPECT_THROW(std_normal_cdf(std::nan("")), InvalidArgument);
}

TEST(Phi, FloatInstantiation) {
  EXPECT_NEAR(std_normal_cdf(1.0f), 0.8413447f, 1e-6f);
}

TEST(DiffDistribution, DirectFormula) {
  auto d = diff_distribution(make_estimate(3.0, 1.0), make_estimate(1.0, 1.0));
  EXPECT_EQ(d.mu_ab, 2.0);
  EXPECT_EQ(d.var_ab, 2.0);
  d = diff_distribution(make_estimate(0.0, 2.0), make_estimate(0.0, 2.0));
  EXPECT_EQ(d.mu_ab, 0.0);
  EXPECT_EQ(d.var_ab, 8.0);
  const auto a = make_estimate(0.3, 0.7), b = make_estimate(-1.2, 1.9);
  EXPECT_EQ(diff_distribution(a, b).mu_ab, -diff_distribution(b, a).mu_ab);
  EXPECT_EQ(diff_distribution(a, b).var_ab, diff_distribution(b, a).var_ab);
}

TEST(PreferenceProbability, Values) {
  EXPECT_EQ(preference_probability(make_estimate(0.4, 0.2), make_estimate(0.4, 3.0)), 0.5);
  EXPECT_NEAR(preference_probability(make_estimate(1.0, 1.0), make_estimate(0.0, 1.0)), 0.7602499389, 1e-10);
  EXPECT_GT(preference_probability(make_estimate(10.0, 0.1), make_estimate(0.0, 0.1)), 1.0 - 1e-12);
}

TEST(PreferenceProbability, ComplementaryOnRandomPairs) {
  RngStream rng(7);
  for (int k = 0; k < 1000; ++k) {
    const auto a = make_estimate(rng.normal(0, 3), 0.05 + 3 * rng.uniform());
    const auto b = make_estimate(rng.normal(0, 3), 0.05 + 3 * rng.uniform());
    EXPECT_NEAR(preference_probability(a, b) + preference_probability(b, a), 1.0, 1e-12);
  }
}

TEST(PreferenceProbability, ScaleInvariant) {
  const auto p = preference_probability(make_estimate(1.5, 0.8), make_estimate(0.2, 1.1));
  const auto q = preference_probability(make_estimate(4.5, 2.4), make_estimate(0.6, 3.3));
  EXPECT_NEAR(p, q, 1e-14);
}

TEST(Estimate, SigmaFloorAndFiniteness) {
  EXPECT_EQ(make_estimate(0.0, 0.0).sigma, kSigmaFloor);
  EXPECT_THROW(make_estimate(std::nan(""), 1.0), InvalidArgument);
  EXPECT_THROW(make_estimate(0.0, std::numeric_limits<double>::infinity()), InvalidArgument);
  EXPECT_THROW(check_estimate(QualityEstimate{0.0, 0.0}), InvalidArgument);
}

TEST(DataUncertainty, ValuesAndMonotonicity) {
  EXPECT_EQ(data_uncertainty(make_estimate(0.0, 1.0), make_estimate(5.0, 1.0)), 2.0);
  EXPECT_EQ(data_uncertainty(make_estimate(0.0, 0.5), make_estimate(5.0, 0.5)), 0.5);
  double prev = 0;
  for (double s = 0.1; s < 3; s += 0.1) {
    const double v = data_uncertainty(make_estimate(0.0, s), make_estimate(1.0, 0.7));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(FidelityLoss, Values) {
  EXPECT_EQ(fidelity_loss(0.5, 0.5), 0.0);
  EXPECT_NEAR(fidelity_loss(1.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(fidelity_loss(0.8, 0.5), 1.0 - std::sqrt(0.40) - std::sqrt(0.10), 1e-15);
  EXPECT_NEAR(fidelity_loss(0.8, 0.5), 0.0513167, 1e-6);
  EXPECT_THROW(fidelity_loss(1.1, 0.5), InvalidArgument);
  EXPECT_THROW(fidelity_loss(0.5, -0.1), InvalidArgument);
}

TEST(FidelityLoss, ZeroIffEqualOnGrid) {
  for (int a = 0; a <= 20; ++a) {
    for (int b = 0; b <= 20; ++b) {
      const double l = fidelity_loss(a / 20.0, b / 20.0);
      if (a == b) {
        EXPECT_LT(l, 1e-15);
      } else {
        EXPECT_GT(l, 1e-6) << a << "," << b;
      }
      EXPECT_NEAR(l, fidelity_loss(b / 20.0, a / 20.0), 1e-15);
    }
  }
}
