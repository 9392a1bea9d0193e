#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/LU>

#include "lbps/error.hpp"
#include "lbps/selection.hpp"
#include "oracles/bt_grid.hpp"

using namespace lbps;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Matrix& m) {
  Rows out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j));
  }
  return out;
}

// Posterior of the BT fit in coordinates x = (q_0..q_{n-2}), q_{n-1} = -sum(x).
// Mode by grid refinement, precision by a finite-difference Hessian of the
// oracle log-likelihood plus the ridge penalty expressed in x.
struct OraclePosterior {
  Vector mean;
  Matrix cov;
};

OraclePosterior oracle_posterior(const Rows& p, const Rows& w, double ridge) {
  const auto q = oracle::bt_grid_refine(p, w, 1e-9);
  const std::size_t n = q.size();
  const Index m = static_cast<Index>(n - 1);
  const auto f = [&](const Vector& x) {
    std::vector<double> qq(x.data(), x.data() + m);
    qq.push_back(-x.sum());
    return oracle::bt_loglik(p, w, qq);
  };
  Vector x(m);
  for (Index k = 0; k < m; ++k) x(k) = q[static_cast<std::size_t>(k)];
  const double h = 1e-4;
  Matrix hess(m, m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) {
      Vector pp = x, pm = x, mp = x, mm = x;
      pp(a) += h; pp(b) += h;
      pm(a) += h; pm(b) -= h;
      mp(a) -= h; mp(b) += h;
      mm(a) -= h; mm(b) -= h;
      hess(a, b) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
    }
  }
  const Matrix precision = -hess + ridge * (Matrix::Identity(m, m) + Matrix::Ones(m, m));
  return {x, Eigen::FullPivLU<Matrix>(precision).inverse()};
}

double oracle_kl(const OraclePosterior& p0, const OraclePosterior& p1) {
  const Eigen::FullPivLU<Matrix> lu1(p1.cov), lu0(p0.cov);
  const Matrix inv1 = lu1.inverse();
  const Vector d = p1.mean - p0.mean;
  return 0.5 * ((inv1 * p0.cov).trace() + d.dot(inv1 * d) - static_cast<double>(d.size()) +
                std::log(lu1.determinant()) - std::log(lu0.determinant()));
}

double oracle_eic(const Pcm& pcm, Index i, Index j, double var_m_norm, double delta) {
  const double ridge = BtOptions{}.ridge;
  const auto prior = oracle_posterior(to_rows(pcm.p), to_rows(pcm.w), ridge);
  const double step = std::max(delta, var_m_norm);
  double total = 0;
  for (double s : {1.0, -1.0}) {
    Rows p = to_rows(pcm.p);
    const double moved = std::min(1.0, std::max(0.0, p[i][j] + s * step));
    p[i][j] = moved;
    p[j][i] = 1 - moved;
    total += oracle_kl(prior, oracle_posterior(p, to_rows(pcm.w), ridge));
  }
  return total;
}

PairRecord record(std::size_t ref, Index i, Index j, double var_ab = 0, double var_m = 0) {
  PairRecord r;
  r.pair = {ref, i, j};
  r.var_ab = var_ab;
  r.summary.var_m = var_m;
  return r;
}

}  // namespace

TEST(Criterion, Parse) {
  EXPECT_EQ(parse_criterion("eic"), Criterion::Eic);
  EXPECT_EQ(to_string(Criterion::Random), "random");
  try {
    parse_criterion("greedy");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_EQ(e.code(), "unknown_criterion");
  }
}

TEST(Normalize, PerReferenceAffine) {
  std::vector<PairRecord> recs{record(0, 0, 1, 0, 0.01), record(0, 0, 2, 0, 0.03), record(0, 1, 2, 0, 0.05),
                               record(1, 0, 1, 0, 0.2),  record(1, 0, 2, 0, 0.2),  record(2, 0, 1, 0, 0.7)};
  normalize_model_uncertainty(recs);
  EXPECT_NEAR(recs[0].var_m_norm, 0.0, 1e-15);
  EXPECT_NEAR(recs[1].var_m_norm, 0.5, 1e-12);
  EXPECT_NEAR(recs[2].var_m_norm, 1.0, 1e-15);
  EXPECT_EQ(recs[3].var_m_norm, 0.0);
  EXPECT_EQ(recs[4].var_m_norm, 0.0);
  EXPECT_EQ(recs[5].var_m_norm, 0.0);
}

TEST(MvnKl, OneDimensionalClosedForms) {
  Gaussian a{Vector::Zero(1), Matrix::Identity(1, 1)};
  EXPECT_EQ(mvn_kl(a, a), 0.0);
  Gaussian b{Vector::Constant(1, 1.0), Matrix::Identity(1, 1)};
  EXPECT_NEAR(mvn_kl(a, b), 0.5, 1e-9);
  Gaussian c{Vector::Zero(1), Matrix::Constant(1, 1, 2.0)};
  EXPECT_NEAR(mvn_kl(a, c), 0.5 * (0.5 - 1 + std::log(2.0)), 1e-9);
  EXPECT_NEAR(mvn_kl(a, c), 0.0965736, 1e-7);
}

TEST(MvnKl, RandomOneDimensional) {
  RngStream rng(31);
  for (int k = 0; k < 50; ++k) {
    const double m0 = rng.normal(0, 2), m1 = rng.normal(0, 2);
    const double s0 = 0.1 + 3 * rng.uniform(), s1 = 0.1 + 3 * rng.uniform();
    const double expect = std::log(s1 / s0) + (s0 * s0 + (m0 - m1) * (m0 - m1)) / (2 * s1 * s1) - 0.5;
    const Gaussian g0{Vector::Constant(1, m0), Matrix::Constant(1, 1, s0 * s0)};
    const Gaussian g1{Vector::Constant(1, m1), Matrix::Constant(1, 1, s1 * s1)};
    EXPECT_NEAR(mvn_kl(g0, g1), expect, 1e-9 * std::max(1.0, expect));
  }
}

TEST(MvnKl, NonNegativeAndChecked) {
  RngStream rng(32);
  for (int k = 0; k < 100; ++k) {
    const Index d = 1 + static_cast<Index>(rng.below(5));
    Gaussian g[2];
    for (auto& x : g) {
      Matrix a(d, d);
      for (Index r = 0; r < d; ++r) {
        for (Index c = 0; c < d; ++c) a(r, c) = rng.normal();
      }
      x.cov = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
      x.mean = Vector(d);
      for (Index r = 0; r < d; ++r) x.mean(r) = rng.normal();
    }
    EXPECT_GE(mvn_kl(g[0], g[1]), -1e-9);
  }
  Gaussian ok{Vector::Zero(2), Matrix::Identity(2, 2)};
  Gaussian singular{Vector::Zero(2), Matrix::Ones(2, 2)};
  EXPECT_THROW(mvn_kl(ok, singular), NumericalError);
  EXPECT_THROW(mvn_kl(ok, Gaussian{Vector::Zero(3), Matrix::Identity(3, 3)}), InvalidArgument);
}

TEST(Eic, ZeroWithoutPerturbation) {
  Pcm pcm = Pcm::uniform(4);
  pcm.set(0, 1, 0.8, 1);
  pcm.set(2, 3, 0.3, 1);
  EXPECT_EQ(eic_score(pcm, 0, 1, 0.0, 0.0), 0.0);
  EXPECT_GT(eic_score(pcm, 0, 1, 0.0, 0.3), 0.0);
  EXPECT_GT(eic_score(pcm, 0, 1, 0.6, 0.0), 0.0);
  EXPECT_THROW(eic_score(pcm, 1, 1, 0.0, 0.3), InvalidArgument);
  EXPECT_THROW(eic_score(pcm, 0, 1, 0.0, -0.1), InvalidArgument);
}

TEST(Eic, ClippedSideContributesNothing) {
  Pcm pcm = Pcm::uniform(3);
  pcm.set(0, 1, 1.0, 1);
  // The upward move is clipped back to 1.0; only the downward one counts.
  Pcm down = pcm;
  down.set(0, 1, 0.7, 1);
  const auto prior = bt_fit(pcm);
  const double expect = mvn_kl(zero_sum_gaussian(prior), zero_sum_gaussian(bt_fit(down)));
  EXPECT_NEAR(eic_score(pcm, 0, 1, 0.0, 0.3), expect, 1e-9);
}

TEST(Eic, MatchesBruteForceOracleRanking) {
  Pcm pcm = Pcm::uniform(4);
  pcm.set(0, 1, 0.62, 1);
  pcm.set(0, 2, 0.81, 1);
  pcm.set(0, 3, 0.35, 1);
  pcm.set(1, 2, 0.70, 1);
  pcm.set(1, 3, 0.22, 1);
  pcm.set(2, 3, 0.10, 1);
  const std::vector<double> norm{0.0, 0.9, 0.4, 0.1, 0.65, 0.0};
  std::vector<PairRecord> recs;
  std::vector<std::pair<double, std::size_t>> expected;
  std::size_t k = 0;
  for (Index i = 0; i < 4; ++i) {
    for (Index j = i + 1; j < 4; ++j, ++k) {
      auto r = record(0, i, j);
      r.var_m_norm = norm[k];
      recs.push_back(r);
      const double oracle_value = oracle_eic(pcm, i, j, norm[k], 0.3);
      expected.emplace_back(-oracle_value, k);
      EXPECT_NEAR(eic_score(pcm, i, j, norm[k], 0.3), oracle_value, 1e-4 * oracle_value) << i << "," << j;
    }
  }
  std::sort(expected.begin(), expected.end());
  const std::vector<Pcm> pcms{pcm};
  RngStream rng(0);
  const auto ranked = rank_pairs(recs, Criterion::Eic, pcms, 0.3, {}, rng);
  ASSERT_EQ(ranked.size(), 6u);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(ranked[r], recs[expected[r].second].pair) << "rank " << r;
}

TEST(Eic, BatchMatchesSingleAndThreads) {
  Pcm a = Pcm::uniform(4), b = Pcm::uniform(3);
  a.set(0, 3, 0.9, 2);
  b.set(1, 2, 0.2, 1);
  const std::vector<Pcm> pcms{a, b};
  std::vector<PairRecord> recs;
  for (std::size_t r = 0; r < 2; ++r) {
    for (Index i = 0; i < pcms[r].size(); ++i) {
      for (Index j = i + 1; j < pcms[r].size(); ++j) recs.push_back(record(r, i, j));
    }
  }
  auto seq = recs, par = recs;
  compute_eic(seq, pcms, 0.3, {}, 1);
  compute_eic(par, pcms, 0.3, {}, 4);
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(*seq[k].eic, *par[k].eic);
    EXPECT_EQ(*seq[k].eic, eic_score(pcms[recs[k].pair.ref], recs[k].pair.i, recs[k].pair.j, 0.0, 0.3));
  }
}

TEST(Rank, DataAndModelOrder) {
  std::vector<PairRecord> recs{record(0, 0, 1, 1.0, 0.5), record(0, 0, 2, 3.0, 0.1)};
  RngStream rng(1);
  auto ranked = rank_pairs(recs, Criterion::Data, {}, 0.3, {}, rng);
  EXPECT_EQ(ranked[0], (PairKey{0, 0, 2}));
  ranked = rank_pairs(recs, Criterion::Model, {}, 0.3, {}, rng);
  EXPECT_EQ(ranked[0], (PairKey{0, 0, 1}));
}

TEST(Rank, TiesAreLexicographic) {
  std::vector<PairRecord> recs{record(1, 0, 1), record(0, 1, 2), record(0, 0, 2), record(0, 0, 1)};
  for (auto c : {Criterion::Data, Criterion::Model}) {
    RngStream rng(1);
    const auto ranked = rank_pairs(recs, c, {}, 0.3, {}, rng);
    EXPECT_EQ(ranked, (std::vector<PairKey>{{0, 0, 1}, {0, 0, 2}, {0, 1, 2}, {1, 0, 1}}));
  }
  for (auto& r : recs) r.eic = 0.25;
  RngStream rng(1);
  EXPECT_EQ(rank_pairs(recs, Criterion::Eic, {}, 0.3, {}, rng).front(), (PairKey{0, 0, 1}));
}

TEST(Rank, RandomIsSeededPermutation) {
  std::vector<PairRecord> recs;
  for (Index i = 0; i < 10; ++i) {
    for (Index j = i + 1; j < 10; ++j) recs.push_back(record(0, i, j, static_cast<double>(i)));
  }
  RngStream r1(5, "random-order"), r2(5, "random-order"), r3(6, "random-order");
  const auto a = rank_pairs(recs, Criterion::Random, {}, 0.3, {}, r1);
  const auto b = rank_pairs(recs, Criterion::Random, {}, 0.3, {}, r2);
  const auto c = rank_pairs(recs, Criterion::Random, {}, 0.3, {}, r3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<PairKey> all;
  for (const auto& r : recs) all.push_back(r.pair);
  EXPECT_EQ(sorted, all);
}

TEST(Budget, RoundingAndNesting) {
  std::vector<PairKey> ranked;
  for (Index k = 0; k < 120; ++k) ranked.push_back({static_cast<std::size_t>(k / 10), k % 10, 10 + k});
  EXPECT_EQ(select_budget(ranked, 0.10).selected.size(), 12u);
  EXPECT_TRUE(select_budget(ranked, 0.0).selected.empty());
  const auto full = select_budget(ranked, 1.0);
  EXPECT_EQ(full.selected, ranked);
  EXPECT_EQ(full.total_pairs, 120u);
  const auto small = select_budget(ranked, 0.2), large = select_budget(ranked, 0.45);
  EXPECT_TRUE(std::equal(small.selected.begin(), small.selected.end(), large.selected.begin()));
  try {
    select_budget(ranked, 1.5);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_EQ(e.code(), "budget_range");
  }
}
