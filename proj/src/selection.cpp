#include "lbps/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "lbps/error.hpp"
#include "lbps/parallel.hpp"

namespace lbps {

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::Data: return "data";
    case Criterion::Model: return "model";
    case Criterion::Eic: return "eic";
    case Criterion::Random: return "random";
  }
  return "?";
}

Criterion parse_criterion(std::string_view name) {
  if (name == "data") return Criterion::Data;
  if (name == "model") return Criterion::Model;
  if (name == "eic") return Criterion::Eic;
  if (name == "random") return Criterion::Random;
  throw InvalidArgument("unknown criterion '" + std::string(name) + "'", "unknown_criterion");
}

void normalize_model_uncertainty(std::vector<PairRecord>& records) {
  std::map<std::size_t, std::pair<double, double>> range;
  for (const auto& r : records) {
    auto [it, fresh] = range.try_emplace(r.pair.ref, r.summary.var_m, r.summary.var_m);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.summary.var_m);
      it->second.second = std::max(it->second.second, r.summary.var_m);
    }
  }
  for (auto& r : records) {
    const auto [lo, hi] = range.at(r.pair.ref);
    r.var_m_norm = hi > lo ? std::clamp((r.summary.var_m - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  }
}

double mvn_kl(const Gaussian& p0, const Gaussian& p1) {
  const Index k = p0.mean.size();
  if (p1.mean.size() != k || p0.cov.rows() != k || p0.cov.cols() != k || p1.cov.rows() != k ||
      p1.cov.cols() != k) {
    throw InvalidArgument("mvn_kl: dimension mismatch");
  }
  const Eigen::LLT<Matrix> l1(p1.cov);
  if (l1.info() != Eigen::Success) {
    throw NumericalError("mvn_kl: posterior covariance is not positive definite", "singular_covariance");
  }
  const Eigen::LLT<Matrix> l0(p0.cov);
  if (l0.info() != Eigen::Success) {
    throw NumericalError("mvn_kl: prior covariance is not positive definite", "singular_covariance");
  }
  const auto logdet = [](const Eigen::LLT<Matrix>& l) {
    return 2.0 * l.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  const double trace = l1.solve(p0.cov).trace();
  const Vector diff = p1.mean - p0.mean;
  const double maha = diff.dot(l1.solve(diff));
  return 0.5 * (trace + maha - static_cast<double>(k) + logdet(l1) - logdet(l0));
}

Gaussian zero_sum_gaussian(const BtResult& fit) {
  const Matrix u = zero_sum_basis(fit.q.size());
  Gaussian g{u.transpose() * fit.q, u.transpose() * fit.cov * u};
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  return g;
}

double eic_score(const Pcm& pcm, Index i, Index j, double var_m_norm, double delta,
                 const BtOptions& options) {
  return eic_score(pcm, bt_fit(pcm, options), i, j, var_m_norm, delta, options);
}

double eic_score(const Pcm& pcm, const BtResult& prior, Index i, Index j, double var_m_norm,
                 double delta, const BtOptions& options) {
  if (delta < 0.0) throw InvalidArgument("eic_score: delta must be non-negative");
  if (i == j || i < 0 || j < 0 || i >= pcm.size() || j >= pcm.size()) {
    throw InvalidArgument("eic_score: invalid pair");
  }
  const double step = std::max(delta, var_m_norm);
  const Gaussian prior_g = zero_sum_gaussian(prior);
  double total = 0.0;
  for (const double sign : {1.0, -1.0}) {
    const double moved = std::clamp(pcm.p(i, j) + sign * step, 0.0, 1.0);
    // A perturbation clipped back onto the current value leaves the posterior
    // equal to the prior.
    if (moved == pcm.p(i, j)) continue;
    Pcm perturbed = pcm;
    perturbed.set(i, j, moved, pcm.w(i, j));
    try {
      const BtResult post = bt_fit(perturbed, options, prior.q);
      total += mvn_kl(prior_g, zero_sum_gaussian(post));
    } catch (const Error& e) {
      throw ContextError(sign > 0 ? "eic perturbation +" : "eic perturbation -", e);
    }
  }
  return total;
}

void compute_eic(std::vector<PairRecord>& records, std::span<const Pcm> pcms, double delta,
                 const BtOptions& options, int threads) {
  std::vector<std::optional<BtResult>> priors(pcms.size());
  parallel_for(pcms.size(), threads, [&](std::size_t r) {
    bool used = std::any_of(records.begin(), records.end(),
                            [&](const PairRecord& rec) { return rec.pair.ref == r; });
    if (used) priors[r] = bt_fit(pcms[r], options);
  });
  parallel_for(records.size(), threads, [&](std::size_t k) {
    auto& rec = records[k];
    if (rec.pair.ref >= pcms.size()) throw InvalidArgument("compute_eic: record references unknown PCM");
    rec.eic = eic_score(pcms[rec.pair.ref], *priors[rec.pair.ref], rec.pair.i, rec.pair.j,
                        rec.var_m_norm, delta, options);
  });
}

std::vector<PairKey> rank_pairs(std::vector<PairRecord>& records, Criterion criterion,
                                std::span<const Pcm> pcms, double delta, const BtOptions& options,
                                RngStream& rng, int threads) {
  std::vector<const PairRecord*> order;
  order.reserve(records.size());
  if (criterion == Criterion::Eic &&
      std::any_of(records.begin(), records.end(), [](const PairRecord& r) { return !r.eic; })) {
    compute_eic(records, pcms, delta, options, threads);
  }
  for (const auto& r : records) order.push_back(&r);

  const auto key = [criterion](const PairRecord& r) -> double {
    switch (criterion) {
      case Criterion::Data: return r.var_ab;
      case Criterion::Model: return r.summary.var_m;
      case Criterion::Eic: return *r.eic;
      case Criterion::Random: return 0.0;
    }
    return 0.0;
  };
  std::sort(order.begin(), order.end(), [&](const PairRecord* a, const PairRecord* b) {
    const double ka = key(*a);
    const double kb = key(*b);
    if (ka != kb) return ka > kb;
    return a->pair < b->pair;
  });

  std::vector<PairKey> out;
  out.reserve(order.size());
  for (const auto* r : order) out.push_back(r->pair);
  if (criterion == Criterion::Random) rng.shuffle(out);
  return out;
}

SelectionPlan select_budget(std::span<const PairKey> ranked, double budget, Criterion criterion,
                            std::uint64_t seed) {
  if (!(budget >= 0.0 && budget <= 1.0)) {
    throw InvalidArgument("budget fraction must lie in [0, 1]", "budget_range");
  }
  const auto count = static_cast<std::size_t>(
      std::llround(budget * static_cast<double>(ranked.size())));
  SelectionPlan plan;
  plan.criterion = criterion;
  plan.budget = budget;
  plan.seed = seed;
  plan.total_pairs = ranked.size();
  plan.selected.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count));
  return plan;
}

}  // namespace lbps
