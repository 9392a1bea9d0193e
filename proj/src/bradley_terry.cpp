#include "lbps/bradley_terry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lbps/error.hpp"
#include "lbps/parallel.hpp"

namespace lbps {

namespace {

// log(1 / (1 + exp(-x))) without overflow.
double log_logistic(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

void require_square(const Pcm& pcm) {
  if (pcm.p.rows() != pcm.p.cols() || pcm.w.rows() != pcm.w.cols() ||
      pcm.p.rows() != pcm.w.rows()) {
    throw ValidationError("non_square", "PCM probability and weight matrices must be square and equal-sized");
  }
}

}  // namespace

Pcm::Pcm(Matrix probabilities, Matrix weights) : p(std::move(probabilities)), w(std::move(weights)) {
  require_square(*this);
}

Pcm Pcm::uniform(Index n, double prob, double weight) {
  Pcm pcm;
  pcm.p = Matrix::Constant(n, n, 0.5);
  pcm.w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) pcm.set(i, j, prob, weight);
  }
  return pcm;
}

void Pcm::set(Index i, Index j, double prob, double weight) {
  p(i, j) = prob;
  p(j, i) = 1.0 - prob;
  w(i, j) = weight;
  w(j, i) = weight;
}

void Pcm::validate(double tol) const {
  require_square(*this);
  const Index n = size();
  if (n < 2) throw ValidationError("too_small", "PCM needs at least two images");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pij = p(i, j);
      const double wij = w(i, j);
      const std::string at = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (!std::isfinite(pij) || pij < 0.0 || pij > 1.0) {
        throw ValidationError("probability_range", "probability out of [0,1] at " + at);
      }
      if (!std::isfinite(wij) || wij < 0.0) {
        throw ValidationError("negative_weight", "weight must be finite and non-negative at " + at);
      }
      if (std::abs(pij + p(j, i) - 1.0) > tol) {
        throw ValidationError("complement_violation", "p(i,j) + p(j,i) != 1 at " + at);
      }
      if (wij != w(j, i)) {
        throw ValidationError("weight_asymmetry", "w(i,j) != w(j,i) at " + at);
      }
    }
  }
}

double bt_loglik(const Pcm& pcm, const Vector& q, double clamp) {
  const Index n = pcm.size();
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double w = pcm.w(i, j);
      if (w <= 0.0) continue;
      const double pij = clamp_prob(pcm.p(i, j), clamp);
      const double d = q(i) - q(j);
      ll += w * (pij * log_logistic(d) + (1.0 - pij) * log_logistic(-d));
    }
  }
  return ll;
}

Vector bt_gradient(const Pcm& pcm, const Vector& q, double clamp) {
  const Index n = pcm.size();
  Vector g = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double w = pcm.w(i, j);
      if (w <= 0.0) continue;
      const double r = w * (clamp_prob(pcm.p(i, j), clamp) - logistic(q(i) - q(j)));
      g(i) += r;
      g(j) -= r;
    }
  }
  return g;
}

Matrix bt_neg_hessian(const Pcm& pcm, const Vector& q) {
  const Index n = pcm.size();
  Matrix h = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double w = pcm.w(i, j);
      if (w <= 0.0) continue;
      const double l = logistic(q(i) - q(j));
      const double c = w * l * (1.0 - l);
      h(i, i) += c;
      h(j, j) += c;
      h(i, j) -= c;
      h(j, i) -= c;
    }
  }
  return h;
}

std::vector<std::vector<Index>> comparison_components(const Pcm& pcm) {
  const Index n = pcm.size();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> comps;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::vector<Index> stack{s};
    label[s] = id;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      comps.back().push_back(u);
      for (Index v = 0; v < n; ++v) {
        if (v != u && label[v] < 0 && pcm.w(u, v) > 0.0) {
          label[v] = id;
          stack.push_back(v);
        }
      }
    }
    std::sort(comps.back().begin(), comps.back().end());
  }
  return comps;
}

BtResult bt_fit(const Pcm& pcm, const BtOptions& options) {
  return bt_fit(pcm, options, Vector::Zero(pcm.size()));
}

BtResult bt_fit(const Pcm& pcm, const BtOptions& options, const Vector& start) {
  require_square(pcm);
  const Index n = pcm.size();
  if (n < 2) throw ValidationError("too_small", "PCM needs at least two images");
  if (start.size() != n) throw InvalidArgument("bt_fit: start vector has wrong length");
  if (!(pcm.w.array() > 0.0).any()) {
    throw ValidationError("no_comparisons", "PCM has no positive-weight comparisons");
  }
  if (auto comps = comparison_components(pcm); comps.size() > 1) {
    throw DisconnectedGraphError(std::move(comps));
  }

  // J/n pins the null direction (all-ones) so the Newton system is definite.
  const Matrix ones_over_n = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));

  BtResult res;
  Vector q = start.array() - start.mean();
  double ll = bt_loglik(pcm, q, options.clamp);
  res.loglik_trace.push_back(ll);

  Vector g = bt_gradient(pcm, q, options.clamp);
  int iter = 0;
  while (g.norm() > options.tol) {
    if (iter >= options.max_iter) throw NonConvergenceError(q, g.norm(), iter);
    ++iter;

    const Matrix a = bt_neg_hessian(pcm, q) + ones_over_n;
    Eigen::LLT<Matrix> llt(a);
    Vector step;
    if (llt.info() == Eigen::Success) step = llt.solve(g);
    if (step.size() != n || !step.allFinite()) {
      // Gradient ascent with a step bounded by the Laplacian's largest degree.
      const double scale = std::max(1.0, pcm.w.rowwise().sum().maxCoeff());
      step = g / scale;
    }
    step.array() -= step.mean();

    const double predicted_gain = 0.5 * g.dot(step);
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll));
    double t = 1.0;
    bool accepted = false;
    Vector q_new;
    double ll_new = ll;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      q_new = q + t * step;
      ll_new = bt_loglik(pcm, q_new, options.clamp);
      if (ll_new >= ll) {
        accepted = true;
        break;
      }
      // Near the optimum the ascent is below rounding; accept the full step
      // when it provably shrinks the gradient.
      if (t == 1.0 && predicted_gain <= noise &&
          bt_gradient(pcm, q_new, options.clamp).norm() < g.norm()) {
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NonConvergenceError(q, g.norm(), iter);

    q = q_new;
    q.array() -= q.mean();
    ll = ll_new;
    res.loglik_trace.push_back(ll);
    g = bt_gradient(pcm, q, options.clamp);
  }

  res.q = q;
  res.loglik = ll;
  res.iterations = iter;
  res.converged = true;

  // Pseudo-inverse of (H + ridge I) restricted to the zero-sum subspace.
  const Matrix h = bt_neg_hessian(pcm, q) + options.ridge * Matrix::Identity(n, n) + ones_over_n;
  const Matrix inv = h.llt().solve(Matrix::Identity(n, n));
  const Matrix proj = Matrix::Identity(n, n) - ones_over_n;
  Matrix cov = proj * inv * proj;
  res.cov = 0.5 * (cov + cov.transpose());
  return res;
}

Vector score_std(const BtResult& result) { return result.cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

std::vector<BtResult> bt_fit_batch(std::span<const Pcm> pcms, const BtOptions& options,
                                   int threads) {
  std::vector<BtResult> out(pcms.size());
  parallel_for(pcms.size(), threads, [&](std::size_t k) {
    try {
      out[k] = bt_fit(pcms[k], options);
    } catch (const Error& e) {
      throw BatchItemError(k, e);
    }
  });
  return out;
}

}  // namespace lbps
