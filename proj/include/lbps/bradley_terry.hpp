#ifndef LBPS_BRADLEY_TERRY_HPP
#define LBPS_BRADLEY_TERRY_HPP

#include <span>
#include <vector>

#include "lbps/types.hpp"

namespace lbps {

/// Pairwise-comparison matrix. p(i,j) is the probability that i is preferred
/// over j, w(i,j) the effective number of comparisons behind it. The diagonal
/// is 0.5 with zero weight and never read.
struct Pcm {
  Matrix p;
  Matrix w;

  Pcm() = default;
  Pcm(Matrix probabilities, Matrix weights);

  /// n x n matrix filled with probability `prob` and weight `weight` off the diagonal.
  static Pcm uniform(Index n, double prob = 0.5, double weight = 1.0);

  Index size() const { return p.rows(); }

  /// Sets (i,j) and its complement (j,i).
  void set(Index i, Index j, double prob, double weight);

  /// Throws ValidationError if shape, range, complement or weight symmetry fail.
  void validate(double tol = 1e-9) const;
};

struct BtOptions {
  double tol = 1e-8;       // gradient-norm stopping threshold
  int max_iter = 200;
  double clamp = 1e-4;     // probabilities clamped to [clamp, 1 - clamp]
  double ridge = 1e-6;     // added to the Hessian diagonal for the covariance
};

struct BtResult {
  Vector q;       // zero-sum log-scores
  Matrix cov;     // Laplace covariance on the zero-sum subspace
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik_trace;  // log-likelihood after each accepted iterate
};

// Log-likelihood of q under the fractional-outcome logistic model, with its
// gradient and the negative Hessian (a weighted graph Laplacian).
double bt_loglik(const Pcm& pcm, const Vector& q, double clamp = BtOptions{}.clamp);
Vector bt_gradient(const Pcm& pcm, const Vector& q, double clamp = BtOptions{}.clamp);
Matrix bt_neg_hessian(const Pcm& pcm, const Vector& q);

/// Connected components of the positive-weight comparison graph.
std::vector<std::vector<Index>> comparison_components(const Pcm& pcm);

/// Maximum-likelihood Bradley-Terry scores with Laplace covariance.
/// Damped Newton from `start` (projected to zero-sum) or from zero.
BtResult bt_fit(const Pcm& pcm, const BtOptions& options = {});
BtResult bt_fit(const Pcm& pcm, const BtOptions& options, const Vector& start);

/// sqrt of the covariance diagonal.
Vector score_std(const BtResult& result);

/// bt_fit over each PCM; output aligned with input. Throws BatchItemError for
/// the lowest failing index.
std::vector<BtResult> bt_fit_batch(std::span<const Pcm> pcms, const BtOptions& options = {},
                                   int threads = 1);

}  // namespace lbps

#endif  // LBPS_BRADLEY_TERRY_HPP
