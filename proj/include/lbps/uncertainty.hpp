#ifndef LBPS_UNCERTAINTY_HPP
#define LBPS_UNCERTAINTY_HPP

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "lbps/preference.hpp"
#include "lbps/rng.hpp"
#include "lbps/types.hpp"

namespace lbps {

/// Preference probabilities of one pair across stochastic predictor passes.
struct PassSeries {
  PairKey pair;
  std::vector<double> values;
};

struct EnsembleSummary {
  double mu_m = 0.5;
  double var_m = 0.0;  // population variance
  std::size_t n_passes = 0;
};

EnsembleSummary summarize_passes(std::span<const double> values);
inline EnsembleSummary summarize_passes(const PassSeries& series) {
  return summarize_passes(series.values);
}

/// Scales of the synthetic predictor's errors.
struct NoiseModel {
  double mean_noise = 0.0;   // sd of the per-image systematic bias on mu
  double sigma_noise = 0.0;  // log-scale sd of per-pass sigma jitter
  double pass_jitter = 0.0;  // sd of per-pass jitter on mu
};

/// Ground-truth image qualities plus a stochastic predictor that observes them
/// through a fixed per-image bias and fresh per-pass jitter.
struct SyntheticWorld {
  std::vector<std::vector<QualityEstimate>> truth;  // [reference][image]
  std::vector<std::vector<double>> bias;            // [reference][image]
  NoiseModel noise;
  std::uint64_t seed = 0;

  /// Builds a world around given truths; biases are drawn from `seed`.
  static SyntheticWorld from_truth(std::vector<std::vector<QualityEstimate>> truth,
                                   NoiseModel noise, std::uint64_t seed);

  std::size_t reference_count() const { return truth.size(); }
  Index image_count(std::size_t ref) const { return static_cast<Index>(truth.at(ref).size()); }
  void validate() const;
};

/// Parameters of a randomly generated world.
struct WorldSpec {
  std::size_t references = 15;
  Index images_per_reference = 16;
  double quality_spread = 1.0;  // sd of true mu within a reference
  double sigma_min = 1.0;       // true sigma ~ U[sigma_min, sigma_max]
  double sigma_max = 1.0;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

SyntheticWorld generate_world(const WorldSpec& spec);

/// One stochastic forward pass for image `image` of reference `ref`.
QualityEstimate synthetic_pass(const SyntheticWorld& world, std::size_t ref, Index image,
                               RngStream& rng);

/// Per-pass (mu, sigma) per image, as exported by an external predictor.
struct EnsembleTable {
  std::vector<Matrix> mu;     // [reference] passes x images
  std::vector<Matrix> sigma;  // [reference] passes x images

  std::size_t reference_count() const { return mu.size(); }
  Index pass_count(std::size_t ref) const { return mu.at(ref).rows(); }
};

using EnsembleSource = std::variant<const SyntheticWorld*, const EnsembleTable*>;

/// Pass series of a single ordered pair (a, b). For the synthetic predictor,
/// draws are keyed by the unordered pair so (b, a) sees the same estimates.
PassSeries pair_series(const EnsembleSource& source, std::size_t ref, Index a, Index b,
                       std::size_t n_passes, std::uint64_t seed);

/// Series for every pair i < j of every reference, ordered by reference and
/// then lexicographically by (i, j).
std::vector<PassSeries> ensemble_for_dataset(const EnsembleSource& source, std::size_t n_passes,
                                             std::uint64_t seed, int threads = 1);
std::vector<PassSeries> ensemble_for_reference(const EnsembleSource& source, std::size_t ref,
                                               std::size_t n_passes, std::uint64_t seed);

/// Deterministic (no-dropout) estimate per image: the biased mean without
/// jitter for the synthetic predictor, the per-image pass average (mean mu,
/// root-mean-square sigma) for an external ensemble.
std::vector<QualityEstimate> point_estimates(const EnsembleSource& source, std::size_t ref);

}  // namespace lbps

#endif  // LBPS_UNCERTAINTY_HPP
