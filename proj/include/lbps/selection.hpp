#ifndef LBPS_SELECTION_HPP
#define LBPS_SELECTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lbps/bradley_terry.hpp"
#include "lbps/rng.hpp"
#include "lbps/uncertainty.hpp"

namespace lbps {

inline constexpr double kDefaultDelta = 0.3;

enum class Criterion { Data, Model, Eic, Random };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view name);

struct PairRecord {
  PairKey pair;
  double var_ab = 0.0;          // data uncertainty
  EnsembleSummary summary;      // model uncertainty
  double var_m_norm = 0.0;      // var_m min-max normalized within the reference
  std::optional<double> eic;
};

/// Min-max normalizes var_m within each reference. A degenerate range maps
/// every member of the group to 0.
void normalize_model_uncertainty(std::vector<PairRecord>& records);

/// Multivariate normal with dense covariance.
struct Gaussian {
  Vector mean;
  Matrix cov;
};

/// KL(p0 || p1) in nats. Throws NumericalError if p1's covariance is not
/// positive definite.
double mvn_kl(const Gaussian& p0, const Gaussian& p1);

/// BT posterior expressed in coordinates of the zero-sum subspace (n-1 dims),
/// where the ridged Laplace covariance is non-singular.
Gaussian zero_sum_gaussian(const BtResult& fit);

/// Expected information change of deferring pair (i, j): the summed KL
/// divergence from the prior BT posterior of `pcm` to the posteriors obtained
/// after moving p(i,j) up and down by max(delta, var_m_norm), clipped to [0,1].
double eic_score(const Pcm& pcm, Index i, Index j, double var_m_norm,
                 double delta = kDefaultDelta, const BtOptions& options = {});
/// Same, reusing an already computed prior fit of `pcm`.
double eic_score(const Pcm& pcm, const BtResult& prior, Index i, Index j, double var_m_norm,
                 double delta = kDefaultDelta, const BtOptions& options = {});

/// Fills `eic` for every record, using pcms[ref] as the predicted PCM.
void compute_eic(std::vector<PairRecord>& records, std::span<const Pcm> pcms,
                 double delta = kDefaultDelta, const BtOptions& options = {}, int threads = 1);

/// Orders pairs from most to least deserving of human evaluation.
/// Ties fall back to ascending (reference, i, j). For Criterion::Eic, missing
/// EIC values are computed from `pcms`. Random ignores the records' values and
/// shuffles with `rng`.
std::vector<PairKey> rank_pairs(std::vector<PairRecord>& records, Criterion criterion,
                                std::span<const Pcm> pcms, double delta, const BtOptions& options,
                                RngStream& rng, int threads = 1);

struct SelectionPlan {
  Criterion criterion = Criterion::Eic;
  double budget = 0.0;
  std::uint64_t seed = 0;
  std::size_t total_pairs = 0;
  std::vector<PairKey> selected;  // in ranking order
};

/// First round(budget * ranked.size()) pairs of the ranking.
SelectionPlan select_budget(std::span<const PairKey> ranked, double budget,
                            Criterion criterion = Criterion::Eic, std::uint64_t seed = 0);

}  // namespace lbps

#endif  // LBPS_SELECTION_HPP
