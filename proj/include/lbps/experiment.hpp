#ifndef LBPS_EXPERIMENT_HPP
#define LBPS_EXPERIMENT_HPP

#include <cstdint>
#include <vector>

#include "lbps/bradley_terry.hpp"
#include "lbps/dataset.hpp"
#include "lbps/rng.hpp"
#include "lbps/selection.hpp"

namespace lbps {

enum class FillMode { Oracle, Empirical };

std::string_view to_string(FillMode m);
FillMode parse_fill_mode(std::string_view name);

inline constexpr int kDefaultSubjects = 15;
inline constexpr int kDefaultRepetitions = 25;
inline constexpr std::size_t kDefaultPasses = 200;

struct ExperimentConfig {
  std::vector<Criterion> criteria{Criterion::Eic, Criterion::Random};
  std::vector<double> budgets{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  FillMode fill = FillMode::Empirical;
  int subjects = kDefaultSubjects;
  int repetitions = kDefaultRepetitions;
  std::size_t passes = kDefaultPasses;
  double delta = kDefaultDelta;
  std::uint64_t seed = 0;
  BtOptions bt;
  int threads = 1;  // does not affect results

  void validate() const;
};

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repetitions
};

struct ExperimentRow {
  Criterion criterion = Criterion::Eic;
  double budget = 0.0;
  std::size_t pairs = 0;   // pairs deferred to humans
  std::size_t trials = 0;  // pairs x subjects
  MetricStats plcc, srocc, rmse;
  MetricStats score_std;   // mean BT score standard deviation of the filled fit
};

struct ExperimentResult {
  ExperimentConfig config;
  std::size_t total_pairs = 0;
  std::vector<ExperimentRow> rows;  // sorted by (criterion name, budget)

  const ExperimentRow& row(Criterion c, double budget) const;
};

/// One forced-choice judgment: true (first image wins) iff a uniform draw < p_true.
bool simulate_judgment(double p_true, RngStream& rng);

/// Replaces the planned pairs of reference `ref` in `predicted` with ground
/// truth: the true probability (oracle, weight 1) or the win frequency of
/// `subjects` simulated judgments (empirical, weight = subjects). Each pair's
/// judgments come from a stream keyed by (judgment_seed, ref, i, j).
Pcm fill_pcm(const Pcm& predicted, const SelectionPlan& plan, std::size_t ref, const Pcm& truth,
             FillMode mode, int subjects, std::uint64_t judgment_seed);

/// Per-reference predictor outputs for one repetition. Predicted entries carry
/// `prediction_weight` (the weight a human-filled entry would get); the neutral
/// 0.5 initialization of the random baseline is a unit pseudo-count.
struct Predictions {
  std::vector<Pcm> point;     // Phi of the deterministic estimates
  std::vector<Pcm> ensemble;  // mu_m of the stochastic passes
  std::vector<Pcm> neutral;   // 0.5 everywhere (random baseline)
  std::vector<PairRecord> records;
};

Predictions predict(const Dataset& dataset, std::size_t n_passes, std::uint64_t seed,
                    double prediction_weight = 1.0, int threads = 1);

/// Weight of one PCM entry filled from ground truth: subjects (empirical) or 1 (oracle).
double panel_weight(FillMode mode, int subjects);

/// PCM that criterion `c` starts from before human data is merged in.
const Pcm& starting_pcm(const Predictions& pred, Criterion c, std::size_t ref);

ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config);

}  // namespace lbps

#endif  // LBPS_EXPERIMENT_HPP
