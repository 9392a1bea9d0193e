#include "lbps/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lbps/error.hpp"
#include "lbps/metrics.hpp"
#include "lbps/parallel.hpp"

namespace lbps {

namespace {

// Neumaier-compensated mean and sample standard deviation; NaN propagates.
MetricStats summarize(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double mean = (sum + c) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double resid = 0.0;
  for (double x : xs) resid += x - mean;
  mean += resid / n;
  double ss = 0.0;
  c = 0.0;
  for (double x : xs) {
    const double d = (x - mean) * (x - mean);
    const double t = ss + d;
    c += std::abs(ss) >= std::abs(d) ? (ss - t) + d : (d - t) + ss;
    ss = t;
  }
  return {mean, std::sqrt((ss + c) / (n - 1.0))};
}

// Correlations of a constant vector are undefined; a repetition producing one
// (e.g. the neutral random baseline before any human data) reports NaN.
template <typename F>
double metric_or_nan(F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    if (e.code() == "degenerate_input") return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

struct RepetitionOutcome {
  // [criterion][budget]
  std::vector<std::vector<double>> plcc, srocc, rmse, score_std;
  std::vector<std::vector<std::size_t>> pairs;
};

}  // namespace

std::string_view to_string(FillMode m) { return m == FillMode::Oracle ? "oracle" : "empirical"; }

FillMode parse_fill_mode(std::string_view name) {
  if (name == "oracle") return FillMode::Oracle;
  if (name == "empirical") return FillMode::Empirical;
  throw InvalidArgument("unknown fill mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (criteria.empty()) throw InvalidArgument("experiment needs at least one criterion");
  if (budgets.empty()) throw InvalidArgument("experiment needs at least one budget");
  for (double b : budgets) {
    if (!(b >= 0.0 && b <= 1.0)) throw InvalidArgument("budget fraction must lie in [0, 1]", "budget_range");
  }
  if (subjects < 1) throw InvalidArgument("subjects must be >= 1");
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  if (passes < 2) throw InvalidArgument("passes must be >= 2");
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
}

const ExperimentRow& ExperimentResult::row(Criterion c, double budget) const {
  for (const auto& r : rows) {
    if (r.criterion == c && r.budget == budget) return r;
  }
  throw NotFoundError("no result row for criterion " + std::string(to_string(c)) + " budget " +
                      std::to_string(budget));
}

bool simulate_judgment(double p_true, RngStream& rng) { return rng.uniform() < p_true; }

Pcm fill_pcm(const Pcm& predicted, const SelectionPlan& plan, std::size_t ref, const Pcm& truth,
             FillMode mode, int subjects, std::uint64_t judgment_seed) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("shape_mismatch", "predicted and ground-truth PCMs differ in size");
  }
  if (mode == FillMode::Empirical && subjects < 1) throw InvalidArgument("subjects must be >= 1");
  Pcm out = predicted;
  for (const auto& key : plan.selected) {
    if (key.ref != ref) continue;
    if (key.i < 0 || key.j >= out.size() || key.i >= key.j) {
      throw ValidationError("unknown_pair", "plan references pair (" + std::to_string(key.i) + "," +
                                                std::to_string(key.j) + ") outside reference " +
                                                std::to_string(ref));
    }
    const double p_true = truth.p(key.i, key.j);
    if (mode == FillMode::Oracle) {
      out.set(key.i, key.j, p_true, 1.0);
    } else {
      RngStream rng(judgment_seed, "judge",
                    {ref, static_cast<std::uint64_t>(key.i), static_cast<std::uint64_t>(key.j)});
      int wins = 0;
      for (int s = 0; s < subjects; ++s) wins += simulate_judgment(p_true, rng) ? 1 : 0;
      out.set(key.i, key.j, static_cast<double>(wins) / subjects, static_cast<double>(subjects));
    }
  }
  return out;
}

double panel_weight(FillMode mode, int subjects) {
  return mode == FillMode::Empirical ? static_cast<double>(subjects) : 1.0;
}

Predictions predict(const Dataset& dataset, std::size_t n_passes, std::uint64_t seed, double prediction_weight,
                    int threads) {
  if (!(prediction_weight > 0.0)) throw InvalidArgument("prediction weight must be positive");
  const EnsembleSource source = dataset.predictor();
  const std::size_t refs = dataset.references.size();
  Predictions pred;
  pred.point.resize(refs);
  pred.ensemble.resize(refs);
  pred.neutral.resize(refs);
  std::vector<std::vector<PairRecord>> recs(refs);

  parallel_for(refs, threads, [&](std::size_t r) {
    const Index n = dataset.references[r].image_count();
    const auto est = point_estimates(source, r);
    if (static_cast<Index>(est.size()) != n) {
      throw ValidationError("predictor_shape", "predictor image count differs from dataset for reference " +
                                                   dataset.references[r].id);
    }
    const auto series = ensemble_for_reference(source, r, n_passes, seed);
    Pcm point = Pcm::uniform(n, 0.5, prediction_weight), ens = Pcm::uniform(n, 0.5, prediction_weight);
    for (const auto& s : series) {
      const auto [ref, i, j] = s.pair;
      PairRecord rec;
      rec.pair = s.pair;
      rec.summary = summarize_passes(s);
      rec.var_ab = data_uncertainty(est[i], est[j]);
      point.set(i, j, preference_probability(est[i], est[j]), prediction_weight);
      ens.set(i, j, rec.summary.mu_m, prediction_weight);
      recs[r].push_back(rec);
    }
    pred.point[r] = std::move(point);
    pred.ensemble[r] = std::move(ens);
    pred.neutral[r] = Pcm::uniform(n);
  });
  for (auto& v : recs) pred.records.insert(pred.records.end(), v.begin(), v.end());
  normalize_model_uncertainty(pred.records);
  return pred;
}

const Pcm& starting_pcm(const Predictions& pred, Criterion c, std::size_t ref) {
  switch (c) {
    case Criterion::Data: return pred.point.at(ref);
    case Criterion::Model:
    case Criterion::Eic: return pred.ensemble.at(ref);
    case Criterion::Random: return pred.neutral.at(ref);
  }
  return pred.neutral.at(ref);
}

ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
  config.validate();
  if (dataset.references.empty()) throw ValidationError("no_references", "dataset has no references");
  for (const auto& r : dataset.references) {
    if (r.image_count() < 3) {
      throw ValidationError("too_small", "reference " + r.id + " needs at least 3 images");
    }
  }
  const std::size_t refs = dataset.references.size();
  const std::size_t n_crit = config.criteria.size();
  const std::size_t n_budget = config.budgets.size();

  // Ground-truth scores are fixed across repetitions.
  std::vector<BtResult> truth_fit(refs);
  for (std::size_t r = 0; r < refs; ++r) {
    try {
      truth_fit[r] = bt_fit(dataset.references[r].truth, config.bt);
    } catch (const Error& e) {
      throw ContextError("ground truth of reference " + dataset.references[r].id, e);
    }
  }
  Index total_images = 0;
  for (const auto& r : dataset.references) total_images += r.image_count();
  Vector truth_scores(total_images);
  {
    Index off = 0;
    for (std::size_t r = 0; r < refs; ++r) {
      truth_scores.segment(off, truth_fit[r].q.size()) = truth_fit[r].q;
      off += truth_fit[r].q.size();
    }
  }

  const bool need_eic =
      std::find(config.criteria.begin(), config.criteria.end(), Criterion::Eic) != config.criteria.end();

  std::vector<RepetitionOutcome> outcomes(static_cast<std::size_t>(config.repetitions));
  parallel_for(outcomes.size(), config.threads, [&](std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, "repetition", {rep});
    RepetitionOutcome& out = outcomes[rep];
    const auto alloc = [&](auto& m) { m.assign(n_crit, std::vector<std::decay_t<decltype(m[0][0])>>(n_budget)); };
    alloc(out.plcc);
    alloc(out.srocc);
    alloc(out.rmse);
    alloc(out.score_std);
    alloc(out.pairs);

    Predictions pred;
    try {
      pred = predict(dataset, config.passes, rep_seed, panel_weight(config.fill, config.subjects));
      if (need_eic) compute_eic(pred.records, pred.ensemble, config.delta, config.bt);
    } catch (const Error& e) {
      throw ContextError("prediction, repetition " + std::to_string(rep), e);
    }

    for (std::size_t c = 0; c < n_crit; ++c) {
      const Criterion crit = config.criteria[c];
      RngStream order_rng(rep_seed, "random-order");
      const auto ranked = rank_pairs(pred.records, crit, pred.ensemble, config.delta, config.bt, order_rng);
      for (std::size_t b = 0; b < n_budget; ++b) {
        const std::string where = "criterion " + std::string(to_string(crit)) + ", budget " +
                                  std::to_string(config.budgets[b]) + ", repetition " +
                                  std::to_string(rep);
        try {
          const SelectionPlan plan = select_budget(ranked, config.budgets[b], crit, config.seed);
          Vector scores(total_images);
          double std_sum = 0.0;
          Index off = 0;
          for (std::size_t r = 0; r < refs; ++r) {
            const Pcm filled = fill_pcm(starting_pcm(pred, crit, r), plan, r, dataset.references[r].truth,
                                        config.fill, config.subjects, rep_seed);
            const BtResult fit = bt_fit(filled, config.bt);
            scores.segment(off, fit.q.size()) = fit.q;
            std_sum += score_std(fit).sum();
            off += fit.q.size();
          }
          out.plcc[c][b] = metric_or_nan([&] { return plcc(scores, truth_scores); });
          out.srocc[c][b] = metric_or_nan([&] { return srocc(scores, truth_scores); });
          out.rmse[c][b] = rmse(scores, truth_scores);
          out.score_std[c][b] = std_sum / static_cast<double>(total_images);
          out.pairs[c][b] = plan.selected.size();
        } catch (const Error& e) {
          throw ContextError(where, e);
        }
      }
    }
  });

  ExperimentResult result;
  result.config = config;
  result.total_pairs = dataset.total_pairs();
  for (std::size_t c = 0; c < n_crit; ++c) {
    for (std::size_t b = 0; b < n_budget; ++b) {
      std::vector<double> pl, sr, rm, sd;
      for (const auto& o : outcomes) {
        pl.push_back(o.plcc[c][b]);
        sr.push_back(o.srocc[c][b]);
        rm.push_back(o.rmse[c][b]);
        sd.push_back(o.score_std[c][b]);
      }
      ExperimentRow row;
      row.criterion = config.criteria[c];
      row.budget = config.budgets[b];
      row.pairs = outcomes.front().pairs[c][b];
      row.trials = row.pairs * static_cast<std::size_t>(config.subjects);
      row.plcc = summarize(pl);
      row.srocc = summarize(sr);
      row.rmse = summarize(rm);
      row.score_std = summarize(sd);
      result.rows.push_back(row);
    }
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    const auto na = to_string(a.criterion), nb = to_string(b.criterion);
    if (na != nb) return na < nb;
    return a.budget < b.budget;
  });
  return result;
}

}  // namespace lbps
