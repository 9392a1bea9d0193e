#include "lbps/uncertainty.hpp"

#include <cmath>
#include <string>

#include "lbps/error.hpp"
#include "lbps/parallel.hpp"

namespace lbps {

EnsembleSummary summarize_passes(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("summarize_passes: need at least two passes");
  double mean = 0.0;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("summarize_passes: value outside [0,1]");
    mean += v;
  }
  const double n = static_cast<double>(values.size());
  mean /= n;
  // One correction pass removes the rounding of the plain sum, so constant
  // series come back with their exact value and zero variance.
  double resid = 0.0;
  for (double v : values) resid += v - mean;
  mean += resid / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / n, values.size()};
}

void SyntheticWorld::validate() const {
  if (bias.size() != truth.size()) throw InvalidArgument("world: bias/truth shape mismatch");
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (bias[r].size() != truth[r].size()) throw InvalidArgument("world: bias/truth shape mismatch");
    for (const auto& e : truth[r]) check_estimate(e);
  }
  if (noise.mean_noise < 0 || noise.sigma_noise < 0 || noise.pass_jitter < 0) {
    throw InvalidArgument("world: noise scales must be non-negative");
  }
}

SyntheticWorld SyntheticWorld::from_truth(std::vector<std::vector<QualityEstimate>> truth,
                                          NoiseModel noise, std::uint64_t seed) {
  SyntheticWorld w;
  w.truth = std::move(truth);
  w.noise = noise;
  w.seed = seed;
  w.bias.resize(w.truth.size());
  for (std::size_t r = 0; r < w.truth.size(); ++r) {
    RngStream rng(seed, "bias", {r});
    for (std::size_t k = 0; k < w.truth[r].size(); ++k) {
      w.bias[r].push_back(noise.mean_noise * rng.normal());
    }
  }
  w.validate();
  return w;
}

SyntheticWorld generate_world(const WorldSpec& spec) {
  if (spec.images_per_reference < 2) throw InvalidArgument("world needs at least two images per reference");
  if (!(spec.sigma_min > 0) || spec.sigma_max < spec.sigma_min) {
    throw InvalidArgument("world: need 0 < sigma_min <= sigma_max");
  }
  std::vector<std::vector<QualityEstimate>> truth(spec.references);
  for (std::size_t r = 0; r < spec.references; ++r) {
    RngStream rng(spec.seed, "truth", {r});
    for (Index k = 0; k < spec.images_per_reference; ++k) {
      const double mu = spec.quality_spread * rng.normal();
      const double sigma = spec.sigma_min + (spec.sigma_max - spec.sigma_min) * rng.uniform();
      truth[r].push_back({mu, sigma});
    }
  }
  return SyntheticWorld::from_truth(std::move(truth), spec.noise, spec.seed);
}

QualityEstimate synthetic_pass(const SyntheticWorld& world, std::size_t ref, Index image,
                               RngStream& rng) {
  const auto& t = world.truth.at(ref).at(static_cast<std::size_t>(image));
  const double g = rng.normal();
  const double h = rng.normal();
  const double mu = t.mu + world.bias[ref][static_cast<std::size_t>(image)] +
                    g * world.noise.pass_jitter;
  const double sigma = std::max(t.sigma * std::exp(h * world.noise.sigma_noise), kSigmaFloor);
  return {mu, sigma};
}

namespace {

void check_image(const EnsembleSource& source, std::size_t ref, Index k) {
  const Index n = std::visit(
      [&](const auto* s) -> Index {
        using T = std::decay_t<decltype(*s)>;
        if (ref >= s->reference_count()) throw InvalidArgument("reference index out of range");
        if constexpr (std::is_same_v<T, SyntheticWorld>) {
          return s->image_count(ref);
        } else {
          return s->mu[ref].cols();
        }
      },
      source);
  if (k < 0 || k >= n) throw InvalidArgument("image index out of range");
}

}  // namespace

PassSeries pair_series(const EnsembleSource& source, std::size_t ref, Index a, Index b,
                       std::size_t n_passes, std::uint64_t seed) {
  if (n_passes < 2) throw InvalidArgument("n_passes must be at least 2");
  if (a == b) throw InvalidArgument("pair_series: images must differ");
  check_image(source, ref, a);
  check_image(source, ref, b);
  PassSeries out;
  out.pair = {ref, std::min(a, b), std::max(a, b)};
  out.values.reserve(n_passes);

  if (const auto* world = std::get_if<const SyntheticWorld*>(&source)) {
    const Index lo = std::min(a, b);
    const Index hi = std::max(a, b);
    RngStream rng(seed, "pass", {ref, static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)});
    for (std::size_t p = 0; p < n_passes; ++p) {
      const QualityEstimate e_lo = synthetic_pass(**world, ref, lo, rng);
      const QualityEstimate e_hi = synthetic_pass(**world, ref, hi, rng);
      out.values.push_back(a == lo ? preference_probability(e_lo, e_hi)
                                   : preference_probability(e_hi, e_lo));
    }
  } else {
    const auto& table = *std::get<const EnsembleTable*>(source);
    if (static_cast<std::size_t>(table.pass_count(ref)) < n_passes) {
      throw ValidationError("ensemble_short",
                            "ensemble has " + std::to_string(table.pass_count(ref)) +
                                " passes for reference " + std::to_string(ref) + ", " +
                                std::to_string(n_passes) + " requested");
    }
    const Matrix& mu = table.mu[ref];
    const Matrix& sg = table.sigma[ref];
    for (std::size_t p = 0; p < n_passes; ++p) {
      const auto r = static_cast<Index>(p);
      const QualityEstimate ea = make_estimate(mu(r, a), sg(r, a));
      const QualityEstimate eb = make_estimate(mu(r, b), sg(r, b));
      out.values.push_back(preference_probability(ea, eb));
    }
  }
  return out;
}

std::vector<PassSeries> ensemble_for_reference(const EnsembleSource& source, std::size_t ref,
                                               std::size_t n_passes, std::uint64_t seed) {
  if (n_passes < 2) throw InvalidArgument("n_passes must be at least 2");
  const Index n = std::visit(
      [&](const auto* s) -> Index {
        using T = std::decay_t<decltype(*s)>;
        if (ref >= s->reference_count()) throw InvalidArgument("reference index out of range");
        if constexpr (std::is_same_v<T, SyntheticWorld>) {
          return s->image_count(ref);
        } else {
          return s->mu[ref].cols();
        }
      },
      source);
  std::vector<PassSeries> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) out.push_back(pair_series(source, ref, i, j, n_passes, seed));
  }
  return out;
}

std::vector<PassSeries> ensemble_for_dataset(const EnsembleSource& source, std::size_t n_passes,
                                             std::uint64_t seed, int threads) {
  const std::size_t refs = std::visit([](const auto* s) { return s->reference_count(); }, source);
  std::vector<std::vector<PassSeries>> per_ref(refs);
  parallel_for(refs, threads, [&](std::size_t r) {
    per_ref[r] = ensemble_for_reference(source, r, n_passes, seed);
  });
  std::vector<PassSeries> out;
  for (auto& v : per_ref) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

std::vector<QualityEstimate> point_estimates(const EnsembleSource& source, std::size_t ref) {
  std::vector<QualityEstimate> out;
  if (const auto* world = std::get_if<const SyntheticWorld*>(&source)) {
    const auto& w = **world;
    for (std::size_t k = 0; k < w.truth.at(ref).size(); ++k) {
      out.push_back({w.truth[ref][k].mu + w.bias[ref][k], w.truth[ref][k].sigma});
    }
  } else {
    const auto& table = *std::get<const EnsembleTable*>(source);
    const Matrix& mu = table.mu.at(ref);
    const Matrix& sg = table.sigma.at(ref);
    for (Index k = 0; k < mu.cols(); ++k) {
      out.push_back(make_estimate(mu.col(k).mean(), std::sqrt(sg.col(k).squaredNorm() /
                                                              static_cast<double>(sg.rows()))));
    }
  }
  return out;
}

}  // namespace lbps
