#ifndef LBPS_WORLD_DEFAULTS_HPP
#define LBPS_WORLD_DEFAULTS_HPP

#include "lbps/uncertainty.hpp"

namespace lbps {

/// Default synthetic world. The predictor noise scales are fixed; the true
/// quality spread and sigma range were chosen with tools/calibrate_world so
/// that the predictor alone (budget 0) reaches a PLCC between 0.6 and 0.9.
struct WorldDefaults {
  NoiseModel noise{0.6, 0.2, 0.3};
  double quality_spread = 0.8;
  double sigma_min = 0.5;
  double sigma_max = 1.5;
};

inline WorldSpec default_world_spec(std::uint64_t seed, std::size_t references = 15, Index images = 16) {
  const WorldDefaults d;
  WorldSpec s;
  s.references = references;
  s.images_per_reference = images;
  s.quality_spread = d.quality_spread;
  s.sigma_min = d.sigma_min;
  s.sigma_max = d.sigma_max;
  s.noise = d.noise;
  s.seed = seed;
  return s;
}

}  // namespace lbps

#endif  // LBPS_WORLD_DEFAULTS_HPP
