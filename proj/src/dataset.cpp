#include "lbps/dataset.hpp"

#include <cstdio>

namespace lbps {

namespace {

std::string numbered(const char* prefix, std::size_t k, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, k);
  return buf;
}

}  // namespace

std::vector<Pcm> truth_pcms(const SyntheticWorld& world) {
  std::vector<Pcm> out;
  for (const auto& images : world.truth) {
    const auto n = static_cast<Index>(images.size());
    Pcm pcm = Pcm::uniform(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        pcm.set(i, j, preference_probability(images[i], images[j]), 1.0);
      }
    }
    out.push_back(std::move(pcm));
  }
  return out;
}

Dataset make_synthetic_dataset(SyntheticWorld world, std::string dataset_id) {
  Dataset ds;
  ds.id = std::move(dataset_id);
  auto truths = truth_pcms(world);
  for (std::size_t r = 0; r < world.truth.size(); ++r) {
    Reference ref;
    ref.id = numbered("ref", r, 3);
    for (std::size_t k = 0; k < world.truth[r].size(); ++k) ref.images.push_back(numbered("img", k, 2));
    ref.truth = std::move(truths[r]);
    ds.references.push_back(std::move(ref));
  }
  ds.world = std::move(world);
  return ds;
}

}  // namespace lbps
