#ifndef LBPS_DATASET_HPP
#define LBPS_DATASET_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lbps/bradley_terry.hpp"
#include "lbps/error.hpp"
#include "lbps/uncertainty.hpp"

namespace lbps {

/// One reference (content) with its distorted images, indexed densely in
/// sorted id order, and its ground-truth PCM.
struct Reference {
  std::string id;
  std::vector<std::string> images;
  Pcm truth;

  Index image_count() const { return static_cast<Index>(images.size()); }
  std::optional<Index> image_index(const std::string& image_id) const {
    for (std::size_t k = 0; k < images.size(); ++k) {
      if (images[k] == image_id) return static_cast<Index>(k);
    }
    return std::nullopt;
  }
};

struct Dataset {
  std::string id;
  std::vector<Reference> references;          // sorted by id
  std::optional<SyntheticWorld> world;        // synthetic predictor, if any
  std::optional<EnsembleTable> ensemble;      // external predictor passes, if any
  std::filesystem::path root;

  std::size_t total_pairs() const {
    std::size_t n = 0;
    for (const auto& r : references) {
      n += static_cast<std::size_t>(r.image_count() * (r.image_count() - 1) / 2);
    }
    return n;
  }

  std::optional<std::size_t> reference_index(const std::string& ref_id) const {
    for (std::size_t k = 0; k < references.size(); ++k) {
      if (references[k].id == ref_id) return k;
    }
    return std::nullopt;
  }

  /// External ensemble wins over the synthetic world when both are present.
  EnsembleSource predictor() const {
    if (ensemble) return &*ensemble;
    if (world) return &*world;
    throw ValidationError("no_predictor", "dataset has neither an ensemble file nor a synthetic world");
  }
};

/// Ground-truth PCMs of a synthetic world: Thurstone probabilities of the true
/// qualities, weight 1 per pair.
std::vector<Pcm> truth_pcms(const SyntheticWorld& world);

/// Dataset wrapping a synthetic world; ids are "refNNN" / "imgNN".
Dataset make_synthetic_dataset(SyntheticWorld world, std::string dataset_id = "synthetic");

}  // namespace lbps

#endif  // LBPS_DATASET_HPP
