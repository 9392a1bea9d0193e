#ifndef LBPS_IO_HPP
#define LBPS_IO_HPP

// On-disk formats. Grammars are documented in docs/formats.md.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lbps/dataset.hpp"
#include "lbps/experiment.hpp"
#include "lbps/selection.hpp"

namespace lbps::io {

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Budget fraction with at least two decimals ("0.10", "0.025", "1.00").
std::string format_fraction(double x);

/// Rows of a PCM CSV (ref_id,i_id,j_id,p,w) for one reference, keyed by
/// (i_id, j_id).
struct PcmEntry {
  double p = 0.5;
  double w = 0.0;
  std::size_t line = 0;
};
struct PcmFragment {
  std::map<std::pair<std::string, std::string>, PcmEntry> entries;
  std::size_t first_line = 0;
};

/// Parses a PCM CSV, grouping rows by ref_id. Only syntax, ranges, self pairs
/// and duplicates are checked here.
std::map<std::string, PcmFragment> read_pcm_rows(const fs::path& path);

/// Builds a dense PCM over `image_ids` (sorted) from a fragment, enforcing
/// squareness, complement and weight symmetry. Pairs absent from the file get
/// weight 0.
Pcm assemble_pcm(const PcmFragment& fragment, const std::vector<std::string>& image_ids,
                 const std::string& file);

/// Sorted union of the ids that appear in a fragment.
std::vector<std::string> fragment_ids(const PcmFragment& fragment);

/// Writes both directions of every positive-weight off-diagonal entry.
void write_pcm_rows(std::ostream& out, const std::string& ref_id,
                    const std::vector<std::string>& image_ids, const Pcm& pcm);
void write_pcm_csv(const fs::path& path, const std::vector<std::string>& ref_ids,
                   const std::vector<std::vector<std::string>>& image_ids,
                   const std::vector<Pcm>& pcms);

/// Manifest + ground truth (+ optional world / ensemble). Image ids are mapped
/// to dense indices in sorted order.
Dataset load_dataset(const fs::path& dir);

/// Writes manifest.json, truth/<ref>.csv, and world.json / ensemble.csv when
/// present.
void save_dataset(const Dataset& dataset, const fs::path& dir);

SyntheticWorld read_world(const fs::path& path, const std::vector<Reference>& refs);
void write_world(const fs::path& path, const SyntheticWorld& world, const std::vector<Reference>& refs);

EnsembleTable read_ensemble(const fs::path& path, const std::vector<Reference>& refs);
void write_ensemble(const fs::path& path, const EnsembleTable& table, const std::vector<Reference>& refs);

void write_selection(const SelectionPlan& plan, const Dataset& dataset, const fs::path& path);
/// Validates version, ordering, duplicates and every id against `dataset`.
SelectionPlan load_selection(const fs::path& path, const Dataset& dataset);

void write_results(const ExperimentResult& result, const std::string& dataset_id, const fs::path& path);
std::string format_results(const ExperimentResult& result, const std::string& dataset_id);

/// ref_id,image_id,score,std
void write_scores(const fs::path& path, const std::vector<std::string>& ref_ids,
                  const std::vector<std::vector<std::string>>& image_ids,
                  const std::vector<BtResult>& fits);

}  // namespace lbps::io

#endif  // LBPS_IO_HPP
