#ifndef LBPS_SESSION_HPP
#define LBPS_SESSION_HPP

// Human judgment sessions over a selection plan, persisted as one metadata
// file plus one append-only judgment log per session.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lbps/dataset.hpp"
#include "lbps/selection.hpp"

namespace lbps::session {

namespace fs = std::filesystem;

struct Session {
  std::string id;
  std::string subject;
  std::uint64_t seed = 0;
  std::vector<std::size_t> order;  // presentation order: indices into plan.selected
  std::vector<bool> flip;          // per presentation slot: true = j shown on the left
  std::size_t cursor = 0;

  bool complete() const { return cursor >= order.size(); }
};

/// What the subject sees for one trial.
struct PairView {
  std::string ref_id;
  std::string left_id;
  std::string right_id;
  std::size_t index = 0;  // 0-based position in the session
  std::size_t total = 0;
};

struct JudgmentRecord {
  std::string session;
  PairKey pair;
  Index chosen = 0;
  Index left = 0;
  std::int64_t timestamp_ms = 0;
  std::uint64_t seq = 0;
};

/// Win counts per planned pair: first = wins of i, second = wins of j.
using WinCounts = std::map<PairKey, std::pair<std::uint64_t, std::uint64_t>>;

/// Presentation order and flips derived from a seed.
Session make_session(std::string id, std::string subject, std::uint64_t seed, std::size_t plan_size);

/// Replays every judgment log under `store_dir` and counts wins per plan pair.
/// Throws ValidationError (citing the byte offset) on a corrupt record.
WinCounts replay_counts(const Dataset& dataset, const SelectionPlan& plan, const fs::path& store_dir);

/// Per-reference PCM fragments from counts: p = wins_i / total, w = total;
/// pairs without judgments keep weight 0.
std::vector<Pcm> counts_to_pcms(const Dataset& dataset, const WinCounts& counts);

class SessionStore {
public:
  /// Opens (or creates) a store and recovers every session from disk.
  SessionStore(const Dataset& dataset, SelectionPlan plan, std::string plan_id, fs::path store_dir);

  const std::string& plan_id() const { return plan_id_; }
  std::size_t plan_size() const { return plan_.selected.size(); }

  /// Persists the session before returning. Throws NotFoundError on an
  /// unknown plan id (empty = the loaded plan).
  Session create_session(const std::string& subject, std::uint64_t seed, const std::string& plan_id = {});

  /// Current pair, or nullopt when the session is complete.
  std::optional<PairView> next_pair(const std::string& session_id) const;

  /// Appends and fsyncs the judgment, then advances the cursor. `a_id`/`b_id`
  /// name the pair in either order. Returns the new cursor.
  std::size_t record_judgment(const std::string& session_id, const std::string& ref_id, const std::string& a_id,
                              const std::string& b_id, const std::string& chosen_id,
                              std::optional<std::size_t> expected_index = std::nullopt);

  Session snapshot(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  WinCounts counts() const;
  std::vector<Pcm> export_pcm() const { return counts_to_pcms(dataset_, counts()); }

  const Dataset& dataset() const { return dataset_; }
  const SelectionPlan& plan() const { return plan_; }

private:
  struct Entry {
    mutable std::mutex mu;
    Session session;
    std::vector<JudgmentRecord> records;
  };

  Entry& entry(const std::string& id) const;
  void recover();

  const Dataset& dataset_;
  SelectionPlan plan_;
  std::string plan_id_;
  fs::path dir_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
};

}  // namespace lbps::session

#endif  // LBPS_SESSION_HPP
