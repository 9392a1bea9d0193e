#include "lbps/session.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lbps/error.hpp"
#include "lbps/rng.hpp"

namespace lbps::session {

using nlohmann::json;

namespace {

void fsync_path(const fs::path& path, bool directory) {
  const int fd = ::open(path.c_str(), directory ? O_RDONLY | O_DIRECTORY : O_RDONLY);
  if (fd < 0) throw IoError("cannot open for sync", path.string());
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw IoError("fsync failed", path.string());
}

void write_durable(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write", tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed", tmp.string());
  }
  fsync_path(tmp, false);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed", path.string());
  fsync_path(path.parent_path(), true);
}

void append_durable(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw IoError("cannot open log", path.string());
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      ::close(fd);
      throw IoError("append failed", path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw IoError("fsync failed", path.string());
}

std::string session_file(const std::string& id) { return id + ".json"; }
std::string log_file(const std::string& id) { return id + ".log"; }

bool valid_session_id(const std::string& id) {
  return !id.empty() && id.size() < 64 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

// Reads a judgment log. A final line without a newline is a write that was
// never acknowledged; it is dropped (and truncated away when `repair`).
std::vector<JudgmentRecord> read_log(const fs::path& path, const Session& s, const Dataset& dataset,
                                     const SelectionPlan& plan, bool repair) {
  std::vector<JudgmentRecord> out;
  if (!fs::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read log", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::size_t offset = 0;
  while (offset < text.size()) {
    const std::size_t nl = text.find('\n', offset);
    if (nl == std::string::npos) {
      if (repair) fs::resize_file(path, offset);
      break;
    }
    const std::string line = text.substr(offset, nl - offset);
    const auto corrupt = [&](const std::string& why) {
      return ValidationError("corrupt_log", why + " at byte offset " + std::to_string(offset), path.string(),
                             out.size() + 1);
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw corrupt("unparseable record");
    }
    JudgmentRecord r;
    r.session = s.id;
    try {
      r.seq = j.at("seq").get<std::uint64_t>();
      const auto ref = dataset.reference_index(j.at("ref").get<std::string>());
      if (!ref) throw corrupt("unknown reference");
      const auto& reference = dataset.references[*ref];
      const auto i = reference.image_index(j.at("i").get<std::string>());
      const auto jj = reference.image_index(j.at("j").get<std::string>());
      const auto chosen = reference.image_index(j.at("chosen").get<std::string>());
      const auto left = reference.image_index(j.at("left").get<std::string>());
      if (!i || !jj || !chosen || !left) throw corrupt("unknown image");
      r.pair = {*ref, *i, *jj};
      r.chosen = *chosen;
      r.left = *left;
      r.timestamp_ms = j.at("ts").get<std::int64_t>();
    } catch (const json::exception&) {
      throw corrupt("malformed record");
    }
    if (r.seq != out.size()) throw corrupt("sequence gap");
    if (r.seq >= s.order.size() || plan.selected[s.order[r.seq]] != r.pair) throw corrupt("record does not match presentation order");
    if (r.chosen != r.pair.i && r.chosen != r.pair.j) throw corrupt("chosen image not in pair");
    out.push_back(r);
    offset = nl + 1;
  }
  return out;
}

Session read_session_meta(const fs::path& path, std::size_t plan_size, std::string* plan_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read session", path.string());
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "lbps-session" || j.at("version").get<int>() != 1) {
      throw ValidationError("version_mismatch", "unsupported session file", path.string(), 0);
    }
    *plan_id = j.at("plan_id").get<std::string>();
    return make_session(j.at("id").get<std::string>(), j.at("subject").get<std::string>(),
                        j.at("seed").get<std::uint64_t>(), plan_size);
  } catch (const json::exception& e) {
    throw ValidationError("malformed_json", e.what(), path.string(), 0);
  }
}

}  // namespace

Session make_session(std::string id, std::string subject, std::uint64_t seed, std::size_t plan_size) {
  Session s;
  s.id = std::move(id);
  s.subject = std::move(subject);
  s.seed = seed;
  s.order.resize(plan_size);
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  RngStream order_rng(seed, "presentation-order");
  order_rng.shuffle(s.order);
  RngStream flip_rng(seed, "presentation-flip");
  for (std::size_t k = 0; k < plan_size; ++k) s.flip.push_back(flip_rng.bernoulli(0.5));
  return s;
}

WinCounts replay_counts(const Dataset& dataset, const SelectionPlan& plan, const fs::path& store_dir) {
  WinCounts counts;
  for (const auto& key : plan.selected) counts[key] = {0, 0};
  const fs::path sessions = store_dir / "sessions";
  if (!fs::exists(sessions)) return counts;
  std::vector<fs::path> metas;
  for (const auto& e : fs::directory_iterator(sessions)) {
    if (e.path().extension() == ".json") metas.push_back(e.path());
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& meta : metas) {
    std::string pid;
    const Session s = read_session_meta(meta, plan.selected.size(), &pid);
    for (const auto& r : read_log(store_dir / "judgments" / log_file(s.id), s, dataset, plan, false)) {
      auto& c = counts[r.pair];
      (r.chosen == r.pair.i ? c.first : c.second) += 1;
    }
  }
  return counts;
}

std::vector<Pcm> counts_to_pcms(const Dataset& dataset, const WinCounts& counts) {
  std::vector<Pcm> out;
  for (const auto& ref : dataset.references) {
    Pcm pcm;
    pcm.p = Matrix::Constant(ref.image_count(), ref.image_count(), 0.5);
    pcm.w = Matrix::Zero(ref.image_count(), ref.image_count());
    out.push_back(std::move(pcm));
  }
  for (const auto& [key, c] : counts) {
    const std::uint64_t total = c.first + c.second;
    if (total == 0) continue;
    out[key.ref].set(key.i, key.j, static_cast<double>(c.first) / static_cast<double>(total),
                     static_cast<double>(total));
  }
  return out;
}

SessionStore::SessionStore(const Dataset& dataset, SelectionPlan plan, std::string plan_id, fs::path store_dir)
    : dataset_(dataset), plan_(std::move(plan)), plan_id_(std::move(plan_id)), dir_(std::move(store_dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "sessions", ec);
  fs::create_directories(dir_ / "judgments", ec);
  if (ec) throw IoError("cannot create store", dir_.string());
  recover();
}

void SessionStore::recover() {
  for (const auto& e : fs::directory_iterator(dir_ / "sessions")) {
    if (e.path().extension() != ".json") {
      // Leftover temporary from an interrupted create: never acknowledged.
      if (e.path().extension() == ".tmp") fs::remove(e.path());
      continue;
    }
    std::string pid;
    auto entry = std::make_unique<Entry>();
    entry->session = read_session_meta(e.path(), plan_.selected.size(), &pid);
    if (pid != plan_id_) {
      throw ValidationError("plan_mismatch", "session belongs to plan '" + pid + "'", e.path().string(), 0);
    }
    entry->records = read_log(dir_ / "judgments" / log_file(entry->session.id), entry->session, dataset_, plan_, true);
    entry->session.cursor = entry->records.size();
    sessions_.emplace(entry->session.id, std::move(entry));
  }
}

SessionStore::Entry& SessionStore::entry(const std::string& id) const {
  if (!valid_session_id(id)) throw NotFoundError("unknown session '" + id + "'");
  std::shared_lock lock(map_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return *it->second;
}

Session SessionStore::create_session(const std::string& subject, std::uint64_t seed, const std::string& plan_id) {
  if (!plan_id.empty() && plan_id != plan_id_) throw NotFoundError("unknown plan '" + plan_id + "'");
  if (subject.empty() || subject.size() > 128) throw InvalidArgument("subject id must be 1-128 characters");
  std::unique_lock lock(map_mu_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06zu", sessions_.size() + 1);
  std::string id = buf;
  while (sessions_.contains(id)) id += "x";
  auto e = std::make_unique<Entry>();
  e->session = make_session(id, subject, seed, plan_.selected.size());
  json meta = {{"format", "lbps-session"}, {"version", 1},    {"id", id},
               {"subject", subject},       {"seed", seed},    {"plan_id", plan_id_},
               {"created_ms", now_ms()}};
  write_durable(dir_ / "sessions" / session_file(id), meta.dump() + "\n");
  Session copy = e->session;
  sessions_.emplace(id, std::move(e));
  return copy;
}

std::optional<PairView> SessionStore::next_pair(const std::string& session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  const Session& s = e.session;
  if (s.complete()) return std::nullopt;
  const PairKey key = plan_.selected[s.order[s.cursor]];
  const auto& ref = dataset_.references[key.ref];
  PairView v;
  v.ref_id = ref.id;
  v.left_id = ref.images[s.flip[s.cursor] ? key.j : key.i];
  v.right_id = ref.images[s.flip[s.cursor] ? key.i : key.j];
  v.index = s.cursor;
  v.total = s.order.size();
  return v;
}

std::size_t SessionStore::record_judgment(const std::string& session_id, const std::string& ref_id,
                                          const std::string& a_id, const std::string& b_id,
                                          const std::string& chosen_id, std::optional<std::size_t> expected_index) {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  Session& s = e.session;
  if (s.complete()) throw ConflictError("session is already complete");
  if (expected_index && *expected_index != s.cursor) {
    throw ConflictError("judgment for position " + std::to_string(*expected_index) + ", session is at " +
                        std::to_string(s.cursor));
  }
  const PairKey key = plan_.selected[s.order[s.cursor]];
  const auto& ref = dataset_.references[key.ref];
  const std::string& id_i = ref.images[key.i];
  const std::string& id_j = ref.images[key.j];
  const bool same_pair = ref_id == ref.id && ((a_id == id_i && b_id == id_j) || (a_id == id_j && b_id == id_i));
  if (!same_pair) throw ConflictError("pair is not the session's current pair");
  if (chosen_id != id_i && chosen_id != id_j) {
    throw ValidationError("unknown_image", "chosen image '" + chosen_id + "' is not part of the pair");
  }
  JudgmentRecord r;
  r.session = s.id;
  r.pair = key;
  r.chosen = chosen_id == id_i ? key.i : key.j;
  r.left = s.flip[s.cursor] ? key.j : key.i;
  r.timestamp_ms = now_ms();
  r.seq = s.cursor;
  const json line = {{"seq", r.seq},          {"ref", ref.id},
                     {"i", id_i},             {"j", id_j},
                     {"chosen", chosen_id},   {"left", ref.images[r.left]},
                     {"ts", r.timestamp_ms}};
  append_durable(dir_ / "judgments" / log_file(s.id), line.dump() + "\n");
  e.records.push_back(r);
  return ++s.cursor;
}

Session SessionStore::snapshot(const std::string& session_id) const {
  Entry& e = entry(session_id);
  std::lock_guard lock(e.mu);
  return e.session;
}

std::vector<std::string> SessionStore::session_ids() const {
  std::shared_lock lock(map_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : sessions_) ids.push_back(id);
  return ids;
}

WinCounts SessionStore::counts() const {
  WinCounts counts;
  for (const auto& key : plan_.selected) counts[key] = {0, 0};
  std::shared_lock lock(map_mu_);
  for (const auto& [id, e] : sessions_) {
    std::lock_guard elock(e->mu);
    for (const auto& r : e->records) {
      auto& c = counts[r.pair];
      (r.chosen == r.pair.i ? c.first : c.second) += 1;
    }
  }
  return counts;
}

}  // namespace lbps::session
