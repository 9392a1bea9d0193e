#include "lbps/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lbps/error.hpp"

namespace lbps::io {

using nlohmann::json;

namespace {

constexpr const char* kPcmHeader = "ref_id,i_id,j_id,p,w";
constexpr const char* kEnsembleHeader = "ref_id,image_id,pass,mu,sigma";
constexpr const char* kPlanMagic = "# lbps-plan v";
constexpr const char* kPlanHeader = "rank,ref_id,i_id,j_id";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path.string());
  return in;
}

double parse_real(const std::string& field, const std::string& what, const fs::path& file,
                  std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ValidationError("malformed_row", "field '" + what + "' is not a finite number: '" + field + "'",
                          file.string(), line);
  }
  return v;
}

std::uint64_t parse_count(const std::string& field, const std::string& what, const fs::path& file,
                          std::size_t line) {
  std::uint64_t v = 0;
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), last, v);
  if (field.empty() || ec != std::errc{} || ptr != last) {
    throw ValidationError("malformed_row", "field '" + what + "' is not a non-negative integer: '" + field + "'",
                          file.string(), line);
  }
  return v;
}

void check_id(const std::string& id, const std::string& what, const fs::path& file, std::size_t line) {
  const bool ok = !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
  if (!ok) {
    throw ValidationError("malformed_row", "invalid " + what + " '" + id + "'", file.string(), line);
  }
}

// Writes through a temporary file and renames, so readers never see a torn file.
void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file", path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed", path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into place (" + ec.message() + ")", path.string());
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ValidationError("malformed_json", e.what(), path.string(), line);
  }
}

template <typename T>
T json_field(const json& obj, const char* key, const fs::path& file) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError("missing_field", std::string("missing field '") + key + "'", file.string(), 0);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("malformed_field", std::string("field '") + key + "' has the wrong type",
                          file.string(), 0);
  }
}

void check_version(const json& doc, const char* format, const fs::path& file) {
  if (json_field<std::string>(doc, "format", file) != format) {
    throw ValidationError("wrong_format", std::string("expected format '") + format + "'", file.string(), 0);
  }
  const int v = json_field<int>(doc, "version", file);
  if (v != kFormatVersion) {
    throw ValidationError("version_mismatch",
                          "unsupported version " + std::to_string(v) + " (expected " +
                              std::to_string(kFormatVersion) + ")",
                          file.string(), 0);
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_fraction(double x) {
  std::string s = format_double(x);
  if (s.find_first_of("eE") != std::string::npos) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", x);
    s = buf;
    while (s.back() == '0') s.pop_back();
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += ".";
    dot = s.size() - 1;
  }
  while (s.size() - dot - 1 < 2) s += "0";
  return s;
}

// ---------------------------------------------------------------- PCM CSV

std::map<std::string, PcmFragment> read_pcm_rows(const fs::path& path) {
  auto in = open_in(path);
  std::map<std::string, PcmFragment> out;
  std::string raw;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = strip_cr(raw);
    if (!header) {
      if (text != kPcmHeader) {
        throw ValidationError("bad_header", std::string("expected header '") + kPcmHeader + "'",
                              path.string(), line);
      }
      header = true;
      continue;
    }
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 5) {
      throw ValidationError("malformed_row", "expected 5 fields, got " + std::to_string(f.size()),
                            path.string(), line);
    }
    check_id(f[0], "ref_id", path, line);
    check_id(f[1], "i_id", path, line);
    check_id(f[2], "j_id", path, line);
    if (f[1] == f[2]) throw ValidationError("self_pair", "row compares an image with itself", path.string(), line);
    const double p = parse_real(f[3], "p", path, line);
    const double w = parse_real(f[4], "w", path, line);
    if (p < 0.0 || p > 1.0) throw ValidationError("probability_range", "p outside [0,1]", path.string(), line);
    if (w < 0.0) throw ValidationError("negative_weight", "w must be non-negative", path.string(), line);
    auto& frag = out[f[0]];
    if (frag.first_line == 0) frag.first_line = line;
    const auto [it, fresh] = frag.entries.try_emplace({f[1], f[2]}, PcmEntry{p, w, line});
    if (!fresh) {
      throw ValidationError("duplicate_entry",
                            "pair (" + f[1] + "," + f[2] + ") already given on line " +
                                std::to_string(it->second.line),
                            path.string(), line);
    }
  }
  if (!header) throw ValidationError("bad_header", "empty file", path.string(), 0);
  return out;
}

std::vector<std::string> fragment_ids(const PcmFragment& fragment) {
  std::set<std::string> ids;
  for (const auto& [key, e] : fragment.entries) {
    ids.insert(key.first);
    ids.insert(key.second);
  }
  return {ids.begin(), ids.end()};
}

Pcm assemble_pcm(const PcmFragment& fragment, const std::vector<std::string>& image_ids,
                 const std::string& file) {
  std::map<std::string, Index> index;
  for (std::size_t k = 0; k < image_ids.size(); ++k) index[image_ids[k]] = static_cast<Index>(k);
  const auto n = static_cast<Index>(image_ids.size());

  std::set<std::string> row_ids, col_ids;
  for (const auto& [key, e] : fragment.entries) {
    for (const auto* id : {&key.first, &key.second}) {
      if (!index.contains(*id)) {
        throw ValidationError("unknown_id", "image id '" + *id + "' is not declared for this reference", file,
                              e.line);
      }
    }
    row_ids.insert(key.first);
    col_ids.insert(key.second);
  }
  if (row_ids != col_ids) {
    std::string odd;
    for (const auto& id : row_ids) {
      if (!col_ids.contains(id)) odd = id;
    }
    for (const auto& id : col_ids) {
      if (!row_ids.contains(id)) odd = id;
    }
    throw ValidationError("non_square", "row and column id sets differ (e.g. '" + odd + "')", file,
                          fragment.first_line);
  }

  Pcm pcm;
  pcm.p = Matrix::Constant(n, n, 0.5);
  pcm.w = Matrix::Zero(n, n);
  for (const auto& [key, e] : fragment.entries) {
    const auto it = fragment.entries.find({key.second, key.first});
    if (it == fragment.entries.end()) {
      throw ValidationError("complement_missing",
                            "pair (" + key.first + "," + key.second + ") has no (" + key.second + "," +
                                key.first + ") row",
                            file, e.line);
    }
    const PcmEntry& back = it->second;
    if (std::abs(e.p + back.p - 1.0) > 1e-9) {
      throw ValidationError("complement_violation",
                            "p(" + key.first + "," + key.second + ") + p(" + key.second + "," + key.first +
                                ") = " + format_double(e.p + back.p) + " != 1",
                            file, std::max(e.line, back.line));
    }
    if (e.w != back.w) {
      throw ValidationError("weight_asymmetry",
                            "w(" + key.first + "," + key.second + ") != w(" + key.second + "," + key.first + ")",
                            file, std::max(e.line, back.line));
    }
    const Index i = index.at(key.first), j = index.at(key.second);
    pcm.p(i, j) = e.p;
    pcm.w(i, j) = e.w;
  }
  return pcm;
}

void write_pcm_rows(std::ostream& out, const std::string& ref_id, const std::vector<std::string>& image_ids,
                    const Pcm& pcm) {
  const Index n = pcm.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j || pcm.w(i, j) <= 0.0) continue;
      out << ref_id << ',' << image_ids[i] << ',' << image_ids[j] << ',' << format_double(pcm.p(i, j)) << ','
          << format_double(pcm.w(i, j)) << '\n';
    }
  }
}

void write_pcm_csv(const fs::path& path, const std::vector<std::string>& ref_ids,
                   const std::vector<std::vector<std::string>>& image_ids, const std::vector<Pcm>& pcms) {
  std::ostringstream out;
  out << kPcmHeader << '\n';
  for (std::size_t r = 0; r < pcms.size(); ++r) write_pcm_rows(out, ref_ids[r], image_ids[r], pcms[r]);
  write_atomic(path, out.str());
}

// ---------------------------------------------------------------- world

void write_world(const fs::path& path, const SyntheticWorld& world, const std::vector<Reference>& refs) {
  json doc;
  doc["format"] = "lbps-world";
  doc["version"] = kFormatVersion;
  doc["seed"] = world.seed;
  doc["noise"] = {{"mean", world.noise.mean_noise},
                  {"sigma", world.noise.sigma_noise},
                  {"pass", world.noise.pass_jitter}};
  json jrefs = json::array();
  for (std::size_t r = 0; r < world.truth.size(); ++r) {
    json imgs = json::array();
    for (std::size_t k = 0; k < world.truth[r].size(); ++k) {
      imgs.push_back({{"id", refs[r].images[k]},
                      {"mu", world.truth[r][k].mu},
                      {"sigma", world.truth[r][k].sigma},
                      {"bias", world.bias[r][k]}});
    }
    jrefs.push_back({{"id", refs[r].id}, {"images", imgs}});
  }
  doc["references"] = jrefs;
  write_atomic(path, doc.dump(1) + "\n");
}

SyntheticWorld read_world(const fs::path& path, const std::vector<Reference>& refs) {
  const json doc = read_json(path);
  check_version(doc, "lbps-world", path);
  SyntheticWorld w;
  w.seed = json_field<std::uint64_t>(doc, "seed", path);
  const json noise = json_field<json>(doc, "noise", path);
  w.noise = {json_field<double>(noise, "mean", path), json_field<double>(noise, "sigma", path),
             json_field<double>(noise, "pass", path)};
  const json jrefs = json_field<json>(doc, "references", path);
  if (!jrefs.is_array()) throw ValidationError("malformed_field", "references must be an array", path.string(), 0);
  std::map<std::string, const json*> by_id;
  for (const auto& jr : jrefs) by_id[json_field<std::string>(jr, "id", path)] = &jr;
  for (const auto& ref : refs) {
    const auto it = by_id.find(ref.id);
    if (it == by_id.end()) {
      throw ValidationError("unknown_id", "world lacks reference '" + ref.id + "'", path.string(), 0);
    }
    std::map<std::string, std::array<double, 3>> imgs;
    for (const auto& ji : json_field<json>(*it->second, "images", path)) {
      imgs[json_field<std::string>(ji, "id", path)] = {json_field<double>(ji, "mu", path),
                                                       json_field<double>(ji, "sigma", path),
                                                       json_field<double>(ji, "bias", path)};
    }
    if (imgs.size() != ref.images.size()) {
      throw ValidationError("unknown_id", "world image set differs for reference '" + ref.id + "'", path.string(), 0);
    }
    std::vector<QualityEstimate> truth;
    std::vector<double> bias;
    for (const auto& id : ref.images) {
      const auto jt = imgs.find(id);
      if (jt == imgs.end()) {
        throw ValidationError("unknown_id", "world lacks image '" + id + "' of reference '" + ref.id + "'",
                              path.string(), 0);
      }
      const auto [mu, sigma, b] = jt->second;
      if (!std::isfinite(mu) || !std::isfinite(b) || !(sigma > 0) || !std::isfinite(sigma)) {
        throw ValidationError("malformed_field", "invalid quality for image '" + id + "'", path.string(), 0);
      }
      truth.push_back({mu, sigma});
      bias.push_back(b);
    }
    w.truth.push_back(std::move(truth));
    w.bias.push_back(std::move(bias));
  }
  try {
    w.validate();
  } catch (const Error& e) {
    throw ValidationError("malformed_field", e.what(), path.string(), 0);
  }
  return w;
}

// ---------------------------------------------------------------- ensemble

void write_ensemble(const fs::path& path, const EnsembleTable& table, const std::vector<Reference>& refs) {
  std::ostringstream out;
  out << kEnsembleHeader << '\n';
  for (std::size_t r = 0; r < table.reference_count(); ++r) {
    for (Index p = 0; p < table.mu[r].rows(); ++p) {
      for (Index k = 0; k < table.mu[r].cols(); ++k) {
        out << refs[r].id << ',' << refs[r].images[k] << ',' << p << ',' << format_double(table.mu[r](p, k))
            << ',' << format_double(table.sigma[r](p, k)) << '\n';
      }
    }
  }
  write_atomic(path, out.str());
}

EnsembleTable read_ensemble(const fs::path& path, const std::vector<Reference>& refs) {
  auto in = open_in(path);
  struct Cell {
    double mu, sigma;
  };
  std::vector<std::map<std::pair<std::uint64_t, Index>, Cell>> cells(refs.size());
  std::map<std::string, std::size_t> ref_index;
  for (std::size_t r = 0; r < refs.size(); ++r) ref_index[refs[r].id] = r;

  std::string raw;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = strip_cr(raw);
    if (!header) {
      if (text != kEnsembleHeader) {
        throw ValidationError("bad_header", std::string("expected header '") + kEnsembleHeader + "'",
                              path.string(), line);
      }
      header = true;
      continue;
    }
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 5) {
      throw ValidationError("malformed_row", "expected 5 fields, got " + std::to_string(f.size()), path.string(),
                            line);
    }
    const auto rit = ref_index.find(f[0]);
    if (rit == ref_index.end()) throw ValidationError("unknown_id", "unknown reference '" + f[0] + "'", path.string(), line);
    const auto k = refs[rit->second].image_index(f[1]);
    if (!k) throw ValidationError("unknown_id", "unknown image '" + f[1] + "'", path.string(), line);
    const std::uint64_t pass = parse_count(f[2], "pass", path, line);
    const double mu = parse_real(f[3], "mu", path, line);
    const double sigma = parse_real(f[4], "sigma", path, line);
    if (sigma < 0.0) throw ValidationError("malformed_row", "sigma must be non-negative", path.string(), line);
    if (!cells[rit->second].try_emplace({pass, *k}, Cell{mu, sigma}).second) {
      throw ValidationError("duplicate_entry", "duplicate (image, pass) record", path.string(), line);
    }
  }
  if (!header) throw ValidationError("bad_header", "empty file", path.string(), 0);

  EnsembleTable table;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const Index n = refs[r].image_count();
    std::uint64_t passes = 0;
    for (const auto& [key, c] : cells[r]) passes = std::max(passes, key.first + 1);
    if (cells[r].size() != passes * static_cast<std::uint64_t>(n)) {
      throw ValidationError("ensemble_gap",
                            "reference '" + refs[r].id + "': pass indices must be dense 0..n-1 with every image present",
                            path.string(), 0);
    }
    Matrix mu(static_cast<Index>(passes), n), sg(static_cast<Index>(passes), n);
    for (const auto& [key, c] : cells[r]) {
      mu(static_cast<Index>(key.first), key.second) = c.mu;
      sg(static_cast<Index>(key.first), key.second) = c.sigma;
    }
    table.mu.push_back(std::move(mu));
    table.sigma.push_back(std::move(sg));
  }
  return table;
}

// ---------------------------------------------------------------- dataset

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("missing manifest", manifest_path.string());
  const json doc = read_json(manifest_path);
  check_version(doc, "lbps-dataset", manifest_path);

  Dataset ds;
  ds.root = dir;
  ds.id = json_field<std::string>(doc, "dataset_id", manifest_path);
  const json jrefs = json_field<json>(doc, "references", manifest_path);
  if (!jrefs.is_array() || jrefs.empty()) {
    throw ValidationError("no_references", "manifest lists no references", manifest_path.string(), 0);
  }

  std::map<std::string, PcmFragment> judgments;
  std::string judgments_file;
  if (doc.contains("judgments")) {
    judgments_file = (dir / json_field<std::string>(doc, "judgments", manifest_path)).string();
    judgments = read_pcm_rows(judgments_file);
  }

  std::set<std::string> seen_refs;
  for (const auto& jr : jrefs) {
    Reference ref;
    ref.id = json_field<std::string>(jr, "id", manifest_path);
    check_id(ref.id, "reference id", manifest_path, 0);
    if (!seen_refs.insert(ref.id).second) {
      throw ValidationError("duplicate_entry", "duplicate reference id '" + ref.id + "'", manifest_path.string(), 0);
    }
    ref.images = json_field<std::vector<std::string>>(jr, "images", manifest_path);
    std::sort(ref.images.begin(), ref.images.end());
    if (std::adjacent_find(ref.images.begin(), ref.images.end()) != ref.images.end()) {
      throw ValidationError("duplicate_entry", "duplicate image id in reference '" + ref.id + "'",
                            manifest_path.string(), 0);
    }
    if (ref.images.size() < 2) {
      throw ValidationError("too_small", "reference '" + ref.id + "' needs at least two images",
                            manifest_path.string(), 0);
    }
    for (const auto& id : ref.images) check_id(id, "image id", manifest_path, 0);

    if (jr.contains("truth")) {
      const fs::path truth_path = dir / json_field<std::string>(jr, "truth", manifest_path);
      if (!fs::exists(truth_path)) throw IoError("missing ground-truth file", truth_path.string());
      auto frags = read_pcm_rows(truth_path);
      for (const auto& [rid, frag] : frags) {
        if (rid != ref.id) {
          throw ValidationError("unknown_id", "row belongs to reference '" + rid + "', expected '" + ref.id + "'",
                                truth_path.string(), frag.first_line);
        }
      }
      ref.truth = assemble_pcm(frags[ref.id], ref.images, truth_path.string());
    } else if (judgments.contains(ref.id)) {
      ref.truth = assemble_pcm(judgments.at(ref.id), ref.images, judgments_file);
    } else {
      throw ValidationError("missing_field", "reference '" + ref.id + "' has no ground truth",
                            manifest_path.string(), 0);
    }
    ds.references.push_back(std::move(ref));
  }
  std::sort(ds.references.begin(), ds.references.end(),
            [](const Reference& a, const Reference& b) { return a.id < b.id; });

  if (doc.contains("world")) {
    const fs::path p = dir / json_field<std::string>(doc, "world", manifest_path);
    if (!fs::exists(p)) throw IoError("missing world file", p.string());
    ds.world = read_world(p, ds.references);
  }
  if (doc.contains("ensemble")) {
    const fs::path p = dir / json_field<std::string>(doc, "ensemble", manifest_path);
    if (!fs::exists(p)) throw IoError("missing ensemble file", p.string());
    ds.ensemble = read_ensemble(p, ds.references);
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "truth", ec);
  if (ec) throw IoError("cannot create directory", (dir / "truth").string());
  json doc;
  doc["format"] = "lbps-dataset";
  doc["version"] = kFormatVersion;
  doc["dataset_id"] = dataset.id;
  json jrefs = json::array();
  for (const auto& ref : dataset.references) {
    const std::string rel = "truth/" + ref.id + ".csv";
    jrefs.push_back({{"id", ref.id}, {"images", ref.images}, {"truth", rel}});
    write_pcm_csv(dir / rel, {ref.id}, {ref.images}, {ref.truth});
  }
  doc["references"] = jrefs;
  if (dataset.world) {
    doc["world"] = "world.json";
    write_world(dir / "world.json", *dataset.world, dataset.references);
  }
  if (dataset.ensemble) {
    doc["ensemble"] = "ensemble.csv";
    write_ensemble(dir / "ensemble.csv", *dataset.ensemble, dataset.references);
  }
  write_atomic(dir / "manifest.json", doc.dump(1) + "\n");
}

// ---------------------------------------------------------------- plans

void write_selection(const SelectionPlan& plan, const Dataset& dataset, const fs::path& path) {
  std::ostringstream out;
  out << kPlanMagic << kFormatVersion << '\n';
  out << "# criterion=" << to_string(plan.criterion) << " budget=" << format_double(plan.budget)
      << " seed=" << plan.seed << " total_pairs=" << plan.total_pairs << '\n';
  out << kPlanHeader << '\n';
  for (std::size_t k = 0; k < plan.selected.size(); ++k) {
    const auto& key = plan.selected[k];
    const auto& ref = dataset.references.at(key.ref);
    out << k << ',' << ref.id << ',' << ref.images.at(key.i) << ',' << ref.images.at(key.j) << '\n';
  }
  write_atomic(path, out.str());
}

SelectionPlan load_selection(const fs::path& path, const Dataset& dataset) {
  auto in = open_in(path);
  const std::string file = path.string();
  std::string raw;
  std::size_t line = 0;
  const auto next = [&](std::string& s) {
    if (!std::getline(in, raw)) return false;
    ++line;
    s = strip_cr(raw);
    return true;
  };
  std::string text;
  if (!next(text) || text.rfind(kPlanMagic, 0) != 0) {
    throw ValidationError("bad_header", "not a selection plan", file, line);
  }
  if (text != kPlanMagic + std::to_string(kFormatVersion)) {
    throw ValidationError("version_mismatch", "unsupported plan version '" + text + "'", file, line);
  }
  SelectionPlan plan;
  if (!next(text) || text.rfind("# ", 0) != 0) throw ValidationError("bad_header", "missing plan metadata", file, line);
  std::map<std::string, std::string> meta;
  for (const auto& tok : split(text.substr(2), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ValidationError("bad_header", "malformed metadata '" + tok + "'", file, line);
    meta[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"criterion", "budget", "seed", "total_pairs"}) {
    if (!meta.contains(key)) throw ValidationError("bad_header", std::string("missing metadata '") + key + "'", file, line);
  }
  try {
    plan.criterion = parse_criterion(meta["criterion"]);
  } catch (const Error& e) {
    throw ValidationError("bad_header", e.what(), file, line);
  }
  plan.budget = parse_real(meta["budget"], "budget", path, line);
  if (plan.budget < 0.0 || plan.budget > 1.0) throw ValidationError("bad_header", "budget outside [0,1]", file, line);
  plan.seed = parse_count(meta["seed"], "seed", path, line);
  plan.total_pairs = parse_count(meta["total_pairs"], "total_pairs", path, line);
  if (plan.total_pairs != dataset.total_pairs()) {
    throw ValidationError("dataset_mismatch",
                          "plan was made for " + std::to_string(plan.total_pairs) + " pairs, dataset has " +
                              std::to_string(dataset.total_pairs()),
                          file, line);
  }
  if (!next(text) || text != kPlanHeader) {
    throw ValidationError("bad_header", std::string("expected header '") + kPlanHeader + "'", file, line);
  }
  std::set<PairKey> seen;
  while (next(text)) {
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 4) throw ValidationError("malformed_row", "expected 4 fields", file, line);
    if (parse_count(f[0], "rank", path, line) != plan.selected.size()) {
      throw ValidationError("malformed_row", "ranks must be consecutive from 0", file, line);
    }
    const auto r = dataset.reference_index(f[1]);
    if (!r) throw ValidationError("unknown_id", "unknown reference '" + f[1] + "'", file, line);
    const auto& ref = dataset.references[*r];
    const auto a = ref.image_index(f[2]);
    const auto b = ref.image_index(f[3]);
    if (!a || !b) {
      throw ValidationError("unknown_id", "image id absent from reference '" + ref.id + "'", file, line);
    }
    if (*a >= *b) throw ValidationError("malformed_row", "pair must be listed as i_id < j_id", file, line);
    const PairKey key{*r, *a, *b};
    if (!seen.insert(key).second) throw ValidationError("duplicate_entry", "pair listed twice", file, line);
    plan.selected.push_back(key);
  }
  if (plan.selected.size() != static_cast<std::size_t>(std::llround(plan.budget * static_cast<double>(plan.total_pairs)))) {
    throw ValidationError("malformed_row", "pair count does not match budget", file, line);
  }
  return plan;
}

// ---------------------------------------------------------------- results

std::string format_results(const ExperimentResult& result, const std::string& dataset_id) {
  const auto g6 = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  const auto& c = result.config;
  std::ostringstream out;
  out << "# lbps-results v" << kFormatVersion << '\n';
  out << "# dataset=" << dataset_id << " total_pairs=" << result.total_pairs << '\n';
  out << "# criteria=";
  for (std::size_t k = 0; k < c.criteria.size(); ++k) out << (k ? "," : "") << to_string(c.criteria[k]);
  out << " budgets=";
  for (std::size_t k = 0; k < c.budgets.size(); ++k) out << (k ? "," : "") << format_fraction(c.budgets[k]);
  out << " fill=" << to_string(c.fill) << " subjects=" << c.subjects << " repetitions=" << c.repetitions
      << " passes=" << c.passes << " delta=" << format_double(c.delta) << " seed=" << c.seed << '\n';
  out << "criterion\tbudget\tpairs\ttrials\tplcc_mean\tplcc_std\tsrocc_mean\tsrocc_std\trmse_mean\trmse_std"
         "\tscore_std_mean\tscore_std_std\n";
  for (const auto& r : result.rows) {
    out << to_string(r.criterion) << '\t' << format_fraction(r.budget) << '\t' << r.pairs << '\t' << r.trials;
    for (const auto* m : {&r.plcc, &r.srocc, &r.rmse, &r.score_std}) out << '\t' << g6(m->mean) << '\t' << g6(m->std);
    out << '\n';
  }
  return out.str();
}

void write_results(const ExperimentResult& result, const std::string& dataset_id, const fs::path& path) {
  write_atomic(path, format_results(result, dataset_id));
}

void write_scores(const fs::path& path, const std::vector<std::string>& ref_ids,
                  const std::vector<std::vector<std::string>>& image_ids, const std::vector<BtResult>& fits) {
  std::ostringstream out;
  out << "ref_id,image_id,score,std\n";
  for (std::size_t r = 0; r < fits.size(); ++r) {
    const Vector sd = score_std(fits[r]);
    for (Index k = 0; k < fits[r].q.size(); ++k) {
      out << ref_ids[r] << ',' << image_ids[r][k] << ',' << format_double(fits[r].q(k)) << ','
          << format_double(sd(k)) << '\n';
    }
  }
  write_atomic(path, out.str());
}

}  // namespace lbps::io
