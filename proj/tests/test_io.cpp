#include <gtest/gtest.h>

#include <cmath>

#include "lbps/dataset.hpp"
#include "lbps/error.hpp"
#include "lbps/experiment.hpp"
#include "lbps/io.hpp"
#include "lbps/world_defaults.hpp"
#include "support/tmpdir.hpp"

using namespace lbps;
using testing_support::slurp;
using testing_support::spit;
using testing_support::TempDir;

namespace {

Dataset make_ds(std::size_t refs = 3, Index images = 5, std::uint64_t seed = 17) {
  return make_synthetic_dataset(generate_world(default_world_spec(seed, refs, images)), "ds-test");
}

void write_min_dataset(const TempDir& dir, const std::string& pcm_csv) {
  spit(dir / "manifest.json",
       R"({"format":"lbps-dataset","version":1,"dataset_id":"mini",
           "references":[{"id":"r1","images":["a","b","c"],"truth":"truth.csv"}]})");
  spit(dir / "truth.csv", pcm_csv);
}

const char* kValidPcm =
    "ref_id,i_id,j_id,p,w\n"
    "r1,a,b,0.6,2\n"
    "r1,b,a,0.4,2\n"
    "r1,a,c,0.7,1\n"
    "r1,c,a,0.3,1\n"
    "r1,b,c,0.55,3\n"
    "r1,c,b,0.45,3\n";

template <typename F>
std::string validation_code(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.code();
  }
  return "<none>";
}

}  // namespace

TEST(Format, Numbers) {
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(io::format_fraction(0.1), "0.10");
  EXPECT_EQ(io::format_fraction(1.0), "1.00");
  EXPECT_EQ(io::format_fraction(0.025), "0.025");
}

TEST(Dataset, RoundTripSyntheticWorld) {
  TempDir dir("io-rt");
  Dataset ds = make_ds();
  EnsembleTable t;
  for (std::size_t r = 0; r < ds.references.size(); ++r) {
    t.mu.push_back(Matrix::Random(4, 5));
    t.sigma.push_back(Matrix::Random(4, 5).cwiseAbs());
  }
  ds.ensemble = t;
  io::save_dataset(ds, dir.path());
  const Dataset back = io::load_dataset(dir.path());
  EXPECT_EQ(back.id, ds.id);
  ASSERT_EQ(back.references.size(), ds.references.size());
  for (std::size_t r = 0; r < ds.references.size(); ++r) {
    EXPECT_EQ(back.references[r].images, ds.references[r].images);
    EXPECT_LT((back.references[r].truth.p - ds.references[r].truth.p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.references[r].truth.w, ds.references[r].truth.w);
    EXPECT_EQ(back.ensemble->mu[r], ds.ensemble->mu[r]);
    EXPECT_EQ(back.ensemble->sigma[r], ds.ensemble->sigma[r]);
    for (std::size_t k = 0; k < ds.world->truth[r].size(); ++k) {
      EXPECT_NEAR(back.world->truth[r][k].mu, ds.world->truth[r][k].mu, 1e-12);
      EXPECT_NEAR(back.world->truth[r][k].sigma, ds.world->truth[r][k].sigma, 1e-12);
      EXPECT_NEAR(back.world->bias[r][k], ds.world->bias[r][k], 1e-12);
    }
  }
  EXPECT_EQ(back.world->noise.pass_jitter, ds.world->noise.pass_jitter);
  EXPECT_EQ(back.world->seed, ds.world->seed);
}

TEST(Dataset, MinimalPcm) {
  TempDir dir("io-min");
  write_min_dataset(dir, kValidPcm);
  const Dataset ds = io::load_dataset(dir.path());
  const Pcm& t = ds.references[0].truth;
  EXPECT_EQ(t.p(0, 1), 0.6);
  EXPECT_EQ(t.w(1, 2), 3.0);
  EXPECT_EQ(t.p(2, 0), 0.3);
  EXPECT_THROW(ds.predictor(), ValidationError);
}

TEST(Dataset, ComplementViolationCitesEntry) {
  TempDir dir("io-comp");
  write_min_dataset(dir,
                    "ref_id,i_id,j_id,p,w\n"
                    "r1,a,b,0.6,1\n"
                    "r1,b,a,0.5,1\n"
                    "r1,a,c,0.7,1\n"
                    "r1,c,a,0.3,1\n"
                    "r1,b,c,0.5,1\n"
                    "r1,c,b,0.5,1\n");
  try {
    io::load_dataset(dir.path());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.code(), "complement_violation");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("(b,a)"), std::string::npos) << e.what();
  }
}

TEST(Dataset, StructuralErrors) {
  TempDir dir("io-err");
  spit(dir / "manifest.json", R"({"format":"lbps-dataset","version":1,"dataset_id":"x","references":[]})");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "no_references");
  spit(dir / "manifest.json", R"({"format":"lbps-dataset","version":2,"dataset_id":"x","references":[]})");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "version_mismatch");
  TempDir empty("io-none");
  EXPECT_THROW(io::load_dataset(empty.path()), IoError);

  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,b,0.6,1\nr1,b,c,0.5,1\nr1,c,a,0.5,1\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "complement_missing");
  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,b,0.6,1\nr1,b,a,0.4,1\nr1,a,c,0.5,1\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "non_square");
  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,a,0.5,1\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "self_pair");
  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,b,0.6,1\nr1,b,a,0.4,2\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "weight_asymmetry");
  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,b,0.6,1\nr1,a,b,0.6,1\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "duplicate_entry");
  write_min_dataset(dir, "ref_id,i_id,j_id,p,w\nr1,a,z,0.6,1\nr1,z,a,0.4,1\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "unknown_id");
  write_min_dataset(dir, "i,j,p\n");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "bad_header");
}

TEST(Dataset, SingleFieldCorruptionIsRejected) {
  // Every data field of a valid file replaced by a value that can never be
  // valid there must produce a ValidationError (never a crash or a silent load).
  TempDir dir("io-fuzz");
  const std::vector<std::string> lines{"r1,a,b,0.6,2", "r1,b,a,0.4,2", "r1,a,c,0.7,1",
                                       "r1,c,a,0.3,1", "r1,b,c,0.55,3", "r1,c,b,0.45,3"};
  const std::vector<std::vector<std::string>> bad{
      {"", "r 1", "zz"}, {"", "a a", "q"}, {"", "b,", "q"}, {"", "x", "-0.1", "1.01", "nan", "inf"}, {"", "x", "-1", "nan", "inf"}};
  for (std::size_t l = 0; l < lines.size(); ++l) {
    std::vector<std::string> fields;
    std::stringstream ss(lines[l]);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      for (const auto& value : bad[f]) {
        std::string text = "ref_id,i_id,j_id,p,w\n";
        for (std::size_t m = 0; m < lines.size(); ++m) {
          if (m != l) {
            text += lines[m] + "\n";
            continue;
          }
          auto copy = fields;
          copy[f] = value;
          for (std::size_t k = 0; k < copy.size(); ++k) text += (k ? "," : "") + copy[k];
          text += "\n";
        }
        write_min_dataset(dir, text);
        EXPECT_NE(validation_code([&] { io::load_dataset(dir.path()); }), "<none>")
            << "line " << l << " field " << f << " value '" << value << "'";
      }
    }
  }
}

TEST(Plan, RoundTrip120) {
  TempDir dir("io-plan");
  // 16 images give 120 pairs in one reference.
  const Dataset ds = make_ds(1, 16);
  ASSERT_EQ(ds.total_pairs(), 120u);
  std::vector<PairKey> ranked;
  for (Index i = 0; i < 16; ++i) {
    for (Index j = i + 1; j < 16; ++j) ranked.push_back({0, i, j});
  }
  RngStream rng(4);
  rng.shuffle(ranked);
  for (double b : {1.0, 0.1, 0.0}) {
    const auto plan = select_budget(ranked, b, Criterion::Random, 4242);
    io::write_selection(plan, ds, dir / "plan.csv");
    const auto back = io::load_selection(dir / "plan.csv", ds);
    EXPECT_EQ(back.selected, plan.selected);
    EXPECT_EQ(back.criterion, plan.criterion);
    EXPECT_EQ(back.budget, plan.budget);
    EXPECT_EQ(back.seed, plan.seed);
    EXPECT_EQ(back.total_pairs, plan.total_pairs);
  }
}

TEST(Plan, Validation) {
  TempDir dir("io-planv");
  const Dataset ds = make_ds(1, 4);
  const std::string head = "# lbps-plan v1\n# criterion=eic budget=0.5 seed=0 total_pairs=6\nrank,ref_id,i_id,j_id\n";
  spit(dir / "p.csv", head + "0,ref000,img00,img01\n1,ref000,img00,img02\n2,ref000,img00,img99\n");
  EXPECT_EQ(validation_code([&] { io::load_selection(dir / "p.csv", ds); }), "unknown_id");
  spit(dir / "p.csv", head + "0,ref000,img00,img01\n1,ref000,img00,img01\n2,ref000,img00,img02\n");
  EXPECT_EQ(validation_code([&] { io::load_selection(dir / "p.csv", ds); }), "duplicate_entry");
  spit(dir / "p.csv", "# lbps-plan v9\n");
  EXPECT_EQ(validation_code([&] { io::load_selection(dir / "p.csv", ds); }), "version_mismatch");
  spit(dir / "p.csv", "# lbps-plan v1\n# criterion=eic budget=0.5 seed=0 total_pairs=7\nrank,ref_id,i_id,j_id\n");
  EXPECT_EQ(validation_code([&] { io::load_selection(dir / "p.csv", ds); }), "dataset_mismatch");
  spit(dir / "p.csv", head + "0,ref000,img00,img01\n");
  EXPECT_EQ(validation_code([&] { io::load_selection(dir / "p.csv", ds); }), "malformed_row");
}

TEST(Results, FormatContract) {
  const Dataset ds = make_ds(2, 5);
  ExperimentConfig cfg;
  cfg.criteria = {Criterion::Eic};
  cfg.budgets = {0.1};
  cfg.repetitions = 2;
  cfg.passes = 10;
  cfg.seed = 5;
  const auto res = run_experiment(ds, cfg);
  const std::string text = io::format_results(res, ds.id);
  std::vector<std::string> data_rows;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    if (!line.empty() && line[0] != '#' && line.rfind("criterion\t", 0) != 0) data_rows.push_back(line);
  }
  ASSERT_EQ(data_rows.size(), 1u);
  EXPECT_EQ(data_rows[0].rfind("eic\t0.10\t2\t30\t", 0), 0u) << data_rows[0];
  EXPECT_NE(text.find("seed=5"), std::string::npos);

  TempDir dir("io-res");
  io::write_results(res, ds.id, dir / "a.txt");
  io::write_results(run_experiment(ds, cfg), ds.id, dir / "b.txt");
  EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
}

TEST(Ensemble, GapIsRejected) {
  TempDir dir("io-ens");
  write_min_dataset(dir, kValidPcm);
  spit(dir / "ensemble.csv", "ref_id,image_id,pass,mu,sigma\nr1,a,0,1,1\nr1,b,0,1,1\nr1,c,0,1,1\nr1,a,2,1,1\n");
  spit(dir / "manifest.json",
       R"({"format":"lbps-dataset","version":1,"dataset_id":"mini","ensemble":"ensemble.csv",
           "references":[{"id":"r1","images":["a","b","c"],"truth":"truth.csv"}]})");
  EXPECT_EQ(validation_code([&] { io::load_dataset(dir.path()); }), "ensemble_gap");
}
