// lbps: synthetic worlds, pair selection, simulated shortened tests,
// Bradley-Terry aggregation and the human judgment service.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lbps/dataset.hpp"
#include "lbps/error.hpp"
#include "lbps/experiment.hpp"
#include "lbps/io.hpp"
#include "lbps/selection.hpp"
#include "lbps/service.hpp"
#include "lbps/session.hpp"
#include "lbps/world_defaults.hpp"

namespace {

using namespace lbps;

constexpr int kExitValidation = 2;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_fraction(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

int cmd_genworld(std::size_t refs, Index images, std::uint64_t seed, double noise_mu, double noise_sigma,
                 double noise_pass, double spread, double sigma_min, double sigma_max, std::size_t ensemble_passes,
                 const std::string& out) {
  WorldSpec spec;
  spec.references = refs;
  spec.images_per_reference = images;
  spec.seed = seed;
  spec.noise = {noise_mu, noise_sigma, noise_pass};
  spec.quality_spread = spread;
  spec.sigma_min = sigma_min;
  spec.sigma_max = sigma_max;
  if (refs < 1) throw InvalidArgument("--refs must be >= 1");
  if (noise_mu < 0 || noise_sigma < 0 || noise_pass < 0) throw InvalidArgument("noise scales must be >= 0");
  Dataset ds = make_synthetic_dataset(generate_world(spec));
  if (ensemble_passes > 0) {
    // Export per-pass estimates as an external predictor would.
    EnsembleTable table;
    for (std::size_t r = 0; r < refs; ++r) {
      Matrix mu(static_cast<Index>(ensemble_passes), images), sg(static_cast<Index>(ensemble_passes), images);
      for (std::size_t p = 0; p < ensemble_passes; ++p) {
        RngStream rng(seed, "exported-pass", {r, p});
        for (Index k = 0; k < images; ++k) {
          const auto e = synthetic_pass(*ds.world, r, k, rng);
          mu(static_cast<Index>(p), k) = e.mu;
          sg(static_cast<Index>(p), k) = e.sigma;
        }
      }
      table.mu.push_back(std::move(mu));
      table.sigma.push_back(std::move(sg));
    }
    ds.ensemble = std::move(table);
  }
  io::save_dataset(ds, out);
  std::cout << "wrote " << refs << " references x " << images << " images to " << out << "\n";
  return 0;
}

int cmd_select(const std::string& dataset_dir, const std::string& criterion, double budget, std::size_t passes,
               double delta, std::uint64_t seed, int subjects, int threads, const std::string& out) {
  const Criterion crit = parse_criterion(criterion);
  if (!(budget >= 0.0 && budget <= 1.0)) throw InvalidArgument("--budget must lie in [0, 1]");
  if (passes < 2) throw InvalidArgument("--passes must be >= 2");
  if (!(delta >= 0.0)) throw InvalidArgument("--delta must be >= 0");
  if (subjects < 1) throw InvalidArgument("--subjects must be >= 1");
  const Dataset ds = io::load_dataset(dataset_dir);
  Predictions pred = predict(ds, passes, seed, static_cast<double>(subjects), threads);
  RngStream order_rng(seed, "random-order");
  const auto ranked = rank_pairs(pred.records, crit, pred.ensemble, delta, BtOptions{}, order_rng, threads);
  const SelectionPlan plan = select_budget(ranked, budget, crit, seed);
  io::write_selection(plan, ds, out);
  std::cout << "selected " << plan.selected.size() << " of " << plan.total_pairs << " pairs (" << criterion
            << ") -> " << out << "\n";
  return 0;
}

int cmd_simulate(const std::string& dataset_dir, const std::string& criteria, const std::string& budgets,
                 const std::string& fill, int subjects, int reps, std::size_t passes, double delta,
                 std::uint64_t seed, int threads, const std::string& out) {
  ExperimentConfig cfg;
  cfg.criteria.clear();
  for (const auto& c : split_list(criteria)) cfg.criteria.push_back(parse_criterion(c));
  cfg.budgets.clear();
  for (const auto& b : split_list(budgets)) cfg.budgets.push_back(parse_fraction(b));
  cfg.fill = parse_fill_mode(fill);
  cfg.subjects = subjects;
  cfg.repetitions = reps;
  cfg.passes = passes;
  cfg.delta = delta;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.validate();
  const Dataset ds = io::load_dataset(dataset_dir);
  const ExperimentResult result = run_experiment(ds, cfg);
  io::write_results(result, ds.id, out);
  std::cout << io::format_results(result, ds.id);
  return 0;
}

int cmd_aggregate(const std::string& pcm_path, const std::string& out) {
  const auto frags = io::read_pcm_rows(pcm_path);
  if (frags.empty()) throw ValidationError("no_references", "PCM file has no rows", pcm_path, 0);
  std::vector<std::string> ref_ids;
  std::vector<std::vector<std::string>> image_ids;
  std::vector<Pcm> pcms;
  for (const auto& [ref, frag] : frags) {
    ref_ids.push_back(ref);
    image_ids.push_back(io::fragment_ids(frag));
    pcms.push_back(io::assemble_pcm(frag, image_ids.back(), pcm_path));
  }
  const auto fits = bt_fit_batch(pcms);
  io::write_scores(out, ref_ids, image_ids, fits);
  std::cout << "scored " << ref_ids.size() << " reference(s) -> " << out << "\n";
  return 0;
}

int cmd_serve(const std::string& dataset_dir, const std::string& plan_path, const std::string& host, int port,
              const std::string& store_dir) {
  // Signals are consumed by a dedicated thread so shutdown runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  const Dataset ds = io::load_dataset(dataset_dir);
  SelectionPlan plan = io::load_selection(plan_path, ds);
  const std::string plan_id = std::filesystem::path(plan_path).stem().string();
  session::SessionStore store(ds, std::move(plan), plan_id, store_dir);
  service::SessionService svc(store);
  const int bound = svc.bind(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    svc.stop();
  });
  waiter.detach();
  svc.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-based pairwise sampling for subjective quality tests"};
  app.require_subcommand(1);

  const WorldDefaults wd;

  auto* gen = app.add_subcommand("genworld", "Generate a synthetic dataset with a stochastic predictor");
  std::size_t g_refs = 15, g_ens = 0;
  Index g_images = 16;
  std::uint64_t g_seed = 1;
  double g_mu = wd.noise.mean_noise, g_sigma = wd.noise.sigma_noise, g_pass = wd.noise.pass_jitter;
  double g_spread = wd.quality_spread, g_smin = wd.sigma_min, g_smax = wd.sigma_max;
  std::string g_out;
  gen->add_option("--refs", g_refs, "Number of references")->capture_default_str();
  gen->add_option("--images-per-ref", g_images, "Distorted images per reference")->capture_default_str();
  gen->add_option("--seed", g_seed, "World seed")->capture_default_str();
  gen->add_option("--noise-mu", g_mu, "Per-image bias sd of the predictor")->capture_default_str();
  gen->add_option("--noise-sigma", g_sigma, "Per-pass log-sd jitter of predicted sigma")->capture_default_str();
  gen->add_option("--noise-pass", g_pass, "Per-pass jitter sd of predicted mu")->capture_default_str();
  gen->add_option("--quality-spread", g_spread, "Sd of true qualities within a reference")->capture_default_str();
  gen->add_option("--sigma-min", g_smin, "Lower bound of true quality sd")->capture_default_str();
  gen->add_option("--sigma-max", g_smax, "Upper bound of true quality sd")->capture_default_str();
  gen->add_option("--export-ensemble", g_ens, "Also write N passes as ensemble.csv (0 = no)")->capture_default_str();
  gen->add_option("--out", g_out, "Output dataset directory")->required();

  auto* sel = app.add_subcommand("select", "Rank pairs and cut the ranking at a budget");
  std::string s_dataset, s_crit, s_out;
  double s_budget = 0.1, s_delta = kDefaultDelta;
  std::size_t s_passes = kDefaultPasses;
  std::uint64_t s_seed = 1;
  int s_threads = 1, s_subjects = kDefaultSubjects;
  sel->add_option("--dataset", s_dataset, "Dataset directory")->required();
  sel->add_option("--criterion", s_crit, "data|model|eic|random")->required();
  sel->add_option("--budget", s_budget, "Fraction of pairs deferred to humans")->capture_default_str();
  sel->add_option("--passes", s_passes, "Stochastic predictor passes")->capture_default_str();
  sel->add_option("--delta", s_delta, "Minimum EIC perturbation")->capture_default_str();
  sel->add_option("--seed", s_seed, "Seed")->capture_default_str();
  sel->add_option("--subjects", s_subjects, "Planned subjects per pair (weight of predicted entries)")
      ->capture_default_str();
  sel->add_option("--threads", s_threads, "Worker threads")->capture_default_str();
  sel->add_option("--out", s_out, "Plan file")->required();

  auto* sim = app.add_subcommand("simulate", "Simulate shortened tests and report PLCC/SROCC/RMSE");
  std::string m_dataset, m_crit = "data,model,eic,random", m_budgets = "0,0.1,0.2,0.3,0.4,0.5", m_fill = "empirical",
                         m_out;
  int m_subjects = kDefaultSubjects, m_reps = kDefaultRepetitions, m_threads = 1;
  std::size_t m_passes = kDefaultPasses;
  double m_delta = kDefaultDelta;
  std::uint64_t m_seed = 1;
  sim->add_option("--dataset", m_dataset, "Dataset directory")->required();
  sim->add_option("--criteria", m_crit, "Comma-separated criteria")->capture_default_str();
  sim->add_option("--budgets", m_budgets, "Comma-separated budget fractions")->capture_default_str();
  sim->add_option("--fill", m_fill, "oracle|empirical")->capture_default_str();
  sim->add_option("--subjects", m_subjects, "Simulated subjects per selected pair")->capture_default_str();
  sim->add_option("--reps", m_reps, "Repetitions")->capture_default_str();
  sim->add_option("--passes", m_passes, "Stochastic predictor passes")->capture_default_str();
  sim->add_option("--delta", m_delta, "Minimum EIC perturbation")->capture_default_str();
  sim->add_option("--seed", m_seed, "Master seed")->capture_default_str();
  sim->add_option("--threads", m_threads, "Worker threads (results do not depend on it)")->capture_default_str();
  sim->add_option("--out", m_out, "Results file")->required();

  auto* agg = app.add_subcommand("aggregate", "Bradley-Terry scores from a PCM file");
  std::string a_pcm, a_out;
  agg->add_option("--pcm", a_pcm, "PCM CSV")->required();
  agg->add_option("--out", a_out, "Scores CSV")->required();

  auto* srv = app.add_subcommand("serve", "Serve a plan to human subjects");
  std::string v_dataset, v_plan, v_store, v_host = "127.0.0.1";
  int v_port = 8080;
  srv->add_option("--dataset", v_dataset, "Dataset directory")->required();
  srv->add_option("--plan", v_plan, "Plan file")->required();
  srv->add_option("--port", v_port, "TCP port (0 = any free port)")->capture_default_str();
  srv->add_option("--host", v_host, "Bind address")->capture_default_str();
  srv->add_option("--store", v_store, "Judgment store directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      return cmd_genworld(g_refs, g_images, g_seed, g_mu, g_sigma, g_pass, g_spread, g_smin, g_smax, g_ens, g_out);
    }
    if (*sel) return cmd_select(s_dataset, s_crit, s_budget, s_passes, s_delta, s_seed, s_subjects, s_threads, s_out);
    if (*sim) {
      return cmd_simulate(m_dataset, m_crit, m_budgets, m_fill, m_subjects, m_reps, m_passes, m_delta, m_seed,
                          m_threads, m_out);
    }
    if (*agg) return cmd_aggregate(a_pcm, a_out);
    if (*srv) return cmd_serve(v_dataset, v_plan, v_host, v_port, v_store);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
