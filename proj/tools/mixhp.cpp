// Command-line front end: fit / tune / simulate / bench / metrics.
// Every number printed by a subcommand is also present in its artifact;
// all randomness flows from --seed.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixhp/artifacts.hpp"
#include "mixhp/csv.hpp"
#include "mixhp/em.hpp"
#include "mixhp/simlab.hpp"
#include "mixhp/tuning.hpp"

namespace fs = std::filesystem;
using namespace mixhp;

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<VarianceMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<VarianceMode> out;
  for (const std::string& name : names) {
    if (name == "unequal")
      out.push_back(VarianceMode::unequal);
    else if (name == "equal")
      out.push_back(VarianceMode::equal);
    else
      throw CLI::ValidationError("--modes", "unknown variance mode '" + name + "'");
  }
  return out;
}

struct CommonFitFlags {
  std::uint64_t seed = 0;
  int restarts = 10;
  int workers = 0;

  FitConfig config() const {
    FitConfig cfg;
    cfg.seed = seed;
    cfg.n_restarts = restarts;
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonFitFlags& flags) {
  cmd->add_option("--seed", flags.seed, "RNG seed (default 0)");
  cmd->add_option("--restarts", flags.restarts, "independent EM starts per fit");
  cmd->add_option("--workers", flags.workers,
                  "worker threads (0 = MIXHP_WORKERS env or all cores)");
}

int cmd_fit(const std::string& data_path, const std::string& response,
            const std::vector<std::string>& exempt, bool intercept, int components,
            double lambda, double gamma, bool equal_variance,
            const CommonFitFlags& flags, const std::string& out_path) {
  const Dataset data = read_csv(data_path, response, exempt, intercept);
  FitConfig cfg = flags.config();
  cfg.equal_variance = equal_variance;

  const auto t0 = std::chrono::steady_clock::now();
  PenaltySpec pen = PenaltySpec::lasso(components, data.p(), lambda, data.exempt);
  pen.gamma = 0.0;
  FitResult fit;
  if (gamma > 0.0) {
    // weights come from a unit-weight fit at the same lambda
    const FitResult stage1 = gem_fit(data, pen, cfg);
    pen = adaptive_spec(stage1.model, gamma, lambda, data.exempt);
    fit = gem_fit(data, pen, cfg, stage1.model);
  } else {
    fit = gem_fit(data, pen, cfg);
  }
  const FitArtifact artifact =
      make_fit_artifact(data, pen, cfg, fit, elapsed_since(t0));
  write_fit_artifact(artifact, out_path);

  std::cout << "loglik=" << fmt(fit.loglik) << " df=" << fmt(artifact.df)
            << " bic=" << fmt(artifact.bic)
            << " selected=" << fit.selected_relevant.size()
            << " heterogeneous=" << fit.selected_heterogeneous.size()
            << " converged=" << (fit.converged ? "true" : "false") << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_tune(const std::string& data_path, const std::string& response,
             const std::vector<std::string>& exempt, bool intercept, int m_min,
             int m_max, int n_lambda, double lambda_min_ratio,
             const std::vector<std::string>& modes, double gamma,
             const CommonFitFlags& flags, const std::string& out_path) {
  const Dataset data = read_csv(data_path, response, exempt, intercept);
  TuneGrid grid;
  grid.component_range.clear();
  for (int m = m_min; m <= m_max; ++m) grid.component_range.push_back(m);
  grid.lambda_count = n_lambda;
  grid.lambda_min_ratio = lambda_min_ratio;
  grid.variance_modes = parse_modes(modes);
  grid.gamma = gamma;
  const FitConfig cfg = flags.config();

  const auto t0 = std::chrono::steady_clock::now();
  const TuneResult result = tune(data, grid, cfg, flags.workers);
  const double seconds = elapsed_since(t0);

  TuneArtifact artifact;
  artifact.n = data.n();
  artifact.grid = grid;
  artifact.config = cfg;
  FitConfig best_cfg = cfg;
  best_cfg.equal_variance = result.best_cell.mode == VarianceMode::equal;
  artifact.best = make_fit_artifact(data, result.best_penalty, best_cfg, result.best, 0.0);
  artifact.best_cell = result.best_cell;
  artifact.table = result.table;
  artifact.timing.seconds = seconds;
  write_tune_artifact(artifact, out_path);

  std::cout << "best m=" << result.best_cell.m
            << " lambda=" << fmt(result.best_cell.lambda) << " mode="
            << (result.best_cell.mode == VarianceMode::equal ? "equal" : "unequal")
            << " stage=" << result.best_cell.stage
            << " bic=" << fmt(result.best_cell.bic) << " df="
            << fmt(result.best_cell.df) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_simulate(const std::string& preset, Eigen::Index n, Eigen::Index p, double snr,
                 const std::string& sigma, const std::string& mixing, int reps,
                 std::uint64_t seed, const std::string& out_dir, bool run,
                 const std::vector<std::string>& methods_in, int m_min, int m_max,
                 int n_lambda, double lambda_min_ratio,
                 const std::vector<std::string>& modes, double gamma,
                 const CommonFitFlags& flags) {
  SimDesign design;
  design.n = n;
  design.p = p;
  design.seed = seed;
  if (preset == "main")
    design.pattern = SimPattern::main;
  else if (preset == "all-het")
    design.pattern = SimPattern::all_heterogeneous;
  else
    throw CLI::ValidationError("--preset", "expected 'main' or 'all-het'");
  if (sigma == "identity")
    design.sigma = SigmaStructure::identity;
  else if (sigma == "ar1")
    design.sigma = SigmaStructure::ar1;
  else
    throw CLI::ValidationError("--sigma", "expected 'identity' or 'ar1'");
  if (mixing == "unequal")
    design.mixing = unequal_mixing();
  else if (mixing != "uniform")
    throw CLI::ValidationError("--mixing", "expected 'uniform' or 'unequal'");
  design.delta = delta_for_snr(design, snr);

  fs::create_directories(out_dir);
  SimulationManifest manifest;
  manifest.design = design;
  manifest.snr = compute_snr(design);
  manifest.reps = reps;
  for (int r = 0; r < reps; ++r) {
    SimDesign rep_design = design;
    rep_design.seed = derive_stream(design.seed, static_cast<std::uint64_t>(r));
    auto [data, truth] = generate(rep_design);
    char name[32];
    std::snprintf(name, sizeof(name), "rep_%03d", r);
    const std::string csv_name = std::string(name) + ".csv";
    const std::string truth_name = std::string(name) + ".truth.json";
    write_csv(data, fs::path(out_dir) / csv_name);
    write_truth_artifact(TruthArtifact{kSchemaVersion, rep_design, truth},
                         fs::path(out_dir) / truth_name);
    manifest.data_files.push_back(csv_name);
    manifest.truth_files.push_back(truth_name);
  }
  write_simulation_manifest(manifest, fs::path(out_dir) / "manifest.json");
  std::cout << "snr=" << fmt(manifest.snr) << " delta=" << fmt(design.delta)
            << " reps=" << reps << "\n";

  if (run) {
    std::vector<MethodSpec> methods;
    for (const std::string& name : methods_in) {
      const auto spec = parse_method(name);
      if (!spec) throw CLI::ValidationError("--methods", "unknown method '" + name + "'");
      methods.push_back(*spec);
    }
    TuneGrid grid;
    grid.component_range.clear();
    for (int m = m_min; m <= m_max; ++m) grid.component_range.push_back(m);
    grid.lambda_count = n_lambda;
    grid.lambda_min_ratio = lambda_min_ratio;
    grid.variance_modes = parse_modes(modes);
    grid.gamma = gamma;
    const FitConfig cfg = flags.config();

    const auto t0 = std::chrono::steady_clock::now();
    ExperimentArtifact artifact;
    artifact.design = design;
    artifact.grid = grid;
    artifact.result = run_experiment(design, reps, grid, cfg, methods, flags.workers);
    artifact.timing.seconds = elapsed_since(t0);
    write_experiment_artifact(artifact, fs::path(out_dir) / "experiment.json");
    for (const MethodSummary& s : artifact.result.methods) {
      std::cout << method_name(s.method) << ": mse_b=" << fmt(s.mse_b.mean)
                << " fpr=" << fmt(s.fpr.mean) << " tpr=" << fmt(s.tpr.mean)
                << " fhr=" << (s.fhr.count > 0 ? fmt(s.fhr.mean) : "n/a")
                << " failed=" << s.n_failed << "\n";
    }
  }
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_metrics(const std::string& fit_path, const std::string& truth_path,
                const std::string& out_path) {
  const FitArtifact fit = read_fit_artifact(fit_path);
  const TruthArtifact truth = read_truth_artifact(truth_path);
  ReportArtifact artifact;
  artifact.report = evaluate(fit.fit, truth.truth);
  write_report_artifact(artifact, out_path);
  const EvalReport& r = artifact.report;
  std::cout << "fpr=" << fmt(r.fpr) << " tpr=" << fmt(r.tpr)
            << " fhr=" << (r.fhr ? fmt(*r.fhr) : "n/a") << " mse_b=" << fmt(r.mse_b)
            << " mse_sigma2=" << fmt(r.mse_sigma2) << " mse_pi=" << fmt(r.mse_pi)
            << " selected_m=" << r.selected_m << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_bench(const std::vector<Eigen::Index>& n_list,
              const std::vector<Eigen::Index>& p_list, const std::vector<int>& m_list,
              int n_lambda, double snr, std::uint64_t seed,
              const std::string& out_path) {
  BenchArtifact artifact;
  artifact.seed = seed;
  std::uint64_t cell_index = 0;
  for (const Eigen::Index n : n_list) {
    for (const Eigen::Index p : p_list) {
      for (const int m : m_list) {
        SimDesign design;
        design.n = n;
        design.p = p;
        design.seed = derive_stream(seed, cell_index++);
        design.delta = delta_for_snr(design, snr);
        auto [data, truth] = generate(design);
        (void)truth;
        TuneGrid grid;
        grid.component_range = {m};
        grid.lambda_count = n_lambda;
        grid.gamma = 0.0;
        FitConfig cfg;
        cfg.seed = derive_stream(seed, 0x8000 + cell_index);
        const auto t0 = std::chrono::steady_clock::now();
        tune(data, grid, cfg, 1);
        BenchCell cell;
        cell.n = n;
        cell.p = p;
        cell.m = m;
        cell.lambda_count = n_lambda;
        cell.seconds = elapsed_since(t0);
        artifact.cells.push_back(cell);
        std::cout << "n=" << n << " p=" << p << " m=" << m
                  << " lambda_path=" << n_lambda << " seconds=" << fmt(cell.seconds)
                  << "\n";
      }
    }
  }
  write_bench_artifact(artifact, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularized finite mixture effects regression"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "fit one penalized mixture model");
  std::string fit_data, fit_response, fit_out;
  std::vector<std::string> fit_exempt;
  bool fit_intercept = false, fit_equal = false;
  int fit_components = 2;
  double fit_lambda = 0.0, fit_gamma = 0.0;
  CommonFitFlags fit_flags;
  fit->add_option("--data", fit_data, "input CSV")->required();
  fit->add_option("--response", fit_response, "response column name")->required();
  fit->add_option("--components", fit_components, "number of mixture components")
      ->required();
  fit->add_option("--lambda", fit_lambda, "penalty level")->required();
  fit->add_option("--gamma", fit_gamma, "adaptive weight exponent (0 = plain lasso)");
  fit->add_flag("--equal-variance", fit_equal, "share one variance across components");
  fit->add_option("--exempt", fit_exempt, "comma-separated unpenalized columns")
      ->delimiter(',');
  fit->add_flag("--intercept", fit_intercept, "prepend an all-ones exempt column");
  add_common(fit, fit_flags);
  fit->add_option("--out", fit_out, "output artifact path")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "grid search over (m, lambda, mode)");
  std::string tune_data, tune_response, tune_out;
  std::vector<std::string> tune_exempt;
  std::vector<std::string> tune_modes{"unequal"};
  bool tune_intercept = false;
  int tune_m_min = 1, tune_m_max = 3, tune_n_lambda = 50;
  double tune_ratio = 1e-3, tune_gamma = 1.0;
  CommonFitFlags tune_flags;
  tune_cmd->add_option("--data", tune_data, "input CSV")->required();
  tune_cmd->add_option("--response", tune_response, "response column name")->required();
  tune_cmd->add_option("--m-min", tune_m_min, "smallest component count");
  tune_cmd->add_option("--m-max", tune_m_max, "largest component count");
  tune_cmd->add_option("--n-lambda", tune_n_lambda, "lambda path length");
  tune_cmd->add_option("--lambda-min-ratio", tune_ratio, "smallest lambda / lambda_max");
  tune_cmd->add_option("--modes", tune_modes, "variance modes: unequal,equal")
      ->delimiter(',');
  tune_cmd->add_option("--gamma", tune_gamma, "adaptive weight exponent");
  tune_cmd->add_option("--exempt", tune_exempt, "comma-separated unpenalized columns")
      ->delimiter(',');
  tune_cmd->add_flag("--intercept", tune_intercept, "prepend an all-ones exempt column");
  add_common(tune_cmd, tune_flags);
  tune_cmd->add_option("--out", tune_out, "output artifact path")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic designs, optionally fit");
  std::string sim_preset = "main", sim_sigma = "identity", sim_mixing = "uniform";
  std::string sim_out;
  Eigen::Index sim_n = 200, sim_p = 30;
  double sim_snr = 200.0;
  int sim_reps = 1;
  std::uint64_t sim_seed = 0;
  bool sim_run = false;
  std::vector<std::string> sim_methods{"effects-adaptive"};
  std::vector<std::string> sim_modes{"unequal"};
  int sim_m_min = 3, sim_m_max = 3, sim_n_lambda = 50;
  double sim_ratio = 1e-3, sim_gamma = 1.0;
  CommonFitFlags sim_flags;
  sim->add_option("--preset", sim_preset, "main | all-het");
  sim->add_option("--n", sim_n, "observations per replication");
  sim->add_option("--p", sim_p, "number of predictors")->required();
  sim->add_option("--snr", sim_snr, "target signal-to-noise ratio")->required();
  sim->add_option("--sigma", sim_sigma, "identity | ar1");
  sim->add_option("--mixing", sim_mixing, "uniform | unequal");
  sim->add_option("--reps", sim_reps, "number of replications");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_flag("--run", sim_run, "also tune/fit each replication and aggregate");
  sim->add_option("--methods", sim_methods,
                  "methods for --run: effects-adaptive, effects-lasso, "
                  "component-adaptive, component-lasso")
      ->delimiter(',');
  sim->add_option("--m-min", sim_m_min, "smallest component count for --run");
  sim->add_option("--m-max", sim_m_max, "largest component count for --run");
  sim->add_option("--n-lambda", sim_n_lambda, "lambda path length for --run");
  sim->add_option("--lambda-min-ratio", sim_ratio, "smallest lambda / lambda_max");
  sim->add_option("--modes", sim_modes, "variance modes for --run")->delimiter(',');
  sim->add_option("--gamma", sim_gamma, "adaptive weight exponent for --run");
  sim->add_option("--restarts", sim_flags.restarts, "independent EM starts per fit");
  sim->add_option("--workers", sim_flags.workers,
                  "worker threads (0 = MIXHP_WORKERS env or all cores)");
  sim->add_option("--out", sim_out, "output directory")->required();

  // metrics
  auto* met = app.add_subcommand("metrics", "score a fit artifact against a truth artifact");
  std::string met_fit, met_truth, met_out;
  met->add_option("--fit", met_fit, "fit artifact")->required();
  met->add_option("--truth", met_truth, "truth artifact")->required();
  met->add_option("--out", met_out, "output report path")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "wall-time per (n, p, m, lambda-path) cell");
  std::vector<Eigen::Index> bench_n{200};
  std::vector<Eigen::Index> bench_p{30, 60};
  std::vector<int> bench_m{3};
  int bench_n_lambda = 10;
  double bench_snr = 200.0;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  bench->add_option("--n", bench_n, "observation counts")->delimiter(',');
  bench->add_option("--p", bench_p, "predictor counts")->delimiter(',');
  bench->add_option("--m", bench_m, "component counts")->delimiter(',');
  bench->add_option("--n-lambda", bench_n_lambda, "lambda path length per cell");
  bench->add_option("--snr", bench_snr, "design signal-to-noise ratio");
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--out", bench_out, "output artifact path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit))
      return cmd_fit(fit_data, fit_response, fit_exempt, fit_intercept, fit_components,
                     fit_lambda, fit_gamma, fit_equal, fit_flags, fit_out);
    if (app.got_subcommand(tune_cmd))
      return cmd_tune(tune_data, tune_response, tune_exempt, tune_intercept, tune_m_min,
                      tune_m_max, tune_n_lambda, tune_ratio, tune_modes, tune_gamma,
                      tune_flags, tune_out);
    if (app.got_subcommand(sim))
      return cmd_simulate(sim_preset, sim_n, sim_p, sim_snr, sim_sigma, sim_mixing,
                          sim_reps, sim_seed, sim_out, sim_run, sim_methods, sim_m_min,
                          sim_m_max, sim_n_lambda, sim_ratio, sim_modes, sim_gamma,
                          sim_flags);
    if (app.got_subcommand(met)) return cmd_metrics(met_fit, met_truth, met_out);
    if (app.got_subcommand(bench))
      return cmd_bench(bench_n, bench_p, bench_m, bench_n_lambda, bench_snr, bench_seed,
                       bench_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
    return 1;
  }
  return 2;
}
