// Batch CLI for partitioned spatial GLMM fitting.
//
// Subcommands: simulate, cluster, fit, predict, tune, pipeline, report.
// Exit codes: 0 success, 2 validation/configuration error, 3 stage failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "mosaic/dataset_io.hpp"
#include "mosaic/glm.hpp"
#include "mosaic/pipeline.hpp"
#include "mosaic/simulate.hpp"

namespace {

using namespace mosaic;

struct CliOptions {
  RunConfig run;
  std::string family = "poisson";
  std::string residuals = "deviance";
  std::string covariate_cols = "x1,x2";
  double gamma_override = 0.0;
  int grid = 0;
  long sim_n = 10000;
  bool paper_domain = false;
  std::vector<int> k_sweep;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(csv);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->set_config("--config")->configurable(false);
  cmd->add_option("--seed", o.run.seed, "master seed");
  cmd->add_option("--workers", o.run.workers, "worker thread count");
  cmd->add_option("--out", o.run.out_dir, "output directory");
  cmd->add_option("--input", o.run.input_csv, "input CSV path");
  cmd->add_flag("--simulate", o.run.simulate, "use the built-in simulator as input");
  cmd->add_option("--sim-n", o.sim_n, "simulated observation count");
  cmd->add_option("--sim-noise-sd", o.run.sim_noise_sd,
                  "white-noise sd for the simulator (default: layout preset)");
  cmd->add_flag("--paper-domain", o.paper_domain,
                "simulate on the 10x10 reference domain instead of the unit square");
  cmd->add_option("--family", o.family, "poisson or bernoulli");
  cmd->add_option("--k", o.run.k, "number of partitions");
  cmd->add_option("--lattice", o.run.lattice_target, "lattice cell target");
  cmd->add_option("--knots", o.run.m_target, "candidate knots per partition");
  cmd->add_option("--gamma", o.run.gamma_candidates, "gamma candidates")
      ->delimiter(',');
  cmd->add_option("--holdout", o.run.holdout_fraction, "validation fraction");
  cmd->add_option("--mcmc-iters", o.run.mcmc_iterations, "MCMC iterations");
  cmd->add_option("--mcmc-burnin", o.run.mcmc_burn_in, "burn-in (default iters/2)");
  cmd->add_option("--residuals", o.residuals, "deviance|pearson|response");
  cmd->add_option("--col-x", o.run.schema.x, "x column name");
  cmd->add_option("--col-y", o.run.schema.y, "y column name");
  cmd->add_option("--col-z", o.run.schema.z, "response column name");
  cmd->add_option("--covariates", o.covariate_cols, "comma-separated covariate columns");
  cmd->add_option("--predictive-draws", o.run.predictive_draws,
                  "thinned draws kept for predictive intervals");
  cmd->add_flag("--dump-draws", o.run.dump_draws, "write full binary draw dumps");
  cmd->add_option("--surface-grid", o.run.surface_grid,
                  "write surface.csv on a GxG grid");
}

RunConfig finalize(CliOptions& o) {
  o.run.family = parse_family(o.family);
  o.run.residual_type = parse_residual_type(o.residuals);
  o.run.schema.covariates = split_list(o.covariate_cols);
  o.run.sim_n = o.sim_n;
  o.run.sim_unit_square = !o.paper_domain;
  return o.run;
}

int fail_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind) {
      case ErrorKind::Argument:
      case ErrorKind::Schema:
      case ErrorKind::Validation:
      case ErrorKind::Config:
        return 2;
      default:
        return 3;
    }
  }
  return 3;
}

void print_gamma_table(const GammaTable& table, const std::string& metric) {
  std::printf("%10s %14s %10s\n", "gamma", metric.c_str(), "fallbacks");
  for (const auto& s : table.scores)
    std::printf("%10.4g %14.6f %10ld\n", s.gamma, s.score, s.fallback_count);
  std::printf("best gamma: %g\n", table.best_gamma);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned spatial GLMM fitting with smoothed local basis models"};
  app.require_subcommand(1);
  CliOptions o;

  auto* sim = app.add_subcommand("simulate", "generate a nonstationary dataset CSV");
  auto* cluster = app.add_subcommand("cluster", "partition the domain and stop");
  auto* fit = app.add_subcommand("fit", "cluster, select knots, and run MCMC");
  auto* predict = app.add_subcommand("predict", "evaluate predictions from artifacts");
  auto* tune = app.add_subcommand("tune", "re-score gamma candidates from artifacts");
  auto* pipeline = app.add_subcommand("pipeline", "full end-to-end run");
  auto* report = app.add_subcommand("report", "print the stage table of a report");
  for (auto* cmd : {sim, cluster, fit, predict, tune, pipeline, report})
    add_common_flags(cmd, o);
  predict->add_option("--use-gamma", o.gamma_override,
                      "predict at this gamma instead of the tuned one");
  predict->add_option("--grid", o.grid, "also write surface.csv on a GxG grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      RunConfig c = finalize(o);
      if (c.out_dir.empty())
        throw Error(ErrorKind::Config, "simulate: --out is required");
      c.simulate = true;
      std::error_code ec;
      std::filesystem::create_directories(c.out_dir, ec);
      SimConfig sc = c.sim_unit_square
                         ? SimConfig::unit_square_layout(c.family, c.seed)
                         : SimConfig::reference_layout(c.family, c.seed);
      if (c.sim_noise_sd >= 0) sc.noise_sd = c.sim_noise_sd;
      Matrix targets = default_targets(c.sim_n, sc);
      SpatialDataset data =
          simulate_dataset(targets, CovariateSpec::TwoStandardNormal, sc, c.workers);
      CsvSchema schema;
      schema.covariates = {"x1", "x2"};
      write_dataset_csv(c.out_dir + "/dataset.csv", data, schema);
      nlohmann::json sidecar;
      sidecar["seed"] = sc.seed;
      sidecar["family"] = family_name(sc.family);
      sidecar["noise_sd"] = sc.noise_sd;
      sidecar["beta"] = std::vector<double>(sc.beta.data(), sc.beta.data() + sc.beta.size());
      sidecar["unit_square"] = c.sim_unit_square;
      std::ofstream(c.out_dir + "/dataset_config.json") << sidecar.dump(2);
      std::printf("wrote %lld rows to %s/dataset.csv\n",
                  static_cast<long long>(data.n()), c.out_dir.c_str());
      return 0;
    }
    if (cluster->parsed() || fit->parsed() || pipeline->parsed()) {
      RunConfig c = finalize(o);
      c.stop_after = cluster->parsed() ? StopAfter::Cluster
                     : fit->parsed()   ? StopAfter::Fit
                                       : StopAfter::Full;
      RunReport rep = run_pipeline(c);
      std::printf("%s", report_timings(rep).c_str());
      if (c.stop_after == StopAfter::Full) {
        print_gamma_table(rep.gamma_table, rep.metric);
        std::printf("%s at best gamma: %.6f (baseline %.6f)\n", rep.metric.c_str(),
                    rep.score, rep.baseline_score);
      }
      return 0;
    }
    if (tune->parsed()) {
      RunConfig c = finalize(o);
      GammaTable table = retune_gamma(c);
      print_gamma_table(table, c.family == Family::Bernoulli ? "misclassification"
                                                             : "rcvmspe");
      return 0;
    }
    if (predict->parsed()) {
      RunConfig c = finalize(o);
      if (c.out_dir.empty())
        throw Error(ErrorKind::Config, "predict: --out with artifacts is required");
      GlobalPredictor pred = load_predictor(c.out_dir, c.predictive_draws);
      pred.gamma = o.gamma_override > 0
                       ? o.gamma_override
                       : read_report_json(c.out_dir + "/report.json").chosen_gamma;
      if (o.grid > 0) {
        auto ref = pred.partitions.front().member_locations;
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto& part : pred.partitions) {
          x0 = std::min(x0, part.member_locations.col(0).minCoeff());
          x1 = std::max(x1, part.member_locations.col(0).maxCoeff());
          y0 = std::min(y0, part.member_locations.col(1).minCoeff());
          y1 = std::max(y1, part.member_locations.col(1).maxCoeff());
        }
        Matrix grid = grid_targets(o.grid, o.grid, x0, x1, y0, y1);
        Matrix cov = Matrix::Zero(grid.rows(), pred.partitions.front().beta_mean.size());
        write_surface_csv(c.out_dir + "/surface.csv", pred, grid, cov, c.family,
                          c.workers);
        std::printf("wrote %s/surface.csv (%dx%d grid, gamma=%g)\n", c.out_dir.c_str(),
                    o.grid, o.grid, pred.gamma);
      } else {
        std::printf("loaded %d partitions (gamma=%g); use --grid to export a surface\n",
                    pred.k(), pred.gamma);
      }
      return 0;
    }
    if (report->parsed()) {
      RunConfig c = finalize(o);
      if (c.out_dir.empty())
        throw Error(ErrorKind::Config, "report: --out is required");
      RunReport rep = read_report_json(c.out_dir + "/report.json");
      std::printf("%s", report_timings(rep).c_str());
      if (!rep.gamma_table.scores.empty()) print_gamma_table(rep.gamma_table, rep.metric);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return fail_code(e);
  }
  return 0;
}
