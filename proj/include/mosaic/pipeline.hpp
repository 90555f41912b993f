#ifndef MOSAIC_PIPELINE_HPP
#define MOSAIC_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "mosaic/cluster.hpp"
#include "mosaic/dataset_io.hpp"
#include "mosaic/glm.hpp"
#include "mosaic/mcmc.hpp"
#include "mosaic/smoothing.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

enum class StopAfter { Cluster, Fit, Full };

struct RunConfig {
  // Input: a CSV path, or a built-in simulation when `simulate` is set.
  std::string input_csv;
  CsvSchema schema;
  bool simulate = false;
  long sim_n = 10000;
  bool sim_unit_square = true;
  double sim_noise_sd = -1.0;  // <0: keep the layout default
  Family family = Family::Poisson;

  int k = 9;                   // partitions
  int lattice_target = 900;    // lattice cells before dropping empties
  int m_target = 100;          // candidate knots per partition
  std::vector<double> gamma_candidates{0.1, 0.25, 0.5, 1.0};
  ResidualType residual_type = ResidualType::Deviance;
  double holdout_fraction = 0.2;

  int mcmc_iterations = 20000;
  int mcmc_burn_in = -1;  // -1: iterations/2

  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir;

  int predictive_draws = 200;  // thinned draws kept for interval prediction
  bool dump_draws = false;     // full binary draw dump per partition
  int surface_grid = 0;        // >0: also write a gridded response surface
  StopAfter stop_after = StopAfter::Full;

  void validate() const;
};

struct PartitionReport {
  int partition = 0;
  long n_obs = 0;
  int m_candidates = 0;
  int m_selected = 0;
  double lambda = 0.0;
  double acceptance_rate = 0.0;
  double lasso_seconds = 0.0;
  double mcmc_seconds = 0.0;
  std::vector<ParameterSummary> beta_summary;  // posterior mean and 95% CI
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<StageTiming> timings;
  std::vector<PartitionReport> partitions;
  long n_total = 0, n_train = 0, n_valid = 0;
  int k = 0;
  GammaTable gamma_table;
  double chosen_gamma = 0.0;
  double score = 0.0;           // validation metric at chosen gamma
  double baseline_score = 0.0;  // covariate-only GLM on the same split
  std::string metric;           // "rcvmspe" or "misclassification"
  bool glm_converged = true;
  std::uint64_t seed = 0;
  int mcmc_iterations = 0;

  double stage_seconds(const std::string& stage) const;
};

// Steps in order: ingest, split, residual GLM, clustering, per-partition
// selection + MCMC (parallel over workers, longest first), weighting and
// gamma tuning, prediction export. Artifacts land under config.out_dir.
RunReport run_pipeline(const RunConfig& config);

struct SweepResult {
  std::vector<int> k_candidates;
  std::vector<double> gammas;
  Matrix scores;  // k x gamma
  int best_k = 0;
  double best_gamma = 0.0;
  std::vector<RunReport> reports;
};

// Full pipeline per K (clustering depends on K); joint argmin over (K, gamma)
// with ties toward smaller K.
SweepResult sweep_k(const RunConfig& config, const std::vector<int>& k_candidates);

// Human-readable stage table with derived throughput figures.
std::string report_timings(const RunReport& report);

// --- persisted-artifact access (stage isolation) ---

// Rebuilds the fitted predictor from an output directory; draws are loaded
// when dump files exist and max_draws > 0.
GlobalPredictor load_predictor(const std::string& out_dir, int max_draws = 0);

// Re-runs gamma tuning from persisted artifacts and the run's config.
GammaTable retune_gamma(const RunConfig& config);

void write_report_json(const std::string& path, const RunReport& report,
                       const RunConfig& config);
RunReport read_report_json(const std::string& path);

// Gridded response surface at posterior means (x, y, value rows).
void write_surface_csv(const std::string& path, const GlobalPredictor& predictor,
                       const Matrix& grid, const Matrix& covariates, Family family,
                       int workers);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace mosaic

#endif
