#ifndef MOSAIC_MCMC_HPP
#define MOSAIC_MCMC_HPP

#include <functional>
#include <vector>

#include "mosaic/rng.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

// Local hierarchical model for one partition:
//   Z | eta ~ family(eta),  eta = X beta + Phi delta
//   delta | sigma2 ~ N(0, sigma2 I)
//   beta_j ~ N(0, beta_prior_var), sigma2 ~ InvGamma(shape, scale)
struct LocalModel {
  Vector z;
  Matrix x;
  Matrix phi;  // n x m selected basis columns, m may be 0
  Family family = Family::Poisson;
  double beta_prior_var = 100.0;
  double sigma2_shape = 0.5;
  double sigma2_scale = 2000.0;

  Eigen::Index n() const { return z.size(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index m() const { return phi.cols(); }
  Eigen::Index dim() const { return p() + m() + 1; }
};

// Packed sampler state: (beta, delta, log sigma2).
struct ChainState {
  Vector beta;
  Vector delta;
  double log_sigma2 = 0.0;
  double log_post = 0.0;

  Vector packed() const;
  static ChainState unpack(const Vector& v, Eigen::Index p, Eigen::Index m);
};

// Log posterior with the log-sigma2 Jacobian included; -inf (never a throw)
// on non-finite linear predictors.
double log_posterior(const ChainState& state, const LocalModel& model);
double log_posterior_packed(const Vector& packed, const LocalModel& model);

double inverse_gamma_log_density(double x, double shape, double scale);

// One symmetric block random-walk proposal over all coordinates jointly:
// x' = x + scale * (chol_cov * standard normal). Returns acceptance.
using LogDensity = std::function<double(const Vector&)>;
bool rwm_block_step(Vector& x, double& log_p, const LogDensity& target,
                    double proposal_scale, const Matrix& chol_cov, Rng& rng);

bool rwm_block_step(ChainState& state, const LocalModel& model,
                    double proposal_scale, const Matrix& chol_cov, Rng& rng);

// Log-adaptive scale update (batch target acceptance 0.234):
//   log scale += sign(acc - 0.234) * min(0.01, batch_index^(-1/2))
double adapt_proposal(double batch_acceptance, int batch_index, double current_scale);

struct McmcOptions {
  int iterations = 100000;
  int burn_in = -1;        // defaults to iterations/2
  int batch_size = 50;
  double target_acceptance = 0.234;
  int shape_update_batches = 10;  // re-estimate proposal shape every 10 batches
  std::uint64_t seed = 0;
};

struct PosteriorSamples {
  Matrix draws;  // iterations x dim, columns (beta, delta, sigma2)
  double acceptance_rate = 0.0;  // over post-burn-in iterations
  std::vector<double> proposal_scale_trace;  // per batch
  std::uint64_t seed = 0;
  int burn_in = 0;
  bool warning_short_run = false;  // iterations < 1000
};

// Generic driver used by both the model sampler and samplers over arbitrary
// targets (testing). Adaptation runs during burn-in only.
PosteriorSamples run_rwm(const LogDensity& target, const Vector& init,
                         const McmcOptions& opt);

// Model chain with spec'd initialization: beta/delta from the selector fit,
// sigma2 at var(delta)+0.01.
PosteriorSamples run_chain(const LocalModel& model, const Vector& beta_init,
                           const Vector& delta_init, const McmcOptions& opt);

struct ParameterSummary {
  double mean = 0.0, lo = 0.0, hi = 0.0;  // mean and central 95% interval
};

std::vector<ParameterSummary> posterior_summary(const PosteriorSamples& samples,
                                                int burn_in);

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace mosaic

#endif
