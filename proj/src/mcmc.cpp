#include "mosaic/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mosaic/glm.hpp"

namespace mosaic {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;
}  // namespace

Vector ChainState::packed() const {
  Vector v(beta.size() + delta.size() + 1);
  v.head(beta.size()) = beta;
  v.segment(beta.size(), delta.size()) = delta;
  v[v.size() - 1] = log_sigma2;
  return v;
}

ChainState ChainState::unpack(const Vector& v, Eigen::Index p, Eigen::Index m) {
  ChainState s;
  s.beta = v.head(p);
  s.delta = v.segment(p, m);
  s.log_sigma2 = v[p + m];
  return s;
}

double inverse_gamma_log_density(double x, double shape, double scale) {
  if (x <= 0) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
         scale / x;
}

double log_posterior(const ChainState& state, const LocalModel& model) {
  if (state.beta.size() != model.p() || state.delta.size() != model.m())
    throw Error(ErrorKind::Argument, "log_posterior: dimension mismatch");
  if (!state.beta.allFinite() || !state.delta.allFinite() ||
      !std::isfinite(state.log_sigma2))
    return kNegInf;

  const double sigma2 = std::exp(state.log_sigma2);
  if (!std::isfinite(sigma2) || sigma2 <= 0) return kNegInf;

  double lp = 0.0;
  if (model.n() > 0) {
    Vector eta = model.x * state.beta;
    if (model.m() > 0) eta += model.phi * state.delta;
    if (!eta.allFinite()) return kNegInf;
    lp += log_likelihood(model.family, model.z, eta);
    if (!std::isfinite(lp)) return kNegInf;
  }

  lp += -0.5 * model.p() * (kLog2Pi + std::log(model.beta_prior_var)) -
        state.beta.squaredNorm() / (2.0 * model.beta_prior_var);
  if (model.m() > 0)
    lp += -0.5 * model.m() * (kLog2Pi + std::log(sigma2)) -
          state.delta.squaredNorm() / (2.0 * sigma2);
  lp += inverse_gamma_log_density(sigma2, model.sigma2_shape, model.sigma2_scale);
  lp += state.log_sigma2;  // Jacobian of the log parameterization
  return std::isfinite(lp) ? lp : kNegInf;
}

double log_posterior_packed(const Vector& packed, const LocalModel& model) {
  return log_posterior(ChainState::unpack(packed, model.p(), model.m()), model);
}

bool rwm_block_step(Vector& x, double& log_p, const LogDensity& target,
                    double proposal_scale, const Matrix& chol_cov, Rng& rng) {
  if (!(proposal_scale > 0))
    throw Error(ErrorKind::Argument, "rwm_block_step: scale must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector zdraw(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) zdraw[i] = normal(rng);
  Vector prop = x + proposal_scale * (chol_cov * zdraw);

  double lp_prop = target(prop);
  double log_ratio = lp_prop - log_p;
  bool accept;
  if (lp_prop == kNegInf) {
    accept = false;
  } else if (log_ratio >= 0) {
    accept = true;
  } else {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    accept = std::log(unif(rng)) < log_ratio;
  }
  if (accept) {
    x = std::move(prop);
    log_p = lp_prop;
  }
  return accept;
}

bool rwm_block_step(ChainState& state, const LocalModel& model,
                    double proposal_scale, const Matrix& chol_cov, Rng& rng) {
  Vector x = state.packed();
  double lp = state.log_post;
  bool acc = rwm_block_step(
      x, lp, [&](const Vector& v) { return log_posterior_packed(v, model); },
      proposal_scale, chol_cov, rng);
  if (acc) {
    state = ChainState::unpack(x, model.p(), model.m());
    state.log_post = lp;
  }
  return acc;
}

double adapt_proposal(double batch_acceptance, int batch_index,
                      double current_scale) {
  double step = std::min(0.01, 1.0 / std::sqrt(static_cast<double>(batch_index)));
  double diff = batch_acceptance - 0.234;
  double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  return current_scale * std::exp(sign * step);
}

PosteriorSamples run_rwm(const LogDensity& target, const Vector& init,
                         const McmcOptions& opt) {
  const Eigen::Index d = init.size();
  const int iters = opt.iterations;
  const int burn = opt.burn_in >= 0 ? opt.burn_in : iters / 2;
  if (burn >= iters)
    throw Error(ErrorKind::Argument, "run_rwm: burn_in must be below iterations");

  PosteriorSamples out;
  out.seed = opt.seed;
  out.burn_in = burn;
  out.warning_short_run = iters < 1000;
  out.draws.resize(iters, d);

  Rng rng = make_rng(opt.seed, 0x6d636d63ULL);
  Vector x = init;
  double lp = target(x);
  if (lp == kNegInf)
    throw Error(ErrorKind::Argument, "run_rwm: initial state has zero density");

  double scale = 2.38 / std::sqrt(static_cast<double>(d));
  Matrix chol = Matrix::Identity(d, d);

  int batch_accepts = 0, batch_index = 1;
  long post_accepts = 0;
  for (int t = 0; t < iters; ++t) {
    bool acc = rwm_block_step(x, lp, target, scale, chol, rng);
    out.draws.row(t) = x.transpose();
    if (acc) {
      ++batch_accepts;
      if (t >= burn) ++post_accepts;
    }

    bool in_burn = t < burn;
    if (in_burn && (t + 1) % opt.batch_size == 0) {
      double acc_rate = static_cast<double>(batch_accepts) / opt.batch_size;
      scale = adapt_proposal(acc_rate, batch_index, scale);
      out.proposal_scale_trace.push_back(scale);
      batch_accepts = 0;

      if (batch_index % opt.shape_update_batches == 0 && t > 2 * d) {
        // Proposal shape from the burn-in draws so far.
        Matrix hist = out.draws.topRows(t + 1);
        Eigen::RowVectorXd mean = hist.colwise().mean();
        Matrix centered = hist.rowwise() - mean;
        Matrix cov = centered.transpose() * centered / static_cast<double>(t);
        cov.diagonal().array() += 1e-10 + 1e-8 * cov.diagonal().mean();
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) chol = llt.matrixL();
      }
      ++batch_index;
    }
  }

  int post_n = iters - burn;
  out.acceptance_rate = post_n > 0 ? static_cast<double>(post_accepts) / post_n : 0.0;
  return out;
}

PosteriorSamples run_chain(const LocalModel& model, const Vector& beta_init,
                           const Vector& delta_init, const McmcOptions& opt) {
  const Eigen::Index p = model.p(), m = model.m();
  ChainState init;
  init.beta = beta_init.size() == p ? beta_init : Vector::Zero(p);
  init.delta = delta_init.size() == m ? delta_init : Vector::Zero(m);
  double v0 = 0.01;
  if (m > 0) {
    double mean = init.delta.mean();
    v0 = (init.delta.array() - mean).square().sum() / std::max<double>(m, 1) + 0.01;
  }
  init.log_sigma2 = std::log(v0);

  auto target = [&model](const Vector& v) { return log_posterior_packed(v, model); };
  PosteriorSamples out = run_rwm(target, init.packed(), opt);
  // Report sigma2 on its natural scale.
  out.draws.col(p + m) = out.draws.col(p + m).array().exp();
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::Argument, "quantile: empty sample");
  std::sort(values.begin(), values.end());
  double pos = q * (values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::vector<ParameterSummary> posterior_summary(const PosteriorSamples& samples,
                                                int burn_in) {
  const int S = static_cast<int>(samples.draws.rows());
  if (burn_in >= S)
    throw Error(ErrorKind::Argument, "posterior_summary: burn_in exceeds draws");
  const int n = S - burn_in;
  std::vector<ParameterSummary> out(samples.draws.cols());
  for (Eigen::Index j = 0; j < samples.draws.cols(); ++j) {
    std::vector<double> col(n);
    for (int t = 0; t < n; ++t) col[t] = samples.draws(burn_in + t, j);
    ParameterSummary s;
    s.mean = samples.draws.col(j).tail(n).mean();
    s.lo = quantile(col, 0.025);
    s.hi = quantile(col, 0.975);
    out[j] = s;
  }
  return out;
}

}  // namespace mosaic
