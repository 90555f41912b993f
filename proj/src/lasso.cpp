#include "mosaic/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mosaic/glm.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

namespace {

constexpr double kMuClampBern = 1e-8;

Vector clamped_mean(Family f, const Vector& eta) {
  Vector mu = inverse_link(f, eta);
  if (f == Family::Bernoulli)
    mu = mu.cwiseMax(kMuClampBern).cwiseMin(1.0 - kMuClampBern);
  return mu;
}

Vector column_sd(const Matrix& m) {
  Vector sd(m.cols());
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double mean = m.col(j).mean();
    sd[j] = std::sqrt((m.col(j).array() - mean).square().sum() / n);
    if (sd[j] <= 0) sd[j] = 1.0;  // constant column: no rescaling
  }
  return sd;
}

}  // namespace

void cd_weighted_lasso(const Matrix& x, const Matrix& phi, const Vector& y,
                       const Vector& w, double lambda, Vector& beta, Vector& delta,
                       double tol, int max_sweeps) {
  const Eigen::Index p = x.cols(), m = phi.cols();
  if (beta.size() != p) beta = Vector::Zero(p);
  if (delta.size() != m) delta = Vector::Zero(m);

  Vector resid = y - x * beta - phi * delta;  // working residual
  Vector dx(p), dphi(m);
  for (Eigen::Index j = 0; j < p; ++j)
    dx[j] = (w.array() * x.col(j).array().square()).sum();
  for (Eigen::Index j = 0; j < m; ++j)
    dphi[j] = (w.array() * phi.col(j).array().square()).sum();

  // Convergence on the largest single-coordinate objective decrease,
  // d_jj * change^2, within a sweep.
  auto sweep = [&](bool active_only) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (dx[j] <= 0) continue;
      double g = (w.array() * x.col(j).array() * resid.array()).sum();
      double nj = beta[j] + g / dx[j];
      double ch = nj - beta[j];
      if (ch != 0.0) {
        resid -= ch * x.col(j);
        beta[j] = nj;
        max_change = std::max(max_change, ch * ch * dx[j]);
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      if (active_only && delta[j] == 0.0) continue;
      if (dphi[j] <= 0) continue;
      double g = (w.array() * phi.col(j).array() * resid.array()).sum();
      double nj = soft_threshold(delta[j] * dphi[j] + g, lambda) / dphi[j];
      double ch = nj - delta[j];
      if (ch != 0.0) {
        resid -= ch * phi.col(j);
        delta[j] = nj;
        max_change = std::max(max_change, ch * ch * dphi[j]);
      }
    }
    return max_change;
  };

  // Iterate on the active set until stable, then one full sweep to admit
  // violators; done when the full sweep moves nothing (Friedman et al. style).
  for (int outer = 0; outer < 50; ++outer) {
    for (int inner = 0; inner < max_sweeps; ++inner)
      if (sweep(true) < tol) break;
    if (sweep(false) < tol) break;
  }
}

namespace {

struct GlmLassoProblem {
  const Vector& z;
  const Matrix& x;
  const Matrix& phi;  // standardized columns
  Family family;

  // One IRLS-weighted coordinate-descent fit at a fixed lambda, warm started
  // from (beta, delta). Returns false when the working weights degenerate.
  // Path interiors run at selection-grade precision; the returned fit is
  // refit with `tight`.
  bool fit(double lambda, Vector& beta, Vector& delta, bool tight = false) const {
    const double tol = (tight ? 1e-14 : 1e-8) * std::max<double>(z.size(), 1);
    const double rel_tol = tight ? 1e-13 : 1e-7;
    const int max_irls = tight ? 100 : 12;
    Vector eta = x * beta + phi * delta;
    Vector mu = clamped_mean(family, eta);
    double dev = deviance(family, z, mu);
    for (int iter = 0; iter < max_irls; ++iter) {
      Vector w = mean_variance(family, mu).cwiseMax(1e-10);
      Vector yw = eta.array() + (z - mu).array() / w.array();
      if (!yw.allFinite() || !w.allFinite()) return false;
      cd_weighted_lasso(x, phi, yw, w, lambda, beta, delta, tol, 500);
      eta = x * beta + phi * delta;
      if (!eta.allFinite() || !beta.allFinite() || !delta.allFinite()) return false;
      mu = clamped_mean(family, eta);
      double dev_new = deviance(family, z, mu);
      double rel = std::abs(dev - dev_new) / (std::abs(dev_new) + 0.1);
      dev = dev_new;
      if (rel < rel_tol) break;
    }
    return eta.allFinite();
  }
};

}  // namespace

std::vector<double> default_lambda_grid(const Vector& z, const Matrix& x,
                                        const Matrix& phi, Family family,
                                        const LassoOptions& opt) {
  GlmFit base = fit_glm(z, x, family);
  Vector mu = clamped_mean(family, x * base.beta);
  Vector sd = column_sd(phi);
  double lambda_max = 1e-3;
  for (Eigen::Index j = 0; j < phi.cols(); ++j) {
    double g = std::abs(phi.col(j).dot(z - mu)) / sd[j];
    lambda_max = std::max(lambda_max, g);
  }
  lambda_max *= 1.000001;  // keep the first fit exactly at the null model
  std::vector<double> grid(opt.n_lambda);
  double ratio = std::pow(opt.lambda_min_ratio, 1.0 / (opt.n_lambda - 1));
  double l = lambda_max;
  for (int i = 0; i < opt.n_lambda; ++i, l *= ratio) grid[i] = l;
  return grid;
}

LassoPath lasso_path(const Vector& z, const Matrix& x, const Matrix& phi,
                     Family family, const std::vector<double>& lambdas) {
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i + 1]) || lambdas[i + 1] <= 0)
      throw Error(ErrorKind::Argument,
                  "lasso_path: lambdas must be strictly decreasing and positive");

  Vector sd = column_sd(phi);
  Matrix phis = phi * sd.cwiseInverse().asDiagonal();
  GlmLassoProblem prob{z, x, phis, family};

  LassoPath path;
  path.lambdas = lambdas;
  Vector beta = fit_glm(z, x, family).beta;
  Vector delta = Vector::Zero(phi.cols());

  for (double lambda : lambdas) {
    Vector b = beta, d = delta;
    bool ok = prob.fit(lambda, b, d);
    if (!ok) {
      if (!path.fits.empty()) path.fits.back().truncated = true;
      break;
    }
    beta = b;
    delta = d;
    LassoFit fit;
    fit.beta = b;
    fit.delta = (d.array() / sd.array()).matrix();  // back to raw columns
    fit.lambda = lambda;
    for (Eigen::Index j = 0; j < d.size(); ++j)
      if (d[j] != 0.0) fit.active_set.push_back(static_cast<int>(j));
    path.fits.push_back(std::move(fit));
  }
  if (path.fits.empty())
    throw Error(ErrorKind::Validation, "lasso_path: no stable lambda reached");
  path.lambdas.resize(path.fits.size());
  return path;
}

LassoFit lasso_fit_at(const Vector& z, const Matrix& x, const Matrix& phi,
                      Family family, const LassoFit& warm) {
  Vector sd = column_sd(phi);
  Matrix phis = phi * sd.cwiseInverse().asDiagonal();
  GlmLassoProblem prob{z, x, phis, family};
  Vector beta = warm.beta;
  Vector delta = (warm.delta.array() * sd.array()).matrix();
  LassoFit out = warm;
  if (prob.fit(warm.lambda, beta, delta, /*tight=*/true)) {
    out.beta = beta;
    out.delta = (delta.array() / sd.array()).matrix();
    out.active_set.clear();
    for (Eigen::Index j = 0; j < delta.size(); ++j)
      if (delta[j] != 0.0) out.active_set.push_back(static_cast<int>(j));
  }
  return out;
}

int select_lambda(const std::vector<double>& lambdas,
                  const std::vector<double>& cv_deviance) {
  if (lambdas.size() < 2)
    throw Error(ErrorKind::Argument, "select_lambda: need at least 2 path points");
  if (lambdas.size() != cv_deviance.size())
    throw Error(ErrorKind::Argument, "select_lambda: size mismatch");
  int best = 0;
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (cv_deviance[i] < cv_deviance[best]) best = static_cast<int>(i);
  return best;  // descending grid: earliest minimum is the sparsest
}

std::vector<double> cv_deviance_by_lambda(const Vector& z, const Matrix& x,
                                          const Matrix& phi, Family family,
                                          const std::vector<double>& lambdas,
                                          int folds, std::uint64_t seed) {
  const Eigen::Index n = z.size();
  std::vector<int> fold_of(n);
  {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed, 0xf01d5ULL);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Eigen::Index i = 0; i < n; ++i) fold_of[idx[i]] = static_cast<int>(i % folds);
  }

  std::vector<double> total(lambdas.size(), 0.0);
  std::vector<char> reached(lambdas.size(), 1);
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, te;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[i] == f ? te : tr).push_back(static_cast<int>(i));
    Matrix xtr(tr.size(), x.cols()), phitr(tr.size(), phi.cols());
    Matrix xte(te.size(), x.cols()), phite(te.size(), phi.cols());
    Vector ztr(tr.size()), zte(te.size());
    for (std::size_t r = 0; r < tr.size(); ++r) {
      xtr.row(r) = x.row(tr[r]);
      phitr.row(r) = phi.row(tr[r]);
      ztr[r] = z[tr[r]];
    }
    for (std::size_t r = 0; r < te.size(); ++r) {
      xte.row(r) = x.row(te[r]);
      phite.row(r) = phi.row(te[r]);
      zte[r] = z[te[r]];
    }
    LassoPath path = lasso_path(ztr, xtr, phitr, family, lambdas);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (i >= path.fits.size()) {
        reached[i] = 0;
        continue;
      }
      Vector eta = xte * path.fits[i].beta + phite * path.fits[i].delta;
      total[i] += deviance(family, zte, clamped_mean(family, eta));
    }
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (!reached[i]) total[i] = std::numeric_limits<double>::infinity();
  return total;
}

LassoFit lasso_path_fit(const Vector& z, const Matrix& x, const Matrix& phi,
                        Family family, const LassoOptions& opt) {
  std::vector<double> grid = default_lambda_grid(z, x, phi, family, opt);
  LassoPath path = lasso_path(z, x, phi, family, grid);
  if (path.fits.size() == 1) return lasso_fit_at(z, x, phi, family, path.fits[0]);
  std::vector<double> lambdas_reached(grid.begin(), grid.begin() + path.fits.size());
  std::vector<double> cvdev = cv_deviance_by_lambda(z, x, phi, family,
                                                    lambdas_reached, opt.cv_folds,
                                                    opt.cv_seed);
  int best = select_lambda(lambdas_reached, cvdev);
  return lasso_fit_at(z, x, phi, family, path.fits[best]);
}

}  // namespace mosaic
