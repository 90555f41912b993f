#ifndef MOSAIC_LASSO_HPP
#define MOSAIC_LASSO_HPP

#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return Scalar(0);
}

struct LassoFit {
  Vector beta;                  // unpenalized coefficients
  Vector delta;                 // penalized coefficients, exact zeros off-support
  double lambda = 0.0;
  std::vector<int> active_set;  // indices with delta != 0
  bool truncated = false;       // path stopped early at this lambda
};

struct LassoPath {
  std::vector<double> lambdas;  // strictly decreasing
  std::vector<LassoFit> fits;   // one per lambda actually reached
};

// Penalized weighted least squares by coordinate descent:
//   min_{b,d} 1/2 sum_i w_i (y_i - x_i'b - phi_i'd)^2 + lambda * ||d||_1
// x carries no penalty. Columns are used as given (no standardization).
void cd_weighted_lasso(const Matrix& x, const Matrix& phi, const Vector& y,
                       const Vector& w, double lambda, Vector& beta, Vector& delta,
                       double tol = 1e-10, int max_sweeps = 2000);

struct LassoOptions {
  int n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  int cv_folds = 5;
  std::uint64_t cv_seed = 0;
};

// Full regularization path for the penalized GLM
//   -loglik(z; x*beta + phi*delta) + lambda * sum_j sd_j * |delta_j|
// where sd_j is the standard deviation of column j of phi, so the penalty
// acts on unit-variance columns; coefficients are reported on the raw scale.
LassoPath lasso_path(const Vector& z, const Matrix& x, const Matrix& phi,
                     Family family, const std::vector<double>& lambdas);

// lambda grid: n_lambda log-spaced values from lambda_max down.
std::vector<double> default_lambda_grid(const Vector& z, const Matrix& x,
                                        const Matrix& phi, Family family,
                                        const LassoOptions& opt);

// Path fit + deviance-minimizing lambda by seeded k-fold cross validation.
// Ties resolve toward the larger (sparser) lambda.
LassoFit lasso_path_fit(const Vector& z, const Matrix& x, const Matrix& phi,
                        Family family, const LassoOptions& opt = {});

// Tight refit at warm.lambda starting from a warm fit (the path runs at
// selection-grade precision; returned fits go through this).
LassoFit lasso_fit_at(const Vector& z, const Matrix& x, const Matrix& phi,
                      Family family, const LassoFit& warm);

// Index into `lambdas` minimizing total held-out deviance.
int select_lambda(const std::vector<double>& lambdas,
                  const std::vector<double>& cv_deviance);

std::vector<double> cv_deviance_by_lambda(const Vector& z, const Matrix& x,
                                          const Matrix& phi, Family family,
                                          const std::vector<double>& lambdas,
                                          int folds, std::uint64_t seed);

}  // namespace mosaic

#endif
