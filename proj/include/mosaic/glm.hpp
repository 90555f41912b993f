#ifndef MOSAIC_GLM_HPP
#define MOSAIC_GLM_HPP

#include "mosaic/types.hpp"

namespace mosaic {

// Canonical-link family operations. All act elementwise on linear predictors.

inline double inverse_link(Family f, double eta) {
  if (f == Family::Poisson) return std::exp(eta);
  return 1.0 / (1.0 + std::exp(-eta));
}

Vector inverse_link(Family f, const Vector& eta);

// Variance function at the mean; equals d mu / d eta under the canonical link.
Vector mean_variance(Family f, const Vector& mu);

// Pointwise log-likelihood term, normalizing constants included.
double loglik_term(Family f, double z, double eta);

// Sum of log-likelihood terms at eta. Returns -inf if any term is non-finite.
double log_likelihood(Family f, const Vector& z, const Vector& eta);

// Total deviance 2*(loglik_saturated - loglik).
double deviance(Family f, const Vector& z, const Vector& mu);

enum class ResidualType { Deviance, Pearson, Response };

ResidualType parse_residual_type(const std::string& name);

Vector glm_residuals(Family f, const Vector& z, const Vector& mu, ResidualType type);

// Maximum-likelihood fit via iteratively reweighted least squares.
// Converges on relative deviance change < 1e-8, at most 50 iterations.
// Throws Conditioning when X is numerically rank deficient. Separation
// (diverging eta) is reported through converged=false, never a throw.
GlmFit fit_glm(const SpatialDataset& data);
GlmFit fit_glm(const Vector& z, const Matrix& x, Family family);

}  // namespace mosaic

#endif
