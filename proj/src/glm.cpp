#include "mosaic/glm.hpp"

#include <limits>

namespace mosaic {

namespace {
constexpr double kDevTol = 1e-8;
constexpr int kMaxIter = 50;
constexpr double kEtaSeparation = 30.0;  // |eta| beyond this flags separation
}  // namespace

Family parse_family(const std::string& name) {
  if (name == "poisson") return Family::Poisson;
  if (name == "bernoulli" || name == "binary") return Family::Bernoulli;
  throw Error(ErrorKind::Config, "unknown family '" + name + "'");
}

ResidualType parse_residual_type(const std::string& name) {
  if (name == "deviance") return ResidualType::Deviance;
  if (name == "pearson") return ResidualType::Pearson;
  if (name == "response") return ResidualType::Response;
  throw Error(ErrorKind::Config, "unknown residual type '" + name + "'");
}

Vector inverse_link(Family f, const Vector& eta) {
  return eta.unaryExpr([f](double e) { return inverse_link(f, e); });
}

Vector mean_variance(Family f, const Vector& mu) {
  if (f == Family::Poisson) return mu;
  return mu.array() * (1.0 - mu.array());
}

double loglik_term(Family f, double z, double eta) {
  if (f == Family::Poisson) return z * eta - std::exp(eta) - std::lgamma(z + 1.0);
  // log(1+e^eta) computed stably for large |eta|
  double log1pe = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return z * eta - log1pe;
}

double log_likelihood(Family f, const Vector& z, const Vector& eta) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) ll += loglik_term(f, z[i], eta[i]);
  if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
  return ll;
}

namespace {

double deviance_term(Family f, double z, double mu) {
  if (f == Family::Poisson) {
    double t = (z > 0) ? z * std::log(z / mu) : 0.0;
    return 2.0 * (t - (z - mu));
  }
  double t = 0.0;
  if (z > 0) t += z * std::log(z / mu);
  if (z < 1) t += (1.0 - z) * std::log((1.0 - z) / (1.0 - mu));
  return 2.0 * t;
}

}  // namespace

double deviance(Family f, const Vector& z, const Vector& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) d += deviance_term(f, z[i], mu[i]);
  return d;
}

Vector glm_residuals(Family f, const Vector& z, const Vector& mu, ResidualType type) {
  Vector r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (type) {
      case ResidualType::Deviance: {
        double d = deviance_term(f, z[i], mu[i]);
        r[i] = (z[i] >= mu[i] ? 1.0 : -1.0) * std::sqrt(std::max(0.0, d));
        break;
      }
      case ResidualType::Pearson: {
        double v = f == Family::Poisson ? mu[i] : mu[i] * (1.0 - mu[i]);
        r[i] = (z[i] - mu[i]) / std::sqrt(v);
        break;
      }
      case ResidualType::Response:
        r[i] = z[i] - mu[i];
        break;
    }
  }
  return r;
}

GlmFit fit_glm(const Vector& z, const Matrix& x, Family family) {
  const Eigen::Index n = z.size(), p = x.cols();
  if (x.rows() != n) throw Error(ErrorKind::Argument, "fit_glm: row mismatch");

  {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw Error(ErrorKind::Conditioning,
                  "fit_glm: design matrix is numerically rank deficient (rank " +
                      std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
  }

  Vector beta = Vector::Zero(p);
  Vector eta = Vector::Zero(n);
  // Start from a mean-matching constant predictor.
  double zbar = z.mean();
  if (family == Family::Poisson) {
    eta.setConstant(std::log(std::max(zbar, 0.1)));
  } else {
    double m = std::min(std::max(zbar, 0.05), 0.95);
    eta.setConstant(std::log(m / (1.0 - m)));
  }

  Vector mu = inverse_link(family, eta);
  double dev = deviance(family, z, mu);
  bool converged = false;
  bool separated = false;
  int iter = 0;

  for (iter = 1; iter <= kMaxIter; ++iter) {
    Vector w = mean_variance(family, mu).cwiseMax(1e-10);
    Vector zwork = eta.array() + (z - mu).array() / w.array();
    Vector sw = w.cwiseSqrt();
    Matrix xw = sw.asDiagonal() * x;
    Vector zw = sw.asDiagonal() * zwork;
    Vector beta_new = xw.colPivHouseholderQr().solve(zw);
    Vector eta_new = x * beta_new;

    if (!beta_new.allFinite() || !eta_new.allFinite()) {
      separated = true;
      break;
    }
    Vector mu_new = inverse_link(family, eta_new);
    double dev_new = deviance(family, z, mu_new);

    beta = beta_new;
    eta = eta_new;
    mu = mu_new;

    double rel = std::abs(dev - dev_new) / (std::abs(dev_new) + 0.1);
    dev = dev_new;
    if (eta.cwiseAbs().maxCoeff() > kEtaSeparation && family == Family::Bernoulli) {
      separated = true;
      break;
    }
    if (rel < kDevTol) {
      converged = true;
      break;
    }
  }

  GlmFit fit;
  fit.beta = beta;
  fit.residuals = glm_residuals(family, z, mu, ResidualType::Deviance);
  fit.converged = converged && !separated;
  fit.iterations = iter;
  fit.deviance = dev;
  return fit;
}

GlmFit fit_glm(const SpatialDataset& data) {
  return fit_glm(data.responses, data.covariates, data.family);
}

}  // namespace mosaic
