#include "mosaic/simulate.hpp"

#include <cmath>

#include "mosaic/glm.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/thread_pool.hpp"

namespace mosaic {

namespace {

constexpr double kTwoPiInv = 0.15915494309189535;

// The nine anchor covariances, row-major over the 3x3 anchor grid.
const double kSigmas[9][3] = {
    {0.50, 0.30, 0.33},  {0.50, -0.12, 0.13}, {0.50, 0.18, 0.20},
    {0.50, 0.54, 0.60},  {0.50, 0.06, 0.07},  {0.50, -0.48, 0.53},
    {0.50, 0.42, 0.46},  {0.50, -0.36, 0.40}, {0.50, -0.24, 0.26}};

}  // namespace

void SimConfig::validate() const {
  if (basis_locations.rows() == 0 || reference_locations.rows() == 0)
    throw Error(ErrorKind::Config, "sim: empty kernel layout");
  if (m_basis() > n_reference())
    throw Error(ErrorKind::Config, "sim: more anchor kernels than reference points");
  if (static_cast<Eigen::Index>(basis_covariances.size()) != m_basis())
    throw Error(ErrorKind::Config, "sim: covariance count mismatch");
  for (const auto& s : basis_covariances) {
    if (std::abs(s(0, 1) - s(1, 0)) > 1e-12)
      throw Error(ErrorKind::Config, "sim: kernel covariance not symmetric");
    if (s(0, 0) <= 0 || s.determinant() <= 0)
      throw Error(ErrorKind::Config, "sim: kernel covariance not positive definite");
  }
  if (!(noise_sd >= 0))
    throw Error(ErrorKind::Config, "sim: noise_sd must be nonnegative");
  if (beta.size() == 0)
    throw Error(ErrorKind::Config, "sim: beta must be nonempty");
}

std::array<double, 4> SimConfig::domain() const {
  return {reference_locations.col(0).minCoeff(), reference_locations.col(0).maxCoeff(),
          reference_locations.col(1).minCoeff(), reference_locations.col(1).maxCoeff()};
}

Matrix grid_targets(int nx, int ny, double x0, double x1, double y0, double y1) {
  Matrix g(static_cast<Eigen::Index>(nx) * ny, 2);
  double wx = (x1 - x0) / nx, wy = (y1 - y0) / ny;
  Eigen::Index r = 0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix, ++r) {
      g(r, 0) = x0 + (ix + 0.5) * wx;
      g(r, 1) = y0 + (iy + 0.5) * wy;
    }
  return g;
}

SimConfig SimConfig::reference_layout(Family family, std::uint64_t seed) {
  SimConfig c;
  c.family = family;
  c.seed = seed;
  c.noise_sd = 1.0;
  c.beta = Vector::Constant(2, 1.0);
  // Anchors at the centers of a 3x3 tiling, references of a 10x10 tiling.
  c.basis_locations = grid_targets(3, 3, 0.0, 10.0, 0.0, 10.0);
  c.reference_locations = grid_targets(10, 10, 0.0, 10.0, 0.0, 10.0);
  c.basis_covariances.resize(9);
  for (int m = 0; m < 9; ++m) {
    Eigen::Matrix2d s;
    s << kSigmas[m][0], kSigmas[m][1], kSigmas[m][1], kSigmas[m][2];
    c.basis_covariances[m] = s;
  }
  return c;
}

SimConfig SimConfig::unit_square_layout(Family family, std::uint64_t seed) {
  SimConfig c = reference_layout(family, seed);
  c.basis_locations /= 10.0;
  c.reference_locations /= 10.0;
  for (auto& s : c.basis_covariances) s /= 100.0;
  c.noise_sd /= 100.0;         // kernel density values scale by 100
  c.weight_length_scale = 10.0;  // anchor-weight distances keep their scale
  return c;
}

double basis_kernel(const Point& x, int m, const SimConfig& config) {
  const Eigen::Matrix2d& sigma = config.basis_covariances.at(m);
  double det = sigma.determinant();
  if (det <= 0) throw Error(ErrorKind::Config, "basis_kernel: non-SPD covariance");
  Point d = x - config.basis_locations.row(m).transpose();
  double q;
  if (config.literal_exponent) {
    q = d.dot(sigma * d);
  } else {
    Eigen::Matrix2d inv;
    inv << sigma(1, 1), -sigma(0, 1), -sigma(1, 0), sigma(0, 0);
    inv /= det;
    q = d.dot(inv * d);
  }
  return kTwoPiInv / std::sqrt(det) * std::exp(-0.5 * q);
}

Vector reference_kernel_weights(const Point& s, const SimConfig& config) {
  const Eigen::Index M = config.m_basis();
  Vector w(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    double dist = (s - config.basis_locations.row(m).transpose()).norm();
    w[m] = std::exp(-0.5 * config.weight_length_scale * dist);  // distance, not squared
  }
  w /= w.sum();
  return w;
}

double reference_kernel(const Point& s, int j, const SimConfig& config) {
  Point uj = config.reference_locations.row(j).transpose();
  Vector w = reference_kernel_weights(s, config);
  double k = 0.0;
  for (Eigen::Index m = 0; m < config.m_basis(); ++m)
    k += w[m] * basis_kernel(uj, static_cast<int>(m), config);
  return k;
}

SimulatedField simulate_field(const Matrix& targets, const SimConfig& config,
                              int workers) {
  config.validate();
  const Eigen::Index J = config.n_reference();
  SimulatedField field;
  field.v.resize(J);
  {
    Rng rng = make_rng(config.seed, 0xf1e1dULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < J; ++j) field.v[j] = config.noise_sd * normal(rng);
  }

  // Anchor kernels evaluated at the references once; per-target work is a
  // weight vector and two small matrix products.
  Matrix anchor_at_ref(J, config.m_basis());
  for (Eigen::Index j = 0; j < J; ++j) {
    Point uj = config.reference_locations.row(j).transpose();
    for (Eigen::Index m = 0; m < config.m_basis(); ++m)
      anchor_at_ref(j, m) = basis_kernel(uj, static_cast<int>(m), config);
  }
  Vector anchor_dot_v = anchor_at_ref.transpose() * field.v;  // M

  field.w.resize(targets.rows());
  parallel_for(0, targets.rows(), workers, [&](Eigen::Index i) {
    Point s = targets.row(i).transpose();
    field.w[i] = reference_kernel_weights(s, config).dot(anchor_dot_v);
  });
  return field;
}

SpatialDataset simulate_dataset(const Matrix& targets, CovariateSpec covariates,
                                const SimConfig& config, int workers) {
  SimulatedField field = simulate_field(targets, config, workers);
  const Eigen::Index n = targets.rows();
  const Eigen::Index p = config.beta.size();

  SpatialDataset data;
  data.family = config.family;
  data.locations = targets;
  data.covariates.resize(n, p);
  if (covariates != CovariateSpec::TwoStandardNormal || p != 2)
    throw Error(ErrorKind::Config, "simulate_dataset: unsupported covariate spec");
  {
    Rng rng = make_rng(config.seed, 0xc0fa1e5ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) data.covariates(i, j) = normal(rng);
  }

  Vector eta = data.covariates * config.beta + field.w;
  if (config.family == Family::Poisson && eta.maxCoeff() > 30.0)
    throw Error(ErrorKind::Overflow,
                "simulate_dataset: Poisson mean overflow (eta > 30); rescale the "
                "field or covariates");

  data.responses.resize(n);
  Rng rng = make_rng(config.seed, 0x2e59035ULL);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (config.family == Family::Poisson) {
      std::poisson_distribution<long> pois(std::exp(eta[i]));
      data.responses[i] = static_cast<double>(pois(rng));
    } else {
      std::bernoulli_distribution bern(inverse_link(Family::Bernoulli, eta[i]));
      data.responses[i] = bern(rng) ? 1.0 : 0.0;
    }
  }
  data.validate();
  return data;
}

Matrix default_targets(Eigen::Index n, const SimConfig& config) {
  auto dom = config.domain();
  // References sit at tiling centers; pad back out to the tile edges.
  double wx = (dom[1] - dom[0]) / 9.0, wy = (dom[3] - dom[2]) / 9.0;
  double x0 = dom[0] - wx / 2, x1 = dom[1] + wx / 2;
  double y0 = dom[2] - wy / 2, y1 = dom[3] + wy / 2;
  int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  int ny = static_cast<int>(std::ceil(static_cast<double>(n) / nx));
  Matrix g = grid_targets(nx, ny, x0, x1, y0, y1);
  return g.topRows(n);
}

}  // namespace mosaic
