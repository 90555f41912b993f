#ifndef MOSAIC_SIMULATE_HPP
#define MOSAIC_SIMULATE_HPP

#include <array>
#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Nonstationary field generator: white noise at reference locations smoothed
// by spatially varying Gaussian kernels that interpolate a small set of
// anchor ("basis") kernels.
struct SimConfig {
  Matrix basis_locations;      // M x 2 coarse grid
  std::vector<Eigen::Matrix2d> basis_covariances;  // M SPD matrices
  Matrix reference_locations;  // J x 2 finer grid
  double noise_sd = 1.0;
  // Distance multiplier inside the anchor-mixing weights exp(-scale*d/2);
  // keeps the weight profile invariant when the domain is rescaled.
  double weight_length_scale = 1.0;
  Vector beta;                 // true fixed effects
  Family family = Family::Poisson;
  std::uint64_t seed = 1;
  // Reproduces the printed form with Sigma (not its inverse) in the exponent.
  bool literal_exponent = false;

  Eigen::Index m_basis() const { return basis_locations.rows(); }
  Eigen::Index n_reference() const { return reference_locations.rows(); }
  void validate() const;

  // 3x3 basis grid, 10x10 reference grid and the nine anchor covariances on
  // the [0,10]^2 domain.
  static SimConfig reference_layout(Family family, std::uint64_t seed);
  // Same layout mapped onto the unit square (lengths /10, covariances /100,
  // noise_sd /100), leaving the field distribution unchanged.
  static SimConfig unit_square_layout(Family family, std::uint64_t seed);

  std::array<double, 4> domain() const;  // xmin xmax ymin ymax from references
};

struct SimulatedField {
  Vector w;  // field at target locations
  Vector v;  // white-noise draws at reference locations
};

// Gaussian anchor kernel (2pi)^-1 |Sigma|^{-1/2} exp(-1/2 q), with the
// inverse covariance in the quadratic form q unless literal_exponent is set.
double basis_kernel(const Point& x, int m, const SimConfig& config);

// Kernel at reference j for a process at s: anchor kernels mixed with
// normalized exp(-||s - b_m||/2) weights.
double reference_kernel(const Point& s, int j, const SimConfig& config);
Vector reference_kernel_weights(const Point& s, const SimConfig& config);

SimulatedField simulate_field(const Matrix& targets, const SimConfig& config,
                              int workers = 1);

// Covariate generation for simulated datasets.
enum class CovariateSpec { TwoStandardNormal };

SpatialDataset simulate_dataset(const Matrix& targets, CovariateSpec covariates,
                                const SimConfig& config, int workers = 1);

// nx x ny regular grid of cell centers covering [x0,x1] x [y0,y1].
Matrix grid_targets(int nx, int ny, double x0, double x1, double y0, double y1);
// First n points of a near-square grid over the config's domain.
Matrix default_targets(Eigen::Index n, const SimConfig& config);

}  // namespace mosaic

#endif
