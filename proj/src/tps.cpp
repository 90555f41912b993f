#include "mosaic/tps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mosaic {

Matrix candidate_knots(const Matrix& locations, int m_target) {
  if (m_target < 1)
    throw Error(ErrorKind::Argument, "candidate_knots: m_target must be positive");
  const Eigen::Index n = locations.rows();
  if (n == 0) throw Error(ErrorKind::Argument, "candidate_knots: empty partition");

  const double xmin = locations.col(0).minCoeff(), xmax = locations.col(0).maxCoeff();
  const double ymin = locations.col(1).minCoeff(), ymax = locations.col(1).maxCoeff();

  // Degenerate partition: every observation at one point.
  if (xmax - xmin <= 0 && ymax - ymin <= 0) {
    Matrix k(1, 2);
    k << xmin, ymin;
    return k;
  }

  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m_target))));
  if (g < 2) {
    Matrix k(1, 2);
    k << (xmin + xmax) / 2, (ymin + ymax) / 2;
    return k;
  }
  const double hx = (xmax - xmin) / (g - 1);
  const double hy = (ymax - ymin) / (g - 1);
  const double reach = std::max(std::max(hx, hy), 1e-12) * (1.0 + 1e-9);

  std::vector<double> kx, ky;
  for (int iy = 0; iy < g; ++iy)
    for (int ix = 0; ix < g; ++ix) {
      double gx = xmin + ix * hx, gy = ymin + iy * hy;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n && best > reach * reach; ++i) {
        double dx = locations(i, 0) - gx, dy = locations(i, 1) - gy;
        best = std::min(best, dx * dx + dy * dy);
      }
      if (best <= reach * reach) {
        kx.push_back(gx);
        ky.push_back(gy);
      }
    }

  Matrix knots(static_cast<Eigen::Index>(kx.size()), 2);
  for (std::size_t i = 0; i < kx.size(); ++i) {
    knots(static_cast<Eigen::Index>(i), 0) = kx[i];
    knots(static_cast<Eigen::Index>(i), 1) = ky[i];
  }
  return knots;
}

Matrix tps_design(const Matrix& locations, const Matrix& knots) {
  Matrix phi(locations.rows(), knots.rows());
  for (Eigen::Index j = 0; j < knots.rows(); ++j) {
    for (Eigen::Index i = 0; i < locations.rows(); ++i) {
      double dx = locations(i, 0) - knots(j, 0);
      double dy = locations(i, 1) - knots(j, 1);
      phi(i, j) = tps_radial(std::sqrt(dx * dx + dy * dy));
    }
  }
  return phi;
}

Vector tps_row(const Point& s, const Matrix& knots) {
  Vector row(knots.rows());
  for (Eigen::Index j = 0; j < knots.rows(); ++j) {
    double dx = s.x() - knots(j, 0), dy = s.y() - knots(j, 1);
    row[j] = tps_radial(std::sqrt(dx * dx + dy * dy));
  }
  return row;
}

}  // namespace mosaic
