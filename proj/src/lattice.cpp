#include "mosaic/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace mosaic {

Lattice build_lattice(const Matrix& locations, const Vector& residuals,
                      int l_target) {
  if (l_target < 2)
    throw Error(ErrorKind::Argument, "build_lattice: L_target must be at least 2");
  const Eigen::Index n = locations.rows();
  if (residuals.size() != n)
    throw Error(ErrorKind::Argument, "build_lattice: residual length mismatch");
  if (n == 0) throw Error(ErrorKind::Argument, "build_lattice: empty dataset");

  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l_target))));
  const double xmin = locations.col(0).minCoeff(), xmax = locations.col(0).maxCoeff();
  const double ymin = locations.col(1).minCoeff(), ymax = locations.col(1).maxCoeff();
  const double wx = std::max(xmax - xmin, 1e-12) / g;
  const double wy = std::max(ymax - ymin, 1e-12) / g;

  auto cell_of = [&](double x, double y) {
    int ix = std::clamp(static_cast<int>(std::floor((x - xmin) / wx)), 0, g - 1);
    int iy = std::clamp(static_cast<int>(std::floor((y - ymin) / wy)), 0, g - 1);
    return iy * g + ix;
  };

  std::vector<std::vector<int>> members(static_cast<std::size_t>(g) * g);
  for (Eigen::Index i = 0; i < n; ++i)
    members[cell_of(locations(i, 0), locations(i, 1))].push_back(static_cast<int>(i));

  Lattice lat;
  std::vector<int> occupied;
  for (int c = 0; c < g * g; ++c)
    if (!members[c].empty()) occupied.push_back(c);

  lat.points.resize(static_cast<Eigen::Index>(occupied.size()), 2);
  lat.avg_residuals.resize(static_cast<Eigen::Index>(occupied.size()));
  lat.member_sets.reserve(occupied.size());
  for (std::size_t l = 0; l < occupied.size(); ++l) {
    int c = occupied[l];
    int ix = c % g, iy = c / g;
    lat.points(static_cast<Eigen::Index>(l), 0) = xmin + (ix + 0.5) * wx;
    lat.points(static_cast<Eigen::Index>(l), 1) = ymin + (iy + 0.5) * wy;
    double s = 0.0;
    for (int i : members[c]) s += residuals[i];
    lat.avg_residuals[static_cast<Eigen::Index>(l)] =
        s / static_cast<double>(members[c].size());
    lat.member_sets.push_back(std::move(members[c]));
  }
  return lat;
}

}  // namespace mosaic
