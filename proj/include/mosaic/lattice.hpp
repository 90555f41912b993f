#ifndef MOSAIC_LATTICE_HPP
#define MOSAIC_LATTICE_HPP

#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Observations coarsened onto a regular grid; empty cells are dropped.
struct Lattice {
  Matrix points;                              // L x 2 occupied cell centers
  std::vector<std::vector<int>> member_sets;  // observation indices per cell
  Vector avg_residuals;                       // cell-averaged residuals

  Eigen::Index size() const { return points.rows(); }
};

// ceil(sqrt(L_target)) x ceil(sqrt(L_target)) grid of cell centers over the
// bounding box; each observation joins its nearest cell.
Lattice build_lattice(const Matrix& locations, const Vector& residuals,
                      int l_target);

}  // namespace mosaic

#endif
