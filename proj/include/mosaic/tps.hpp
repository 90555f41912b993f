#ifndef MOSAIC_TPS_HPP
#define MOSAIC_TPS_HPP

#include "mosaic/types.hpp"

namespace mosaic {

// Thin plate spline kernel r^2 log r, with the limit value 0 at r = 0.
template <typename Scalar>
Scalar tps_radial(Scalar r) {
  return r > Scalar(0) ? r * r * std::log(r) : Scalar(0);
}

inline double tps_eval(const Point& s, const Point& u) {
  return tps_radial((s - u).norm());
}

// ~m_target knots on a regular grid over the bounding box, keeping only grid
// points whose nearest observation lies within one grid spacing.
Matrix candidate_knots(const Matrix& locations, int m_target);

// N x m matrix of tps_eval(location_i, knot_j).
Matrix tps_design(const Matrix& locations, const Matrix& knots);

// Single row of the design, evaluated at one point.
Vector tps_row(const Point& s, const Matrix& knots);

}  // namespace mosaic

#endif
