#ifndef MOSAIC_VORONOI_HPP
#define MOSAIC_VORONOI_HPP

#include <utility>
#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Symmetric neighbor pairs over a point set, stored as (i,j) with i<j.
struct Adjacency {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> neighbors;  // per point, sorted

  bool connected() const;
  int component_count() const;
};

Adjacency make_adjacency(int n, std::vector<std::pair<int, int>> edges);

// Voronoi neighbors (equivalently, Delaunay edges). A pair is adjacent when
// its cells share a boundary segment of positive length; cocircular
// degeneracies (cells touching at a single point) are resolved by keeping the
// diagonal that contains the lexicographically smallest point of the
// cocircular set.
Adjacency voronoi_neighbors(const Matrix& points);

}  // namespace mosaic

#endif
