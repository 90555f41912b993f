#ifndef MOSAIC_KDTREE_HPP
#define MOSAIC_KDTREE_HPP

#include <utility>
#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Exact 2-d nearest-neighbor index over a fixed point set.
class KdTree2d {
 public:
  KdTree2d() = default;
  explicit KdTree2d(const Matrix& points);

  // (index into the original point set, Euclidean distance)
  std::pair<int, double> nearest(const Point& query) const;

  Eigen::Index size() const { return pts_.rows(); }
  const Matrix& points() const { return pts_; }

 private:
  struct Node {
    int left = -1, right = -1;
    int point = -1;   // index into pts_
    int axis = 0;
  };

  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, const Point& q, int& best, double& best_sq) const;

  Matrix pts_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace mosaic

#endif
