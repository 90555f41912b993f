#include "mosaic/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mosaic {

KdTree2d::KdTree2d(const Matrix& points) : pts_(points) {
  if (pts_.rows() == 0)
    throw Error(ErrorKind::Argument, "KdTree2d: empty point set");
  std::vector<int> idx(pts_.rows());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(pts_.rows());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree2d::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  int axis = depth % 2;
  int mid = (lo + hi) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) {
                     return pts_(a, axis) < pts_(b, axis) ||
                            (pts_(a, axis) == pts_(b, axis) && a < b);
                   });
  Node node;
  node.point = idx[mid];
  node.axis = axis;
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  int left = build(idx, lo, mid, depth + 1);
  int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void KdTree2d::search(int node, const Point& q, int& best, double& best_sq) const {
  if (node < 0) return;
  const Node& nd = nodes_[node];
  double dx = q.x() - pts_(nd.point, 0);
  double dy = q.y() - pts_(nd.point, 1);
  double d2 = dx * dx + dy * dy;
  if (d2 < best_sq || (d2 == best_sq && nd.point < best)) {
    best = nd.point;
    best_sq = d2;
  }
  double diff = nd.axis == 0 ? dx : dy;
  int near = diff < 0 ? nd.left : nd.right;
  int far = diff < 0 ? nd.right : nd.left;
  search(near, q, best, best_sq);
  if (diff * diff <= best_sq) search(far, q, best, best_sq);
}

std::pair<int, double> KdTree2d::nearest(const Point& query) const {
  int best = std::numeric_limits<int>::max();
  double best_sq = std::numeric_limits<double>::infinity();
  search(root_, query, best, best_sq);
  return {best, std::sqrt(best_sq)};
}

}  // namespace mosaic
