#include "mosaic/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mosaic {

Adjacency make_adjacency(int n, std::vector<std::pair<int, int>> edges) {
  Adjacency adj;
  adj.n = n;
  for (auto& e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  adj.edges = std::move(edges);
  adj.neighbors.assign(n, {});
  for (auto [i, j] : adj.edges) {
    if (i == j || i < 0 || j >= n)
      throw Error(ErrorKind::Argument, "adjacency: invalid edge");
    adj.neighbors[i].push_back(j);
    adj.neighbors[j].push_back(i);
  }
  return adj;
}

int Adjacency::component_count() const {
  std::vector<int> comp(n, -1);
  int count = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    ++count;
    stack.push_back(s);
    comp[s] = count;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : neighbors[v])
        if (comp[w] < 0) {
          comp[w] = count;
          stack.push_back(w);
        }
    }
  }
  return count;
}

bool Adjacency::connected() const { return n <= 1 || component_count() == 1; }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool lex_less(const Point& a, const Point& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

}  // namespace

Adjacency voronoi_neighbors(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  if (n < 3)
    throw Error(ErrorKind::Geometry, "voronoi_neighbors: need at least 3 points");

  // Normalize to a unit-span frame so tolerances are scale free.
  Eigen::RowVector2d lo = points.colwise().minCoeff();
  Eigen::RowVector2d hi = points.colwise().maxCoeff();
  double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-300});
  Matrix pts = (points.rowwise() - (lo + hi) / 2.0) / span;

  {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return pts(a, 0) < pts(b, 0) || (pts(a, 0) == pts(b, 0) && pts(a, 1) < pts(b, 1));
    });
    for (int i = 0; i + 1 < n; ++i)
      if (pts.row(order[i]) == pts.row(order[i + 1]))
        throw Error(ErrorKind::Geometry, "voronoi_neighbors: duplicate points");
  }

  // Collinearity check against the most distant pair from point 0.
  {
    int far = 1;
    for (int k = 2; k < n; ++k)
      if ((pts.row(k) - pts.row(0)).squaredNorm() >
          (pts.row(far) - pts.row(0)).squaredNorm())
        far = k;
    Point d = (pts.row(far) - pts.row(0)).transpose();
    double max_cross = 0.0;
    for (int k = 1; k < n; ++k) {
      Point e = (pts.row(k) - pts.row(0)).transpose();
      max_cross = std::max(max_cross, std::abs(d.x() * e.y() - d.y() * e.x()));
    }
    if (max_cross < 1e-12)
      throw Error(ErrorKind::Geometry, "voronoi_neighbors: all points collinear");
  }

  const double eps = 1e-9;
  Vector sqnorm(n);
  for (int i = 0; i < n; ++i) sqnorm[i] = pts.row(i).squaredNorm();

  std::vector<std::pair<int, int>> edges;
  std::vector<int> binders;

  for (int i = 0; i < n; ++i) {
    const Point pi = pts.row(i).transpose();
    for (int j = i + 1; j < n; ++j) {
      const Point pj = pts.row(j).transpose();
      const Point mid = (pi + pj) / 2.0;
      Point dir(-(pj.y() - pi.y()), pj.x() - pi.x());
      dir /= dir.norm();

      // Clip the bisector line mid + t*dir by the halfplane of every other
      // site; the pair is adjacent when a positive-length interval survives.
      double tlo = -kInf, thi = kInf;
      bool empty = false;
      for (int k = 0; k < n && !empty; ++k) {
        if (k == i || k == j) continue;
        const double ax = pts(k, 0) - pi.x(), ay = pts(k, 1) - pi.y();
        const double a = 2.0 * (dir.x() * ax + dir.y() * ay);
        const double c = sqnorm[k] - sqnorm[i] - 2.0 * (mid.x() * ax + mid.y() * ay);
        if (std::abs(a) < 1e-15) {
          if (c <= 0) empty = true;
          continue;
        }
        double t = c / a;
        if (a > 0) {
          if (t < thi) thi = t;
        } else {
          if (t > tlo) tlo = t;
        }
        if (thi < tlo - eps) empty = true;
      }
      if (empty || thi < tlo - eps) continue;

      if (thi - tlo > eps) {
        edges.emplace_back(i, j);
        continue;
      }

      // Degenerate interval: i, j and the binding sites are cocircular.
      // Keep the edge only if it contains the lexicographically smallest
      // point of the cocircular set.
      binders.clear();
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double ax = pts(k, 0) - pi.x(), ay = pts(k, 1) - pi.y();
        const double a = 2.0 * (dir.x() * ax + dir.y() * ay);
        const double c = sqnorm[k] - sqnorm[i] - 2.0 * (mid.x() * ax + mid.y() * ay);
        if (std::abs(a) < 1e-15) continue;
        double t = c / a;
        if (std::abs(t - tlo) <= eps || std::abs(t - thi) <= eps) binders.push_back(k);
      }
      int best = i;
      Point best_pt = pi;
      auto consider = [&](int k) {
        Point pk = pts.row(k).transpose();
        if (lex_less(pk, best_pt)) {
          best = k;
          best_pt = pk;
        }
      };
      consider(j);
      for (int k : binders) consider(k);
      if (best == i || best == j) edges.emplace_back(i, j);
    }
  }

  return make_adjacency(n, std::move(edges));
}

}  // namespace mosaic
