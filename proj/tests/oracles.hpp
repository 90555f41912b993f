// Independent reference implementations used only by the test suites.
// Everything here recomputes results by a different route than the library:
// direct enumeration, dense matrices, or generic numeric routines.
#ifndef MOSAIC_TESTS_ORACLES_HPP
#define MOSAIC_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "mosaic/types.hpp"

namespace oracles {

using mosaic::Matrix;
using mosaic::Point;
using mosaic::Vector;

// --- generic derivative-free maximizer (Nelder-Mead) ---

inline Vector nelder_mead_max(const std::function<double(const Vector&)>& f,
                              Vector start, double step = 0.5, int max_iter = 4000) {
  const int n = static_cast<int>(start.size());
  auto neg = [&](const Vector& v) { return -f(v); };
  std::vector<Vector> simplex(n + 1, start);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += step;
  std::vector<double> val(n + 1);
  for (int i = 0; i <= n; ++i) val[i] = neg(simplex[i]);

  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> ord(n + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return val[a] < val[b]; });
    int best = ord[0], worst = ord[n], second = ord[n - 1];
    if (std::abs(val[worst] - val[best]) <
        1e-12 * (std::abs(val[best]) + 1e-12) + 1e-14)
      break;
    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += simplex[i];
    centroid /= n;

    Vector refl = centroid + (centroid - simplex[worst]);
    double fr = neg(refl);
    if (fr < val[best]) {
      Vector exp_ = centroid + 2.0 * (centroid - simplex[worst]);
      double fe = neg(exp_);
      if (fe < fr) {
        simplex[worst] = exp_;
        val[worst] = fe;
      } else {
        simplex[worst] = refl;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      simplex[worst] = refl;
      val[worst] = fr;
    } else {
      Vector con = centroid + 0.5 * (simplex[worst] - centroid);
      double fc = neg(con);
      if (fc < val[worst]) {
        simplex[worst] = con;
        val[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          val[i] = neg(simplex[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (val[i] < val[best]) best = i;
  return simplex[best];
}

// --- brute-force Voronoi neighbors ---
// Candidate edges from the empty-circumcircle test over all triples
// (non-strict emptiness), then properly crossing candidates resolve to the
// edge containing the lexicographically smallest of the four endpoints.

struct Circle {
  double cx, cy, r2;
  bool ok;
};

inline Circle circumcircle(const Point& a, const Point& b, const Point& c) {
  double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) +
                    c.x() * (a.y() - b.y()));
  if (std::abs(d) < 1e-14) return {0, 0, 0, false};
  double a2 = a.squaredNorm(), b2 = b.squaredNorm(), c2 = c.squaredNorm();
  double ux = (a2 * (b.y() - c.y()) + b2 * (c.y() - a.y()) + c2 * (a.y() - b.y())) / d;
  double uy = (a2 * (c.x() - b.x()) + b2 * (a.x() - c.x()) + c2 * (b.x() - a.x())) / d;
  double r2 = (a.x() - ux) * (a.x() - ux) + (a.y() - uy) * (a.y() - uy);
  return {ux, uy, r2, true};
}

inline bool segments_cross(const Point& p1, const Point& p2, const Point& q1,
                           const Point& q2) {
  auto orient = [](const Point& a, const Point& b, const Point& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  };
  double o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  double o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 &&
         o3 != 0 && o4 != 0;
}

inline std::vector<std::pair<int, int>> brute_force_delaunay_edges(const Matrix& pts) {
  const int n = static_cast<int>(pts.rows());
  const double span = std::max((pts.colwise().maxCoeff() - pts.colwise().minCoeff()).maxCoeff(), 1e-30);
  const double eps = 1e-9 * span * span;
  std::set<std::pair<int, int>> cand;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Circle c = circumcircle(pts.row(i).transpose(), pts.row(j).transpose(),
                                pts.row(k).transpose());
        if (!c.ok) continue;
        bool empty = true;
        for (int l = 0; l < n && empty; ++l) {
          if (l == i || l == j || l == k) continue;
          double dx = pts(l, 0) - c.cx, dy = pts(l, 1) - c.cy;
          if (dx * dx + dy * dy < c.r2 - eps) empty = false;
        }
        if (empty) {
          cand.insert({i, j});
          cand.insert({i, k});
          cand.insert({j, k});
        }
      }

  auto lex_min4 = [&](int a, int b, int c, int d) {
    int m = a;
    for (int v : {b, c, d}) {
      if (pts(v, 0) < pts(m, 0) || (pts(v, 0) == pts(m, 0) && pts(v, 1) < pts(m, 1)))
        m = v;
    }
    return m;
  };

  std::vector<std::pair<int, int>> out;
  for (auto e : cand) {
    bool keep = true;
    for (auto f : cand) {
      if (e == f) continue;
      if (e.first == f.first || e.first == f.second || e.second == f.first ||
          e.second == f.second)
        continue;
      if (!segments_cross(pts.row(e.first).transpose(), pts.row(e.second).transpose(),
                          pts.row(f.first).transpose(), pts.row(f.second).transpose()))
        continue;
      int m = lex_min4(e.first, e.second, f.first, f.second);
      if (m != e.first && m != e.second) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(e);
  }
  return out;
}

// --- naive greedy agglomeration, everything recomputed per step ---

struct NaiveCluster {
  std::vector<int> cells;
};

inline std::vector<int> naive_agglomerate(const Matrix& points, const Vector& resid,
                                          const std::vector<std::pair<int, int>>& edges,
                                          int K) {
  const int L = static_cast<int>(points.rows());
  std::vector<NaiveCluster> clusters(L);
  for (int i = 0; i < L; ++i) clusters[i].cells = {i};
  std::vector<bool> alive(L, true);

  auto adjacent = [&](const NaiveCluster& a, const NaiveCluster& b) {
    for (int u : a.cells)
      for (int v : b.cells)
        for (auto [x, y] : edges)
          if ((x == u && y == v) || (x == v && y == u)) return true;
    return false;
  };
  auto dissim = [&](const NaiveCluster& a, const NaiveCluster& b) {
    double ma = 0, mb = 0;
    for (int u : a.cells) ma += resid[u];
    for (int v : b.cells) mb += resid[v];
    ma /= a.cells.size();
    mb /= b.cells.size();
    double esum = 0;
    for (int u : a.cells)
      for (int v : b.cells) esum += (points.row(u) - points.row(v)).norm();
    double ebar = esum / (static_cast<double>(a.cells.size()) * b.cells.size());
    double n1 = static_cast<double>(a.cells.size()), n2 = static_cast<double>(b.cells.size());
    return (n1 * n2 / (n1 + n2)) * (ma - mb) * (ma - mb) / ebar;
  };

  int n_alive = L;
  while (n_alive > K) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < L; ++i) {
      if (!alive[i]) continue;
      for (int j = i + 1; j < L; ++j) {
        if (!alive[j]) continue;
        if (!adjacent(clusters[i], clusters[j])) continue;
        double d = dissim(clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;
    clusters[bi].cells.insert(clusters[bi].cells.end(), clusters[bj].cells.begin(),
                              clusters[bj].cells.end());
    alive[bj] = false;
    --n_alive;
  }
  std::vector<int> labels(L, -1);
  int next = 0;
  for (int i = 0; i < L; ++i)
    if (alive[i]) {
      for (int c : clusters[i].cells) labels[c] = next;
      ++next;
    }
  return labels;
}

// --- dense weight computation over an explicit distance matrix ---

inline Matrix dense_weights(const Matrix& queries, const Matrix& train,
                            const std::vector<int>& labels, int K, double gamma) {
  // full query x train distance matrix, reduced per partition
  Matrix d2(queries.rows(), train.rows());
  for (Eigen::Index i = 0; i < queries.rows(); ++i)
    for (Eigen::Index j = 0; j < train.rows(); ++j)
      d2(i, j) = (queries.row(i) - train.row(j)).norm();

  Matrix weights = Matrix::Zero(queries.rows(), K);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    Vector dmin = Vector::Constant(K, std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < train.rows(); ++j)
      dmin[labels[j]] = std::min(dmin[labels[j]], d2(i, j));
    double total = 0;
    for (int k = 0; k < K; ++k)
      if (dmin[k] <= gamma) {
        weights(i, k) = std::exp(-dmin[k] * dmin[k]);
        total += weights(i, k);
      }
    if (total > 0) {
      weights.row(i) /= total;
    } else {
      int h = 0;
      for (int k = 1; k < K; ++k)
        if (dmin[k] < dmin[h]) h = k;
      weights(i, h) = 1.0;
    }
  }
  return weights;
}

// --- Kolmogorov-Smirnov test against a CDF ---

inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

inline double ks_pvalue(double d, std::size_t n) {
  double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 +
                   0.11 / std::sqrt(static_cast<double>(n))) *
                  d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k)
    sum += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::min(1.0, std::max(0.0, sum));
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// --- adaptive-ish 2-d quadrature by nested Simpson refinement ---

inline double integrate_2d(const std::function<double(double, double)>& f, double x0,
                           double x1, double y0, double y1, int n) {
  // composite Simpson with n (even) intervals per axis
  auto simpson_w = [&](int i) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double hx = (x1 - x0) / n, hy = (y1 - y0) / n;
  double total = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      total += simpson_w(i) * simpson_w(j) * f(x0 + i * hx, y0 + j * hy);
  return total * hx * hy / 9.0;
}

// --- batch-means Monte Carlo standard error ---

inline double batch_means_mcse(const Vector& draws) {
  const int n = static_cast<int>(draws.size());
  const int b = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
  const int nb = n / b;
  std::vector<double> means(nb);
  for (int i = 0; i < nb; ++i) means[i] = draws.segment(i * b, b).mean();
  double grand = 0;
  for (double m : means) grand += m;
  grand /= nb;
  double var = 0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= (nb - 1);
  return std::sqrt(var / nb);
}

}  // namespace oracles

#endif
