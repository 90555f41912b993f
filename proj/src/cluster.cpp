#include "mosaic/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace mosaic {

double cluster_dissimilarity(double n1, double mean1, double n2, double mean2,
                             double mean_cross_distance) {
  if (n1 <= 0 || n2 <= 0)
    throw Error(ErrorKind::Argument, "cluster_dissimilarity: empty cluster");
  if (mean_cross_distance <= 0)
    throw Error(ErrorKind::Geometry,
                "cluster_dissimilarity: zero mean distance between clusters");
  double diff = mean1 - mean2;
  return (n1 * n2 / (n1 + n2)) * diff * diff / mean_cross_distance;
}

double cluster_dissimilarity(const ClusterSummary& a, const ClusterSummary& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.points.rows(); ++i)
    for (Eigen::Index j = 0; j < b.points.rows(); ++j)
      sum += (a.points.row(i) - b.points.row(j)).norm();
  double ebar = sum / (static_cast<double>(a.points.rows()) *
                       static_cast<double>(b.points.rows()));
  return cluster_dissimilarity(a.n, a.mean_residual, b.n, b.mean_residual, ebar);
}

namespace {

struct HeapEntry {
  double d;
  int i, j;        // cluster slots, i < j
  int vi, vj;      // slot versions at push time
  bool operator>(const HeapEntry& o) const {
    if (d != o.d) return d > o.d;
    if (i != o.i) return i > o.i;
    return j > o.j;
  }
};

}  // namespace

Partitioning agglomerate(const Lattice& lattice, const Adjacency& adjacency, int k) {
  const int L = static_cast<int>(lattice.size());
  if (k < 1) throw Error(ErrorKind::Argument, "agglomerate: K must be positive");
  if (k > L)
    throw Error(ErrorKind::Argument,
                "agglomerate: K exceeds the number of occupied lattice cells");
  if (adjacency.n != L)
    throw Error(ErrorKind::Argument, "agglomerate: adjacency size mismatch");

  int components = adjacency.component_count();
  if (components > k)
    throw Error(ErrorKind::Infeasible,
                "agglomerate: adjacency has " + std::to_string(components) +
                    " components, more than the requested " + std::to_string(k) +
                    " partitions");

  // Per-slot cluster state. Cross-distance sums start as pairwise distances
  // and stay exact under merges: S(A+B, C) = S(A,C) + S(B,C).
  std::vector<char> alive(L, 1);
  std::vector<int> version(L, 0);
  std::vector<double> cells(L), resid_sum(L);
  std::vector<std::vector<int>> slot_cells(L);
  std::vector<std::set<int>> nbr(L);
  Matrix cross(L, L);
  for (int i = 0; i < L; ++i) {
    cells[i] = 1.0;
    resid_sum[i] = lattice.avg_residuals[i];
    slot_cells[i] = {i};
    for (int j = 0; j < L; ++j)
      cross(i, j) = (lattice.points.row(i) - lattice.points.row(j)).norm();
  }
  for (auto [i, j] : adjacency.edges) {
    nbr[i].insert(j);
    nbr[j].insert(i);
  }

  auto pair_dissimilarity = [&](int i, int j) {
    double ebar = cross(i, j) / (cells[i] * cells[j]);
    return cluster_dissimilarity(cells[i], resid_sum[i] / cells[i], cells[j],
                                 resid_sum[j] / cells[j], ebar);
  };

  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;
  for (auto [i, j] : adjacency.edges)
    heap.push({pair_dissimilarity(i, j), i, j, 0, 0});

  int n_clusters = L;
  while (n_clusters > k) {
    if (heap.empty())
      throw Error(ErrorKind::Infeasible,
                  "agglomerate: no mergeable neighbors left with " +
                      std::to_string(n_clusters) + " clusters remaining");
    HeapEntry e = heap.top();
    heap.pop();
    if (!alive[e.i] || !alive[e.j] || version[e.i] != e.vi || version[e.j] != e.vj)
      continue;

    const int keep = e.i, drop = e.j;  // e.i < e.j by construction
    cells[keep] += cells[drop];
    resid_sum[keep] += resid_sum[drop];
    slot_cells[keep].insert(slot_cells[keep].end(), slot_cells[drop].begin(),
                            slot_cells[drop].end());
    slot_cells[drop].clear();
    for (int c = 0; c < L; ++c)
      if (alive[c] && c != keep && c != drop) {
        double s = cross(keep, c) + cross(drop, c);
        cross(keep, c) = cross(c, keep) = s;
      }
    nbr[keep].erase(drop);
    for (int c : nbr[drop]) {
      if (c == keep) continue;
      nbr[c].erase(drop);
      nbr[c].insert(keep);
      nbr[keep].insert(c);
    }
    nbr[drop].clear();
    alive[drop] = 0;
    ++version[keep];
    --n_clusters;

    for (int c : nbr[keep]) {
      int a = std::min(keep, c), b = std::max(keep, c);
      heap.push({pair_dissimilarity(a, b), a, b, version[a], version[b]});
    }
  }

  // Deterministic labels: clusters ordered by their smallest slot index.
  Partitioning part;
  part.k = k;
  part.lattice_labels.assign(L, -1);
  int next = 0;
  for (int i = 0; i < L; ++i)
    if (alive[i]) {
      for (int c : slot_cells[i]) part.lattice_labels[c] = next;
      ++next;
    }

  std::size_t n_obs = 0;
  for (const auto& m : lattice.member_sets) n_obs += m.size();
  part.labels.assign(n_obs, -1);
  for (int c = 0; c < L; ++c)
    for (int obs : lattice.member_sets[c]) part.labels[obs] = part.lattice_labels[c];
  return part;
}

bool partitions_connected(const Partitioning& part, const Adjacency& adjacency) {
  const int L = adjacency.n;
  if (static_cast<int>(part.lattice_labels.size()) != L) return false;
  for (int lbl = 0; lbl < part.k; ++lbl) {
    int start = -1, count = 0;
    for (int i = 0; i < L; ++i)
      if (part.lattice_labels[i] == lbl) {
        if (start < 0) start = i;
        ++count;
      }
    if (count == 0) return false;
    std::vector<int> stack{start};
    std::vector<char> seen(L, 0);
    seen[start] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adjacency.neighbors[v])
        if (!seen[w] && part.lattice_labels[w] == lbl) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
    }
    if (reached != count) return false;
  }
  return true;
}

}  // namespace mosaic
