#ifndef MOSAIC_CLUSTER_HPP
#define MOSAIC_CLUSTER_HPP

#include <vector>

#include "mosaic/lattice.hpp"
#include "mosaic/voronoi.hpp"

namespace mosaic {

struct ClusterSummary {
  double n = 0;               // member lattice points
  double mean_residual = 0;
  Matrix points;              // member lattice points, one row each
};

// Ward-like statistic scaled by the reciprocal mean cross-cluster distance:
//   [ n1*n2/(n1+n2) * (mean1-mean2)^2 ] / Ebar
double cluster_dissimilarity(const ClusterSummary& a, const ClusterSummary& b);
double cluster_dissimilarity(double n1, double mean1, double n2, double mean2,
                             double mean_cross_distance);

struct Partitioning {
  int k = 0;
  std::vector<int> labels;          // partition index per observation, 0..k-1
  std::vector<int> lattice_labels;  // partition index per lattice cell
};

// Greedy agglomeration of lattice cells: repeatedly merge the
// adjacency-neighboring pair with minimum dissimilarity until k clusters
// remain. Observation labels are inherited from their lattice cell.
Partitioning agglomerate(const Lattice& lattice, const Adjacency& adjacency, int k);

// True when every partition's lattice cells form a connected subgraph.
bool partitions_connected(const Partitioning& part, const Adjacency& adjacency);

}  // namespace mosaic

#endif
