#ifndef MOSAIC_SMOOTHING_HPP
#define MOSAIC_SMOOTHING_HPP

#include <memory>
#include <vector>

#include "mosaic/kdtree.hpp"
#include "mosaic/types.hpp"

namespace mosaic {

// One fitted partition as the global predictor sees it.
struct PartitionFit {
  Matrix member_locations;  // n_k x 2 training locations
  std::vector<int> member_indices;  // rows in the training dataset
  Matrix knots;             // m_k x 2 selected knots (may be empty)
  Vector beta_mean;
  Vector delta_mean;
  Matrix beta_draws;   // optional (0 rows when absent): draws x p
  Matrix delta_draws;  // optional: draws x m_k
  KdTree2d index;      // built over member_locations
};

struct GlobalPredictor {
  std::vector<PartitionFit> partitions;
  double gamma = 0.1;

  int k() const { return static_cast<int>(partitions.size()); }
  Eigen::Index n_draws() const;
  bool has_draws() const;
};

struct WeightVector {
  Vector weights;       // per partition, zeros beyond gamma, sums to 1
  int home = -1;        // partition of the nearest training location
  bool fallback = false;  // no partition within gamma; nearest got weight 1
};

// Exact nearest member of partition k and its distance.
std::pair<Point, double> nearest_in_partition(const Point& s,
                                              const GlobalPredictor& predictor,
                                              int k);

// Per-partition nearest distances (the only geometry weights depend on).
Vector partition_distances(const Point& s, const GlobalPredictor& predictor);

// Truncated-exponential weights c_k(s) = exp(-d_k^2) 1{d_k <= gamma},
// normalized to sum 1; computed per query, never via a full distance matrix.
WeightVector compute_weights(const Point& s, const GlobalPredictor& predictor);
WeightVector weights_from_distances(const Vector& distances, double gamma);

// Global linear predictor: home-partition fixed effect plus the
// distance-weighted sum of local basis effects.
double global_eta(const Point& s, const Vector& x_s, int home_partition,
                  const GlobalPredictor& predictor, const WeightVector& weights);

// Same evaluated per retained posterior draw (requires stored draws).
Vector global_eta_draws(const Point& s, const Vector& x_s, int home_partition,
                        const GlobalPredictor& predictor, const WeightVector& weights);

struct PredictiveSummary {
  double mean = 0.0, lo = 0.0, hi = 0.0;
};

// Inverse link applied per draw; mean and central 95% interval of the mean
// surface.
PredictiveSummary predict_response(const Vector& eta_draws, Family family);

double rcvmspe(const Vector& predictions, const Vector& truth);
double misclassification_rate(const Vector& prob_predictions, const Vector& truth,
                              double threshold = 0.5);

struct GammaScore {
  double gamma = 0.0;
  double score = 0.0;  // rCVMSPE (Poisson) or misclassification (Bernoulli)
  long fallback_count = 0;
};

struct GammaTable {
  std::vector<GammaScore> scores;
  double best_gamma = 0.0;
};

// Scores every candidate against held-out data using posterior means,
// reusing fitted partitions; ties break toward smaller gamma.
GammaTable tune_gamma(const GlobalPredictor& predictor,
                      const std::vector<double>& gamma_candidates,
                      const Matrix& valid_locations, const Matrix& valid_covariates,
                      const Vector& valid_responses, Family family,
                      int workers = 1);

}  // namespace mosaic

#endif
