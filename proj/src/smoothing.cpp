#include "mosaic/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "mosaic/glm.hpp"
#include "mosaic/mcmc.hpp"
#include "mosaic/thread_pool.hpp"
#include "mosaic/tps.hpp"

namespace mosaic {

Eigen::Index GlobalPredictor::n_draws() const {
  return partitions.empty() ? 0 : partitions.front().beta_draws.rows();
}

bool GlobalPredictor::has_draws() const {
  for (const auto& p : partitions)
    if (p.beta_draws.rows() == 0) return false;
  return !partitions.empty();
}

std::pair<Point, double> nearest_in_partition(const Point& s,
                                              const GlobalPredictor& predictor,
                                              int k) {
  const PartitionFit& part = predictor.partitions.at(k);
  auto [idx, dist] = part.index.nearest(s);
  return {part.member_locations.row(idx).transpose(), dist};
}

Vector partition_distances(const Point& s, const GlobalPredictor& predictor) {
  Vector d(predictor.k());
  for (int k = 0; k < predictor.k(); ++k)
    d[k] = predictor.partitions[k].index.nearest(s).second;
  return d;
}

WeightVector weights_from_distances(const Vector& distances, double gamma) {
  if (!(gamma > 0)) throw Error(ErrorKind::Argument, "weights: gamma must be positive");
  WeightVector wv;
  const int K = static_cast<int>(distances.size());
  wv.weights = Vector::Zero(K);
  int home = 0;
  for (int k = 1; k < K; ++k)
    if (distances[k] < distances[home]) home = k;
  wv.home = home;

  double total = 0.0;
  for (int k = 0; k < K; ++k)
    if (distances[k] <= gamma) {
      wv.weights[k] = std::exp(-distances[k] * distances[k]);
      total += wv.weights[k];
    }
  if (total <= 0.0) {
    wv.fallback = true;
    wv.weights[home] = 1.0;
  } else {
    wv.weights /= total;
  }
  return wv;
}

WeightVector compute_weights(const Point& s, const GlobalPredictor& predictor) {
  if (!s.allFinite()) throw Error(ErrorKind::Argument, "compute_weights: non-finite location");
  return weights_from_distances(partition_distances(s, predictor), predictor.gamma);
}

double global_eta(const Point& s, const Vector& x_s, int home_partition,
                  const GlobalPredictor& predictor, const WeightVector& weights) {
  const auto& home = predictor.partitions.at(home_partition);
  if (x_s.size() != home.beta_mean.size())
    throw Error(ErrorKind::Argument, "global_eta: covariate dimension mismatch");
  double eta = x_s.dot(home.beta_mean);
  for (int k = 0; k < predictor.k(); ++k) {
    double c = weights.weights[k];
    if (c == 0.0) continue;
    const auto& part = predictor.partitions[k];
    if (part.knots.rows() == 0) continue;
    eta += c * tps_row(s, part.knots).dot(part.delta_mean);
  }
  return eta;
}

Vector global_eta_draws(const Point& s, const Vector& x_s, int home_partition,
                        const GlobalPredictor& predictor,
                        const WeightVector& weights) {
  if (!predictor.has_draws())
    throw Error(ErrorKind::Argument, "global_eta_draws: no stored draws");
  const auto& home = predictor.partitions.at(home_partition);
  if (x_s.size() != home.beta_draws.cols())
    throw Error(ErrorKind::Argument, "global_eta_draws: covariate dimension mismatch");
  Vector eta = home.beta_draws * x_s;
  for (int k = 0; k < predictor.k(); ++k) {
    double c = weights.weights[k];
    if (c == 0.0) continue;
    const auto& part = predictor.partitions[k];
    if (part.knots.rows() == 0) continue;
    eta += c * (part.delta_draws * tps_row(s, part.knots));
  }
  return eta;
}

PredictiveSummary predict_response(const Vector& eta_draws, Family family) {
  if (eta_draws.size() < 1)
    throw Error(ErrorKind::Argument, "predict_response: need at least one draw");
  Vector mu = inverse_link(family, eta_draws);
  PredictiveSummary out;
  out.mean = mu.mean();
  if (mu.size() == 1) {
    out.lo = out.hi = mu[0];
  } else {
    std::vector<double> v(mu.data(), mu.data() + mu.size());
    out.lo = quantile(v, 0.025);
    out.hi = quantile(std::move(v), 0.975);
  }
  return out;
}

double rcvmspe(const Vector& predictions, const Vector& truth) {
  if (predictions.size() == 0 || predictions.size() != truth.size())
    throw Error(ErrorKind::Argument, "rcvmspe: empty or mismatched vectors");
  return std::sqrt((predictions - truth).squaredNorm() /
                   static_cast<double>(truth.size()));
}

double misclassification_rate(const Vector& prob_predictions, const Vector& truth,
                              double threshold) {
  if (prob_predictions.size() == 0 || prob_predictions.size() != truth.size())
    throw Error(ErrorKind::Argument, "misclassification_rate: bad vectors");
  if (prob_predictions.minCoeff() < 0 || prob_predictions.maxCoeff() > 1)
    throw Error(ErrorKind::Argument, "misclassification_rate: probabilities outside [0,1]");
  long wrong = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    double cls = prob_predictions[i] >= threshold ? 1.0 : 0.0;
    if (cls != truth[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

GammaTable tune_gamma(const GlobalPredictor& predictor,
                      const std::vector<double>& gamma_candidates,
                      const Matrix& valid_locations, const Matrix& valid_covariates,
                      const Vector& valid_responses, Family family, int workers) {
  if (gamma_candidates.empty())
    throw Error(ErrorKind::Argument, "tune_gamma: need at least one candidate");
  const Eigen::Index n = valid_locations.rows();
  const int K = predictor.k();

  // Distances and local basis effects do not depend on gamma; compute them
  // once per held-out location and re-threshold per candidate.
  Matrix dist(n, K), rand_eff(n, K);
  Vector fixed_eff(n);
  parallel_for(0, n, workers, [&](Eigen::Index i) {
    Point s = valid_locations.row(i).transpose();
    int home = 0;
    for (int k = 0; k < K; ++k) {
      const auto& part = predictor.partitions[k];
      dist(i, k) = part.index.nearest(s).second;
      rand_eff(i, k) = part.knots.rows() == 0
                           ? 0.0
                           : tps_row(s, part.knots).dot(part.delta_mean);
      if (dist(i, k) < dist(i, home)) home = k;
    }
    fixed_eff[i] =
        valid_covariates.row(i).dot(predictor.partitions[home].beta_mean);
  });

  GammaTable table;
  for (double gamma : gamma_candidates) {
    Vector pred(n);
    long fallbacks = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      WeightVector wv = weights_from_distances(dist.row(i).transpose(), gamma);
      if (wv.fallback) ++fallbacks;
      double eta = fixed_eff[i] + wv.weights.dot(rand_eff.row(i).transpose());
      pred[i] = inverse_link(family, eta);
    }
    GammaScore gs;
    gs.gamma = gamma;
    gs.fallback_count = fallbacks;
    gs.score = family == Family::Bernoulli
                   ? misclassification_rate(pred, valid_responses)
                   : rcvmspe(pred, valid_responses);
    table.scores.push_back(gs);
  }

  int best = 0;
  for (std::size_t i = 1; i < table.scores.size(); ++i) {
    const auto& cur = table.scores[i];
    const auto& b = table.scores[best];
    if (cur.score < b.score ||
        (cur.score == b.score && cur.gamma < b.gamma))
      best = static_cast<int>(i);
  }
  table.best_gamma = table.scores[best].gamma;
  return table;
}

}  // namespace mosaic
