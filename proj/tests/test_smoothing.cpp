#include <doctest.h>

#include <cmath>

#include "mosaic/kdtree.hpp"
#include "mosaic/rng.hpp"
#include "mosaic/smoothing.hpp"
#include "mosaic/tps.hpp"
#include "oracles.hpp"

using namespace mosaic;

namespace {

Matrix random_points(int n, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, 2);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = u(rng);
    m(i, 1) = u(rng);
  }
  return m;
}

// K partitions by vertical strips, with small fitted coefficient vectors
GlobalPredictor strip_predictor(int k, int n_per, double gamma, Rng& rng,
                                int m_knots = 3, int n_draws = 0) {
  GlobalPredictor pred;
  pred.gamma = gamma;
  std::normal_distribution<double> nd;
  for (int part = 0; part < k; ++part) {
    PartitionFit fit;
    double x0 = static_cast<double>(part) / k, x1 = (part + 1.0) / k;
    fit.member_locations = random_points(n_per, rng);
    fit.member_locations.col(0) =
        (fit.member_locations.col(0).array() * (x1 - x0) + x0).matrix();
    fit.member_indices.resize(n_per);
    for (int i = 0; i < n_per; ++i) fit.member_indices[i] = part * n_per + i;
    fit.knots = random_points(m_knots, rng);
    fit.knots.col(0) = (fit.knots.col(0).array() * (x1 - x0) + x0).matrix();
    fit.beta_mean = Vector(2);
    fit.beta_mean << nd(rng), nd(rng);
    fit.delta_mean = Vector(m_knots);
    for (int j = 0; j < m_knots; ++j) fit.delta_mean[j] = 0.5 * nd(rng);
    if (n_draws > 0) {
      fit.beta_draws.resize(n_draws, 2);
      fit.delta_draws.resize(n_draws, m_knots);
      for (int t = 0; t < n_draws; ++t) {
        for (int j = 0; j < 2; ++j)
          fit.beta_draws(t, j) = fit.beta_mean[j] + 0.01 * nd(rng);
        for (int j = 0; j < m_knots; ++j)
          fit.delta_draws(t, j) = fit.delta_mean[j] + 0.01 * nd(rng);
      }
    }
    fit.index = KdTree2d(fit.member_locations);
    pred.partitions.push_back(std::move(fit));
  }
  return pred;
}

std::vector<int> strip_labels(const GlobalPredictor& pred) {
  std::vector<int> labels;
  for (int k = 0; k < pred.k(); ++k)
    for (Eigen::Index i = 0; i < pred.partitions[k].member_locations.rows(); ++i)
      labels.push_back(k);
  return labels;
}

Matrix stack_members(const GlobalPredictor& pred) {
  long total = 0;
  for (const auto& p : pred.partitions) total += p.member_locations.rows();
  Matrix all(total, 2);
  long r = 0;
  for (const auto& p : pred.partitions) {
    all.middleRows(r, p.member_locations.rows()) = p.member_locations;
    r += p.member_locations.rows();
  }
  return all;
}

}  // namespace

TEST_CASE("kdtree nearest matches exhaustive scan") {
  Rng rng(71);
  Matrix pts = random_points(1000, rng);
  KdTree2d tree(pts);
  for (int q = 0; q < 100; ++q) {
    Point s(std::uniform_real_distribution<double>(-0.2, 1.2)(rng),
            std::uniform_real_distribution<double>(-0.2, 1.2)(rng));
    auto [idx, dist] = tree.nearest(s);
    int best = 0;
    double bd = (pts.row(0).transpose() - s).norm();
    for (int i = 1; i < 1000; ++i) {
      double d = (pts.row(i).transpose() - s).norm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    CHECK(idx == best);
    CHECK(dist == doctest::Approx(bd).epsilon(1e-12));
  }
}

TEST_CASE("nearest_in_partition basics") {
  GlobalPredictor pred;
  PartitionFit fit;
  fit.member_locations.resize(1, 2);
  fit.member_locations << 0.0, 0.0;
  fit.beta_mean = Vector::Zero(2);
  fit.index = KdTree2d(fit.member_locations);
  pred.partitions.push_back(std::move(fit));

  auto [pt, d] = nearest_in_partition(Point(3, 4), pred, 0);
  CHECK(d == doctest::Approx(5.0));
  CHECK(pt.x() == 0.0);

  // member point distance is zero
  auto [pt2, d2] = nearest_in_partition(Point(0, 0), pred, 0);
  CHECK(d2 == 0.0);
}

TEST_CASE("weights: lone survivor, symmetry, explicit three-way case") {
  Vector d(3);
  d << 0.0, 1.0, 2.0;
  WeightVector w = weights_from_distances(d, 0.5);
  CHECK(w.weights[0] == doctest::Approx(1.0));
  CHECK(w.weights[1] == 0.0);
  CHECK_FALSE(w.fallback);

  Vector d2(2);
  d2 << 0.3, 0.3;
  WeightVector w2 = weights_from_distances(d2, 0.5);
  CHECK(w2.weights[0] == doctest::Approx(0.5));
  CHECK(w2.weights[1] == doctest::Approx(0.5));

  Vector d3(3);
  d3 << 0.0, 0.1, 0.2;
  WeightVector w3 = weights_from_distances(d3, 0.25);
  double raw0 = 1.0, raw1 = std::exp(-0.01), raw2 = std::exp(-0.04);
  double tot = raw0 + raw1 + raw2;
  CHECK(w3.weights[0] == doctest::Approx(raw0 / tot).epsilon(1e-12));
  CHECK(w3.weights[1] == doctest::Approx(raw1 / tot).epsilon(1e-12));
  CHECK(w3.weights[2] == doctest::Approx(raw2 / tot).epsilon(1e-12));

  // no partition within gamma: nearest gets weight 1, flagged
  WeightVector wf = weights_from_distances(d3.array() + 10.0, 0.25);
  CHECK(wf.fallback);
  CHECK(wf.weights[0] == 1.0);
}

TEST_CASE("streamed weights equal the dense distance-matrix oracle") {
  Rng rng(5);
  GlobalPredictor pred = strip_predictor(6, 120, 0.2, rng);
  Matrix train = stack_members(pred);
  auto labels = strip_labels(pred);
  Matrix queries = random_points(150, rng, -0.1, 1.1);
  Matrix dense = oracles::dense_weights(queries, train, labels, pred.k(), pred.gamma);
  for (int i = 0; i < queries.rows(); ++i) {
    WeightVector w = compute_weights(queries.row(i).transpose(), pred);
    CHECK((w.weights - dense.row(i).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.weights.minCoeff() >= 0.0);
  }
}

TEST_CASE("own-partition dominance and gamma support monotonicity") {
  Rng rng(15);
  GlobalPredictor pred = strip_predictor(5, 80, 0.3, rng);
  for (int k = 0; k < pred.k(); ++k) {
    for (int i = 0; i < 10; ++i) {
      Point s = pred.partitions[k].member_locations.row(i).transpose();
      WeightVector w = compute_weights(s, pred);
      for (int j = 0; j < pred.k(); ++j) CHECK(w.weights[k] >= w.weights[j]);
      CHECK(w.home == k);
    }
  }
  // support grows with gamma
  Point s(0.31, 0.77);
  Vector d = partition_distances(s, pred);
  std::vector<int> prev;
  for (double gamma : {0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
    WeightVector w = weights_from_distances(d, gamma);
    std::vector<int> support;
    for (int k = 0; k < pred.k(); ++k)
      if (w.weights[k] > 0) support.push_back(k);
    if (!w.fallback) {
      for (int k : prev)
        CHECK(std::find(support.begin(), support.end(), k) != support.end());
      prev = support;
    }
  }
}

TEST_CASE("global_eta matches the literal dense evaluation on a K=2 toy") {
  Rng rng(50);
  GlobalPredictor pred = strip_predictor(2, 25, 0.4, rng, 4);
  Matrix queries = random_points(50, rng);
  for (int i = 0; i < queries.rows(); ++i) {
    Point s = queries.row(i).transpose();
    Vector x_s(2);
    x_s << 1.0, s.x();
    WeightVector w = compute_weights(s, pred);
    double eta = global_eta(s, x_s, w.home, pred, w);

    // dense route: explicit distances, weights, and basis sums
    double d0 = 1e300, d1 = 1e300;
    for (int r = 0; r < pred.partitions[0].member_locations.rows(); ++r)
      d0 = std::min(d0, (pred.partitions[0].member_locations.row(r).transpose() - s).norm());
    for (int r = 0; r < pred.partitions[1].member_locations.rows(); ++r)
      d1 = std::min(d1, (pred.partitions[1].member_locations.row(r).transpose() - s).norm());
    double c0 = d0 <= pred.gamma ? std::exp(-d0 * d0) : 0.0;
    double c1 = d1 <= pred.gamma ? std::exp(-d1 * d1) : 0.0;
    double tot = c0 + c1;
    int home = d0 <= d1 ? 0 : 1;
    if (tot == 0) {
      (home == 0 ? c0 : c1) = 1.0;
      tot = 1.0;
    }
    c0 /= tot;
    c1 /= tot;
    double expect = x_s.dot(pred.partitions[home].beta_mean);
    for (int k = 0; k < 2; ++k) {
      double c = k == 0 ? c0 : c1;
      if (c == 0) continue;
      const auto& part = pred.partitions[k];
      double basis = 0;
      for (int j = 0; j < part.knots.rows(); ++j)
        basis += part.delta_mean[j] *
                 tps_eval(s, part.knots.row(j).transpose());
      expect += c * basis;
    }
    CHECK(eta == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("single-partition model collapses to the local fit") {
  Rng rng(3);
  GlobalPredictor pred = strip_predictor(1, 60, 0.37, rng, 5);
  const auto& part = pred.partitions[0];
  for (int i = 0; i < 20; ++i) {
    Point s = part.member_locations.row(i).transpose();
    Vector x_s(2);
    x_s << 1.0, -0.5;
    WeightVector w = compute_weights(s, pred);
    CHECK(w.weights[0] == doctest::Approx(1.0));
    double eta = global_eta(s, x_s, 0, pred, w);
    double local = x_s.dot(part.beta_mean) +
                   tps_row(s, part.knots).dot(part.delta_mean);
    CHECK(eta == doctest::Approx(local).epsilon(1e-12));
  }
}

TEST_CASE("symmetric negated coefficients cancel the random effect") {
  Rng rng(8);
  GlobalPredictor pred = strip_predictor(2, 30, 2.0, rng, 3);
  // mirror partition 1 as an exact negated copy of partition 0
  pred.partitions[1].knots = pred.partitions[0].knots;
  pred.partitions[1].knots.col(0) = (1.0 - pred.partitions[1].knots.col(0).array()).matrix();
  pred.partitions[1].delta_mean = -pred.partitions[0].delta_mean;
  pred.partitions[1].member_locations = pred.partitions[0].member_locations;
  pred.partitions[1].member_locations.col(0) =
      (1.0 - pred.partitions[1].member_locations.col(0).array()).matrix();
  pred.partitions[1].index = KdTree2d(pred.partitions[1].member_locations);

  // on the mirror axis both partitions sit at equal distance with mirrored
  // basis values, so the weighted random effects cancel
  Point s(0.5, 0.4);
  WeightVector w = compute_weights(s, pred);
  REQUIRE(w.weights[0] == doctest::Approx(w.weights[1]).epsilon(1e-9));
  double rand_eff = 0.0;
  for (int k = 0; k < 2; ++k)
    rand_eff += w.weights[k] *
                tps_row(s, pred.partitions[k].knots).dot(pred.partitions[k].delta_mean);
  CHECK(rand_eff == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("predict_response inverse links and intervals") {
  Vector zero1(1);
  zero1 << 0.0;
  CHECK(predict_response(zero1, Family::Bernoulli).mean == doctest::Approx(0.5));
  CHECK(predict_response(zero1, Family::Poisson).mean == doctest::Approx(1.0));

  Vector two(2);
  two << std::log(1.0), std::log(3.0);
  CHECK(predict_response(two, Family::Poisson).mean == doctest::Approx(2.0));

  CHECK_THROWS_AS(predict_response(Vector(0), Family::Poisson), Error);

  Rng rng(31);
  std::normal_distribution<double> nd;
  Vector draws(20000);
  for (int i = 0; i < draws.size(); ++i) draws[i] = nd(rng);
  PredictiveSummary ps = predict_response(draws, Family::Poisson);
  CHECK(ps.lo == doctest::Approx(std::exp(-1.96)).epsilon(0.05));
  CHECK(ps.hi == doctest::Approx(std::exp(1.96)).epsilon(0.05));
}

TEST_CASE("rcvmspe and misclassification basics") {
  Vector t(2), p(2);
  t << 0, 2;
  p << 1, 1;
  CHECK(rcvmspe(p, t) == doctest::Approx(1.0));
  CHECK(rcvmspe(t, t) == 0.0);
  CHECK_THROWS_AS(rcvmspe(Vector(0), Vector(0)), Error);

  Vector probs(4), truth(4);
  probs << 0.9, 0.9, 0.1, 0.1;
  truth << 1, 1, 0, 0;
  CHECK(misclassification_rate(probs, truth) == 0.0);

  Vector half = Vector::Constant(4, 0.5);
  CHECK(misclassification_rate(half, truth) == doctest::Approx(0.5));

  Vector bad(1);
  bad << 1.5;
  Vector t1(1);
  t1 << 1;
  CHECK_THROWS_AS(misclassification_rate(bad, t1), Error);
}

TEST_CASE("tune_gamma scores candidates and breaks ties small") {
  Rng rng(77);
  GlobalPredictor pred = strip_predictor(3, 100, 0.2, rng);
  Matrix valid = random_points(200, rng);
  Matrix cov(200, 2);
  Vector resp(200);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200; ++i) {
    cov(i, 0) = nd(rng);
    cov(i, 1) = nd(rng);
    std::poisson_distribution<long> pois(1.0);
    resp[i] = static_cast<double>(pois(rng));
  }
  GammaTable single = tune_gamma(pred, {0.3}, valid, cov, resp, Family::Poisson);
  CHECK(single.scores.size() == 1);
  CHECK(single.best_gamma == 0.3);

  GammaTable table = tune_gamma(pred, {0.1, 0.2, 0.4}, valid, cov, resp,
                                Family::Poisson);
  CHECK(table.scores.size() == 3);
  double best_score = 1e300;
  for (const auto& s : table.scores) best_score = std::min(best_score, s.score);
  for (const auto& s : table.scores)
    if (s.score == best_score) {
      CHECK(table.best_gamma == s.gamma);
      break;  // first equal score has the smallest gamma in the list order
    }
  CHECK_THROWS_AS(tune_gamma(pred, {}, valid, cov, resp, Family::Poisson), Error);
}
