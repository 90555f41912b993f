#include "mosaic/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mosaic/glm.hpp"
#include "mosaic/lasso.hpp"
#include "mosaic/lattice.hpp"
#include "mosaic/simulate.hpp"
#include "mosaic/thread_pool.hpp"
#include "mosaic/tps.hpp"

namespace mosaic {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ (stream + 0x9e3779b97f4a7c15ULL));
}

void RunConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::Config, "config: k must be at least 1");
  if (workers < 1) throw Error(ErrorKind::Config, "config: workers must be at least 1");
  for (double g : gamma_candidates)
    if (!(g > 0)) throw Error(ErrorKind::Config, "config: gamma candidates must be positive");
  if (gamma_candidates.empty())
    throw Error(ErrorKind::Config, "config: need at least one gamma candidate");
  if (!(holdout_fraction > 0 && holdout_fraction < 1))
    throw Error(ErrorKind::Config, "config: holdout fraction must lie in (0,1)");
  if (!simulate && input_csv.empty())
    throw Error(ErrorKind::Config, "config: either an input CSV or --simulate is required");
  if (mcmc_iterations < 2)
    throw Error(ErrorKind::Config, "config: mcmc iterations too small");
}

double RunReport::stage_seconds(const std::string& stage) const {
  for (const auto& t : timings)
    if (t.stage == stage) return t.seconds;
  return 0.0;
}

namespace {

class StageClock {
 public:
  explicit StageClock(RunReport& report) : report_(report) {}
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, t0);
    } else {
      auto out = f();
      record(stage, t0);
      return out;
    }
  }

 private:
  void record(const std::string& stage,
              std::chrono::steady_clock::time_point t0) {
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count();
    report_.timings.push_back({stage, s});
  }
  RunReport& report_;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
}

json json_of_point_matrix(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    a.push_back({m(i, 0), m(i, 1)});
  return a;
}

Matrix point_matrix_of_json(const json& a) {
  Matrix m(static_cast<Eigen::Index>(a.size()), 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = a[i][0].get<double>();
    m(static_cast<Eigen::Index>(i), 1) = a[i][1].get<double>();
  }
  return m;
}

json json_of_summaries(const std::vector<ParameterSummary>& s, int from, int count) {
  json a = json::array();
  for (int j = from; j < from + count; ++j)
    a.push_back({{"mean", s[j].mean}, {"lo", s[j].lo}, {"hi", s[j].hi}});
  return a;
}

void write_draw_dump(const std::string& path, const Matrix& draws, int p, int m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  std::int64_t header[3] = {static_cast<std::int64_t>(draws.rows()),
                            static_cast<std::int64_t>(p),
                            static_cast<std::int64_t>(m)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<double> row(draws.cols());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) row[j] = draws(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

Matrix read_draw_dump(const std::string& path, int& p, int& m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  std::int64_t header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw Error(ErrorKind::Io, "draw dump '" + path + "': truncated header");
  p = static_cast<int>(header[1]);
  m = static_cast<int>(header[2]);
  Matrix draws(header[0], header[1] + header[2] + 1);
  std::vector<double> row(draws.cols());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::Io, "draw dump '" + path + "': truncated row");
    for (Eigen::Index j = 0; j < draws.cols(); ++j) draws(i, j) = row[j];
  }
  return draws;
}

struct FitArtifacts {
  GlobalPredictor predictor;
  std::vector<PartitionReport> partition_reports;
};

std::string partition_json_path(const std::string& out, int k) {
  return out + "/posterior/partition_" + std::to_string(k) + ".json";
}
std::string knots_json_path(const std::string& out, int k) {
  return out + "/knots/partition_" + std::to_string(k) + ".json";
}
std::string draws_bin_path(const std::string& out, int k) {
  return out + "/draws/partition_" + std::to_string(k) + ".bin";
}

// Per-partition knot selection and posterior sampling; jobs are independent
// and persist their own artifacts.
FitArtifacts fit_partitions(const SpatialDataset& train, const Partitioning& part,
                            const RunConfig& config) {
  const int K = part.k;
  std::vector<std::vector<int>> rows(K);
  for (std::size_t i = 0; i < part.labels.size(); ++i)
    rows[part.labels[i]].push_back(static_cast<int>(i));

  FitArtifacts art;
  art.predictor.partitions.resize(K);
  art.partition_reports.resize(K);

  // Longest partitions first to reduce makespan across the pool.
  std::vector<int> order(K);
  for (int k = 0; k < K; ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return rows[a].size() > rows[b].size(); });

  std::vector<std::function<void()>> jobs;
  for (int idx = 0; idx < K; ++idx) {
    int k = order[idx];
    jobs.push_back([&, k]() {
      const auto& rk = rows[k];
      if (rk.empty())
        throw Error(ErrorKind::Stage, "partition " + std::to_string(k) + " is empty");
      SpatialDataset local = train.subset(rk);

      double t0 = now_seconds();
      Matrix candidates = candidate_knots(local.locations, config.m_target);
      Matrix phi = tps_design(local.locations, candidates);

      LassoOptions lopt;
      lopt.cv_seed = derive_seed(config.seed, 1000 + k);
      lopt.cv_folds = std::max(2, std::min<int>(5, static_cast<int>(rk.size()) / 4));
      LassoFit sel = lasso_path_fit(local.responses, local.covariates, phi,
                                    local.family, lopt);
      double lasso_seconds = now_seconds() - t0;

      const int m_sel = static_cast<int>(sel.active_set.size());
      Matrix sel_knots(m_sel, 2);
      Matrix phi_sel(local.n(), m_sel);
      Vector delta_init(m_sel);
      for (int j = 0; j < m_sel; ++j) {
        sel_knots.row(j) = candidates.row(sel.active_set[j]);
        phi_sel.col(j) = phi.col(sel.active_set[j]);
        delta_init[j] = sel.delta[sel.active_set[j]];
      }

      LocalModel model;
      model.z = local.responses;
      model.x = local.covariates;
      model.phi = phi_sel;
      model.family = local.family;

      McmcOptions mopt;
      mopt.iterations = config.mcmc_iterations;
      mopt.burn_in = config.mcmc_burn_in;
      mopt.seed = derive_seed(config.seed, 2000 + k);

      t0 = now_seconds();
      PosteriorSamples samples = run_chain(model, sel.beta, delta_init, mopt);
      double mcmc_seconds = now_seconds() - t0;

      auto summary = posterior_summary(samples, samples.burn_in);
      const int p = static_cast<int>(local.p());

      PartitionFit fit;
      fit.member_locations = local.locations;
      fit.member_indices = rk;
      fit.knots = sel_knots;
      fit.beta_mean.resize(p);
      for (int j = 0; j < p; ++j) fit.beta_mean[j] = summary[j].mean;
      fit.delta_mean.resize(m_sel);
      for (int j = 0; j < m_sel; ++j) fit.delta_mean[j] = summary[p + j].mean;

      if (config.predictive_draws > 0) {
        int post_n = samples.burn_in < static_cast<int>(samples.draws.rows())
                         ? static_cast<int>(samples.draws.rows()) - samples.burn_in
                         : 0;
        int keep = std::min(config.predictive_draws, post_n);
        int stride = std::max(1, post_n / std::max(1, keep));
        std::vector<int> kept;
        for (int t = samples.burn_in; t < samples.draws.rows() && (int)kept.size() < keep;
             t += stride)
          kept.push_back(t);
        fit.beta_draws.resize(kept.size(), p);
        fit.delta_draws.resize(kept.size(), m_sel);
        for (std::size_t r = 0; r < kept.size(); ++r) {
          fit.beta_draws.row(r) = samples.draws.row(kept[r]).head(p);
          fit.delta_draws.row(r) = samples.draws.row(kept[r]).segment(p, m_sel);
        }
      }
      fit.index = KdTree2d(fit.member_locations);

      // Artifacts.
      if (!config.out_dir.empty()) {
        json knots_doc;
        knots_doc["partition"] = k;
        knots_doc["candidates"] = json_of_point_matrix(candidates);
        json active = json::array();
        std::vector<char> is_active(candidates.rows(), 0);
        for (int j : sel.active_set) is_active[j] = 1;
        for (Eigen::Index j = 0; j < candidates.rows(); ++j)
          active.push_back(static_cast<bool>(is_active[j]));
        knots_doc["active"] = active;
        knots_doc["lambda"] = sel.lambda;
        write_text(knots_json_path(config.out_dir, k), knots_doc.dump(2));

        json post;
        post["partition"] = k;
        post["n_obs"] = static_cast<long>(rk.size());
        post["beta"] = json_of_summaries(summary, 0, p);
        post["delta"] = json_of_summaries(summary, p, m_sel);
        post["sigma2"] = {{"mean", summary[p + m_sel].mean},
                          {"lo", summary[p + m_sel].lo},
                          {"hi", summary[p + m_sel].hi}};
        post["acceptance_rate"] = samples.acceptance_rate;
        post["seed"] = mopt.seed;
        post["burn_in"] = samples.burn_in;
        post["iterations"] = config.mcmc_iterations;
        post["warning_short_run"] = samples.warning_short_run;
        // Posterior means at full precision for exact predictor reload.
        post["beta_mean"] = std::vector<double>(fit.beta_mean.data(),
                                                fit.beta_mean.data() + p);
        post["delta_mean"] = std::vector<double>(fit.delta_mean.data(),
                                                 fit.delta_mean.data() + m_sel);
        write_text(partition_json_path(config.out_dir, k), post.dump(2));

        if (config.dump_draws)
          write_draw_dump(draws_bin_path(config.out_dir, k), samples.draws, p, m_sel);
      }

      PartitionReport rep;
      rep.partition = k;
      rep.n_obs = static_cast<long>(rk.size());
      rep.m_candidates = static_cast<int>(candidates.rows());
      rep.m_selected = m_sel;
      rep.lambda = sel.lambda;
      rep.acceptance_rate = samples.acceptance_rate;
      rep.lasso_seconds = lasso_seconds;
      rep.mcmc_seconds = mcmc_seconds;
      rep.beta_summary.assign(summary.begin(), summary.begin() + p);

      art.predictor.partitions[k] = std::move(fit);
      art.partition_reports[k] = rep;
    });
  }
  run_jobs(jobs, config.workers);
  return art;
}

void write_partition_map(const std::string& path, const SpatialDataset& train,
                         const std::vector<int>& train_indices,
                         const Partitioning& part) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << "index,x,y,partition\n";
  char buf[96];
  for (Eigen::Index i = 0; i < train.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%d\n", train_indices[i],
                  train.locations(i, 0), train.locations(i, 1),
                  part.labels[static_cast<std::size_t>(i)]);
    out << buf;
  }
}

SpatialDataset obtain_dataset(const RunConfig& config) {
  if (config.simulate) {
    SimConfig sim = config.sim_unit_square
                        ? SimConfig::unit_square_layout(config.family, config.seed)
                        : SimConfig::reference_layout(config.family, config.seed);
    if (config.sim_noise_sd >= 0) sim.noise_sd = config.sim_noise_sd;
    Matrix targets = default_targets(config.sim_n, sim);
    SpatialDataset data = simulate_dataset(targets, CovariateSpec::TwoStandardNormal,
                                           sim, 1);
    if (!config.out_dir.empty()) {
      CsvSchema schema;
      schema.covariates = {"x1", "x2"};
      write_dataset_csv(config.out_dir + "/dataset.csv", data, schema);
      json sidecar;
      sidecar["seed"] = sim.seed;
      sidecar["family"] = family_name(sim.family);
      sidecar["noise_sd"] = sim.noise_sd;
      sidecar["beta"] = std::vector<double>(sim.beta.data(),
                                            sim.beta.data() + sim.beta.size());
      sidecar["basis_locations"] = json_of_point_matrix(sim.basis_locations);
      sidecar["reference_locations"] = json_of_point_matrix(sim.reference_locations);
      json covs = json::array();
      for (const auto& s : sim.basis_covariances)
        covs.push_back({s(0, 0), s(0, 1), s(1, 1)});
      sidecar["basis_covariances"] = covs;
      sidecar["literal_exponent"] = sim.literal_exponent;
      sidecar["covariates"] = "two_standard_normal";
      write_text(config.out_dir + "/dataset_config.json", sidecar.dump(2));
    }
    return data;
  }
  return load_dataset(config.input_csv, config.schema, config.family);
}

Vector baseline_predictions(const SpatialDataset& train, const SpatialDataset& valid) {
  GlmFit base = fit_glm(train);
  return inverse_link(train.family, valid.covariates * base.beta);
}

}  // namespace

RunReport run_pipeline(const RunConfig& config) {
  config.validate();
  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    ensure_dir(config.out_dir + "/knots");
    ensure_dir(config.out_dir + "/posterior");
    if (config.dump_draws) ensure_dir(config.out_dir + "/draws");
  }

  RunReport report;
  report.seed = config.seed;
  report.k = config.k;
  report.mcmc_iterations = config.mcmc_iterations;
  StageClock clock(report);
  std::string current_stage = "ingest";

  try {
    SpatialDataset data =
        clock.run("ingest", [&]() { return obtain_dataset(config); });
    report.n_total = data.n();

    current_stage = "split";
    auto [train_idx, valid_idx] = clock.run("split", [&]() {
      return split_holdout_indices(data.n(), config.holdout_fraction, config.seed);
    });
    SpatialDataset train = data.subset(train_idx);
    SpatialDataset valid = data.subset(valid_idx);
    report.n_train = train.n();
    report.n_valid = valid.n();

    current_stage = "glm";
    GlmFit glm = clock.run("glm", [&]() { return fit_glm(train); });
    report.glm_converged = glm.converged;
    Vector residuals =
        config.residual_type == ResidualType::Deviance
            ? glm.residuals
            : glm_residuals(train.family, train.responses,
                            inverse_link(train.family, train.covariates * glm.beta),
                            config.residual_type);

    current_stage = "cluster";
    Partitioning part = clock.run("cluster", [&]() {
      Lattice lattice = build_lattice(train.locations, residuals,
                                      config.lattice_target);
      Adjacency adj = voronoi_neighbors(lattice.points);
      return agglomerate(lattice, adj, config.k);
    });
    if (!config.out_dir.empty())
      write_partition_map(config.out_dir + "/partition_map.csv", train, train_idx,
                          part);
    if (config.stop_after == StopAfter::Cluster) {
      if (!config.out_dir.empty())
        write_report_json(config.out_dir + "/report.json", report, config);
      return report;
    }

    current_stage = "fit";
    FitArtifacts art =
        clock.run("fit", [&]() { return fit_partitions(train, part, config); });
    report.partitions = art.partition_reports;
    if (config.stop_after == StopAfter::Fit) {
      if (!config.out_dir.empty())
        write_report_json(config.out_dir + "/report.json", report, config);
      return report;
    }

    current_stage = "tune";
    GammaTable table = clock.run("tune", [&]() {
      return tune_gamma(art.predictor, config.gamma_candidates, valid.locations,
                        valid.covariates, valid.responses, config.family,
                        config.workers);
    });
    report.gamma_table = table;
    report.chosen_gamma = table.best_gamma;
    for (const auto& s : table.scores)
      if (s.gamma == table.best_gamma) report.score = s.score;
    report.metric =
        config.family == Family::Bernoulli ? "misclassification" : "rcvmspe";

    current_stage = "baseline";
    clock.run("baseline", [&]() {
      Vector pred = baseline_predictions(train, valid);
      report.baseline_score = config.family == Family::Bernoulli
                                  ? misclassification_rate(pred, valid.responses)
                                  : rcvmspe(pred, valid.responses);
    });

    current_stage = "predict";
    art.predictor.gamma = table.best_gamma;
    if (!config.out_dir.empty()) {
      clock.run("predict", [&]() {
        std::ofstream out(config.out_dir + "/predictions.csv");
        if (!out) throw Error(ErrorKind::Io, "cannot write predictions.csv");
        out << "index,x,y,eta_mean,response_mean,lo95,hi95,home_partition,"
               "fallback_flag\n";
        const auto& pr = art.predictor;
        std::vector<std::string> lines(valid.n());
        parallel_for(0, valid.n(), config.workers, [&](Eigen::Index i) {
          Point s = valid.location(i);
          WeightVector wv = compute_weights(s, pr);
          Vector x_s = valid.covariates.row(i).transpose();
          double eta = global_eta(s, x_s, wv.home, pr, wv);
          PredictiveSummary ps;
          if (pr.has_draws()) {
            ps = predict_response(global_eta_draws(s, x_s, wv.home, pr, wv),
                                  valid.family);
          } else {
            ps.mean = inverse_link(valid.family, eta);
            ps.lo = ps.hi = ps.mean;
          }
          char buf[256];
          std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d",
                        valid_idx[i], s.x(), s.y(), eta, ps.mean, ps.lo, ps.hi,
                        wv.home, wv.fallback ? 1 : 0);
          lines[i] = buf;
        });
        for (const auto& l : lines) out << l << '\n';
      });

      if (config.surface_grid > 0) {
        clock.run("surface", [&]() {
          auto dom_x = std::minmax_element(data.locations.col(0).data(),
                                           data.locations.col(0).data() + data.n());
          auto dom_y = std::minmax_element(data.locations.col(1).data(),
                                           data.locations.col(1).data() + data.n());
          Matrix grid = grid_targets(config.surface_grid, config.surface_grid,
                                     *dom_x.first, *dom_x.second, *dom_y.first,
                                     *dom_y.second);
          Matrix cov = Matrix::Zero(grid.rows(), train.p());
          write_surface_csv(config.out_dir + "/surface.csv", art.predictor, grid,
                            cov, config.family, config.workers);
        });
      }
    }

    if (!config.out_dir.empty())
      write_report_json(config.out_dir + "/report.json", report, config);
    return report;
  } catch (const std::exception& e) {
    if (!config.out_dir.empty()) {
      const Error* err = dynamic_cast<const Error*>(&e);
      json rec;
      rec["stage"] = current_stage;
      rec["kind"] = err ? error_kind_name(err->kind) : "unknown";
      rec["message"] = e.what();
      write_text(config.out_dir + "/error.json", rec.dump(2));
      write_report_json(config.out_dir + "/report.json", report, config);
    }
    throw;
  }
}

SweepResult sweep_k(const RunConfig& config, const std::vector<int>& k_candidates) {
  if (k_candidates.empty())
    throw Error(ErrorKind::Argument, "sweep_k: need at least one candidate");
  SweepResult sweep;
  sweep.k_candidates = k_candidates;
  sweep.gammas = config.gamma_candidates;
  sweep.scores.resize(static_cast<Eigen::Index>(k_candidates.size()),
                      static_cast<Eigen::Index>(config.gamma_candidates.size()));

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ki = 0; ki < k_candidates.size(); ++ki) {
    RunConfig c = config;
    c.k = k_candidates[ki];
    if (!config.out_dir.empty()) c.out_dir = config.out_dir + "/K" + std::to_string(c.k);
    RunReport rep = run_pipeline(c);
    for (std::size_t gi = 0; gi < rep.gamma_table.scores.size(); ++gi)
      sweep.scores(static_cast<Eigen::Index>(ki), static_cast<Eigen::Index>(gi)) =
          rep.gamma_table.scores[gi].score;
    for (std::size_t gi = 0; gi < rep.gamma_table.scores.size(); ++gi) {
      double s = rep.gamma_table.scores[gi].score;
      if (s < best) {  // strict: ties keep the earlier (smaller) K
        best = s;
        sweep.best_k = k_candidates[ki];
        sweep.best_gamma = rep.gamma_table.scores[gi].gamma;
      }
    }
    sweep.reports.push_back(std::move(rep));
  }
  return sweep;
}

std::string report_timings(const RunReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "stage            seconds\n";
  for (const auto& t : report.timings) {
    std::snprintf(buf, sizeof(buf), "%-16s %10.3f\n", t.stage.c_str(), t.seconds);
    out << buf;
  }
  double lasso_cpu = 0, mcmc_cpu = 0;
  for (const auto& p : report.partitions) {
    lasso_cpu += p.lasso_seconds;
    mcmc_cpu += p.mcmc_seconds;
  }
  out << "---\n";
  std::snprintf(buf, sizeof(buf), "lasso cpu total  %10.3f\nmcmc cpu total   %10.3f\n",
                lasso_cpu, mcmc_cpu);
  out << buf;
  if (mcmc_cpu > 0 && !report.partitions.empty() && report.mcmc_iterations > 0) {
    double total_iters = static_cast<double>(report.mcmc_iterations) *
                         static_cast<double>(report.partitions.size());
    std::snprintf(buf, sizeof(buf), "mcmc iterations/sec (all chains) %.0f\n",
                  total_iters / mcmc_cpu);
    out << buf;
  }
  double tune_s = report.stage_seconds("tune");
  if (tune_s > 0 && report.n_valid > 0) {
    std::snprintf(buf, sizeof(buf), "weighting locations/sec %.0f\n",
                  static_cast<double>(report.n_valid) /
                      std::max(1e-9, tune_s));
    out << buf;
  }
  return out.str();
}

GlobalPredictor load_predictor(const std::string& out_dir, int max_draws) {
  std::ifstream map(out_dir + "/partition_map.csv");
  if (!map) throw Error(ErrorKind::Io, "cannot read partition_map.csv in " + out_dir);
  std::string line;
  std::getline(map, line);  // header
  std::vector<std::vector<std::array<double, 2>>> members;
  std::vector<std::vector<int>> member_idx;
  while (std::getline(map, line)) {
    if (line.empty()) continue;
    int index, label;
    double x, y;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%d", &index, &x, &y, &label) != 4)
      throw Error(ErrorKind::Io, "partition_map.csv: bad row '" + line + "'");
    if (label >= static_cast<int>(members.size())) {
      members.resize(label + 1);
      member_idx.resize(label + 1);
    }
    members[label].push_back({x, y});
    member_idx[label].push_back(index);
  }

  GlobalPredictor pred;
  pred.partitions.resize(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    PartitionFit& fit = pred.partitions[k];
    fit.member_locations.resize(static_cast<Eigen::Index>(members[k].size()), 2);
    for (std::size_t i = 0; i < members[k].size(); ++i) {
      fit.member_locations(static_cast<Eigen::Index>(i), 0) = members[k][i][0];
      fit.member_locations(static_cast<Eigen::Index>(i), 1) = members[k][i][1];
    }
    fit.member_indices = member_idx[k];

    std::ifstream kin(knots_json_path(out_dir, static_cast<int>(k)));
    if (!kin) throw Error(ErrorKind::Io, "missing knots JSON for partition " +
                                             std::to_string(k));
    json kdoc = json::parse(kin);
    Matrix candidates = point_matrix_of_json(kdoc["candidates"]);
    std::vector<int> active;
    for (std::size_t j = 0; j < kdoc["active"].size(); ++j)
      if (kdoc["active"][j].get<bool>()) active.push_back(static_cast<int>(j));
    fit.knots.resize(static_cast<Eigen::Index>(active.size()), 2);
    for (std::size_t j = 0; j < active.size(); ++j)
      fit.knots.row(static_cast<Eigen::Index>(j)) = candidates.row(active[j]);

    std::ifstream pin(partition_json_path(out_dir, static_cast<int>(k)));
    if (!pin) throw Error(ErrorKind::Io, "missing posterior JSON for partition " +
                                             std::to_string(k));
    json pdoc = json::parse(pin);
    auto bm = pdoc["beta_mean"].get<std::vector<double>>();
    auto dm = pdoc["delta_mean"].get<std::vector<double>>();
    fit.beta_mean = Eigen::Map<Vector>(bm.data(), static_cast<Eigen::Index>(bm.size()));
    fit.delta_mean = Eigen::Map<Vector>(dm.data(), static_cast<Eigen::Index>(dm.size()));

    std::string dpath = draws_bin_path(out_dir, static_cast<int>(k));
    if (max_draws > 0 && fs::exists(dpath)) {
      int p = 0, m = 0;
      Matrix draws = read_draw_dump(dpath, p, m);
      int burn = pdoc.value("burn_in", static_cast<int>(draws.rows()) / 2);
      int post_n = static_cast<int>(draws.rows()) - burn;
      int keep = std::min(max_draws, post_n);
      int stride = std::max(1, post_n / std::max(1, keep));
      std::vector<int> kept;
      for (int t = burn; t < draws.rows() && static_cast<int>(kept.size()) < keep;
           t += stride)
        kept.push_back(t);
      fit.beta_draws.resize(kept.size(), p);
      fit.delta_draws.resize(kept.size(), m);
      for (std::size_t r = 0; r < kept.size(); ++r) {
        fit.beta_draws.row(r) = draws.row(kept[r]).head(p);
        fit.delta_draws.row(r) = draws.row(kept[r]).segment(p, m);
      }
    }
    fit.index = KdTree2d(fit.member_locations);
  }
  return pred;
}

GammaTable retune_gamma(const RunConfig& config) {
  config.validate();
  if (config.out_dir.empty())
    throw Error(ErrorKind::Config, "retune: an output directory with artifacts is required");
  GlobalPredictor pred = load_predictor(config.out_dir, 0);

  RunConfig c = config;
  c.out_dir.clear();  // reload inputs without rewriting artifacts
  SpatialDataset data = obtain_dataset(c);
  auto [train_idx, valid_idx] =
      split_holdout_indices(data.n(), config.holdout_fraction, config.seed);
  SpatialDataset valid = data.subset(valid_idx);
  return tune_gamma(pred, config.gamma_candidates, valid.locations, valid.covariates,
                    valid.responses, config.family, config.workers);
}

void write_surface_csv(const std::string& path, const GlobalPredictor& predictor,
                       const Matrix& grid, const Matrix& covariates, Family family,
                       int workers) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << "x,y,value\n";
  std::vector<std::string> lines(grid.rows());
  parallel_for(0, grid.rows(), workers, [&](Eigen::Index i) {
    Point s = grid.row(i).transpose();
    WeightVector wv = compute_weights(s, predictor);
    Vector x_s = covariates.row(i).transpose();
    double eta = global_eta(s, x_s, wv.home, predictor, wv);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", s.x(), s.y(),
                  inverse_link(family, eta));
    lines[i] = buf;
  });
  for (const auto& l : lines) out << l << '\n';
}

void write_report_json(const std::string& path, const RunReport& report,
                       const RunConfig& config) {
  json doc;
  doc["seed"] = report.seed;
  doc["k"] = report.k;
  doc["n_total"] = report.n_total;
  doc["n_train"] = report.n_train;
  doc["n_valid"] = report.n_valid;
  doc["metric"] = report.metric;
  doc["score"] = report.score;
  doc["baseline_score"] = report.baseline_score;
  doc["chosen_gamma"] = report.chosen_gamma;
  doc["glm_converged"] = report.glm_converged;
  json stages = json::array();
  for (const auto& t : report.timings)
    stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  doc["timings"] = stages;
  json parts = json::array();
  for (const auto& p : report.partitions) {
    json jp = {{"partition", p.partition},
               {"n_obs", p.n_obs},
               {"m_candidates", p.m_candidates},
               {"m_selected", p.m_selected},
               {"lambda", p.lambda},
               {"acceptance_rate", p.acceptance_rate},
               {"lasso_seconds", p.lasso_seconds},
               {"mcmc_seconds", p.mcmc_seconds}};
    json betas = json::array();
    for (const auto& b : p.beta_summary)
      betas.push_back({{"mean", b.mean}, {"lo", b.lo}, {"hi", b.hi}});
    jp["beta"] = betas;
    parts.push_back(jp);
  }
  doc["partitions"] = parts;
  json scores = json::array();
  for (const auto& s : report.gamma_table.scores)
    scores.push_back({{"gamma", s.gamma},
                      {"score", s.score},
                      {"fallback_count", s.fallback_count}});
  doc["gamma_scores"] = scores;
  doc["config"] = {{"family", family_name(config.family)},
                   {"k", config.k},
                   {"lattice_target", config.lattice_target},
                   {"m_target", config.m_target},
                   {"holdout_fraction", config.holdout_fraction},
                   {"mcmc_iterations", config.mcmc_iterations},
                   {"mcmc_burn_in", config.mcmc_burn_in},
                   {"workers", config.workers},
                   {"simulate", config.simulate},
                   {"sim_n", config.sim_n},
                   {"input_csv", config.input_csv}};
  write_text(path, doc.dump(2));
}

RunReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  json doc = json::parse(in);
  RunReport report;
  report.seed = doc.value("seed", 0ULL);
  report.k = doc.value("k", 0);
  report.n_total = doc.value("n_total", 0L);
  report.n_train = doc.value("n_train", 0L);
  report.n_valid = doc.value("n_valid", 0L);
  report.metric = doc.value("metric", "");
  report.score = doc.value("score", 0.0);
  report.baseline_score = doc.value("baseline_score", 0.0);
  report.chosen_gamma = doc.value("chosen_gamma", 0.0);
  report.glm_converged = doc.value("glm_converged", true);
  if (doc.contains("config"))
    report.mcmc_iterations = doc["config"].value("mcmc_iterations", 0);
  for (const auto& t : doc["timings"])
    report.timings.push_back({t["stage"].get<std::string>(), t["seconds"].get<double>()});
  for (const auto& p : doc["partitions"]) {
    PartitionReport pr;
    pr.partition = p["partition"].get<int>();
    pr.n_obs = p["n_obs"].get<long>();
    pr.m_candidates = p["m_candidates"].get<int>();
    pr.m_selected = p["m_selected"].get<int>();
    pr.lambda = p["lambda"].get<double>();
    pr.acceptance_rate = p["acceptance_rate"].get<double>();
    pr.lasso_seconds = p["lasso_seconds"].get<double>();
    pr.mcmc_seconds = p["mcmc_seconds"].get<double>();
    if (p.contains("beta"))
      for (const auto& b : p["beta"])
        pr.beta_summary.push_back(
            {b["mean"].get<double>(), b["lo"].get<double>(), b["hi"].get<double>()});
    report.partitions.push_back(pr);
  }
  for (const auto& s : doc["gamma_scores"]) {
    GammaScore gs;
    gs.gamma = s["gamma"].get<double>();
    gs.score = s["score"].get<double>();
    gs.fallback_count = s["fallback_count"].get<long>();
    report.gamma_table.scores.push_back(gs);
  }
  report.gamma_table.best_gamma = report.chosen_gamma;
  return report;
}

}  // namespace mosaic
