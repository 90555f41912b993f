#include "mosaic/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mosaic/rng.hpp"

namespace mosaic {

void SpatialDataset::validate() const {
  const Eigen::Index N = responses.size();
  if (locations.rows() != N || covariates.rows() != N)
    throw Error(ErrorKind::Validation, "dataset: length mismatch between columns");
  if (covariates.cols() < 1)
    throw Error(ErrorKind::Validation, "dataset: at least one covariate required");
  if (!locations.allFinite() || !covariates.allFinite() || !responses.allFinite())
    throw Error(ErrorKind::Validation, "dataset: non-finite field");
  for (Eigen::Index i = 0; i < N; ++i) {
    double z = responses[i];
    if (z != std::floor(z))
      throw Error(ErrorKind::Validation,
                  "dataset: non-integer response at row " + std::to_string(i));
    if (family == Family::Poisson && z < 0)
      throw Error(ErrorKind::Validation,
                  "dataset: negative count response at row " + std::to_string(i));
    if (family == Family::Bernoulli && z != 0 && z != 1)
      throw Error(ErrorKind::Validation,
                  "dataset: non-binary response at row " + std::to_string(i));
  }
}

SpatialDataset SpatialDataset::subset(const std::vector<int>& idx) const {
  SpatialDataset out;
  out.family = family;
  out.locations.resize(idx.size(), 2);
  out.responses.resize(idx.size());
  out.covariates.resize(idx.size(), covariates.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.locations.row(r) = locations.row(idx[r]);
    out.responses[r] = responses[idx[r]];
    out.covariates.row(r) = covariates.row(idx[r]);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    // trim surrounding whitespace and a possible trailing \r
    auto b = cur.find_first_not_of(" \t\r");
    auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_field(const std::string& s, long row, const std::string& col) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
    throw Error(ErrorKind::Validation, "row " + std::to_string(row) +
                                           ": field '" + col + "' value '" + s +
                                           "' is not a finite number");
  return v;
}

}  // namespace

SpatialDataset load_dataset(const std::string& path, const CsvSchema& schema,
                            Family family) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  if (schema.covariates.empty())
    throw Error(ErrorKind::Schema, "schema: at least one covariate column required");

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::Schema, "'" + path + "': missing header row");
  auto header = split_csv_line(line);

  auto col_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(ErrorKind::Schema, "'" + path + "': missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };

  int cx = col_of(schema.x), cy = col_of(schema.y), cz = col_of(schema.z);
  std::vector<int> ccov;
  for (const auto& name : schema.covariates) ccov.push_back(col_of(name));

  std::vector<double> xs, ys, zs;
  std::vector<std::vector<double>> cov(ccov.size());
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw Error(ErrorKind::Validation, "row " + std::to_string(row) + ": expected " +
                                             std::to_string(header.size()) +
                                             " fields, got " + std::to_string(f.size()));
    xs.push_back(parse_field(f[cx], row, schema.x));
    ys.push_back(parse_field(f[cy], row, schema.y));
    double z = parse_field(f[cz], row, schema.z);
    if (z != std::floor(z))
      throw Error(ErrorKind::Validation,
                  "row " + std::to_string(row) + ": non-integer response " + f[cz]);
    if (family == Family::Poisson && z < 0)
      throw Error(ErrorKind::Validation,
                  "row " + std::to_string(row) + ": negative count response " + f[cz]);
    if (family == Family::Bernoulli && z != 0 && z != 1)
      throw Error(ErrorKind::Validation,
                  "row " + std::to_string(row) + ": non-binary response " + f[cz]);
    zs.push_back(z);
    for (std::size_t j = 0; j < ccov.size(); ++j)
      cov[j].push_back(parse_field(f[ccov[j]], row, schema.covariates[j]));
  }

  SpatialDataset d;
  d.family = family;
  const Eigen::Index N = static_cast<Eigen::Index>(zs.size());
  d.locations.resize(N, 2);
  d.responses.resize(N);
  d.covariates.resize(N, static_cast<Eigen::Index>(ccov.size()));
  for (Eigen::Index i = 0; i < N; ++i) {
    d.locations(i, 0) = xs[i];
    d.locations(i, 1) = ys[i];
    d.responses[i] = zs[i];
    for (std::size_t j = 0; j < ccov.size(); ++j) d.covariates(i, j) = cov[j][i];
  }
  d.validate();
  return d;
}

void write_dataset_csv(const std::string& path, const SpatialDataset& data,
                       const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << schema.x << ',' << schema.y << ',' << schema.z;
  for (const auto& c : schema.covariates) out << ',' << c;
  out << '\n';
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
    out << buf;
  };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    put(data.locations(i, 0), ',');
    put(data.locations(i, 1), ',');
    out << static_cast<long long>(data.responses[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", data.covariates(i, j));
      out << buf;
    }
    out << '\n';
  }
}

std::pair<std::vector<int>, std::vector<int>> split_holdout_indices(
    Eigen::Index n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error(ErrorKind::Argument, "split_holdout: fraction must lie in (0,1)");
  if (static_cast<double>(n) * fraction < 1.0)
    throw Error(ErrorKind::Argument, "split_holdout: validation size would be zero");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0x51ab5eedULL);
  std::shuffle(idx.begin(), idx.end(), rng);

  auto train_n = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * (1.0 - fraction)));
  std::vector<int> train(idx.begin(), idx.begin() + train_n);
  std::vector<int> valid(idx.begin() + train_n, idx.end());
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {std::move(train), std::move(valid)};
}

std::pair<SpatialDataset, SpatialDataset> split_holdout(const SpatialDataset& data,
                                                        double fraction,
                                                        std::uint64_t seed) {
  auto [ti, vi] = split_holdout_indices(data.n(), fraction, seed);
  return {data.subset(ti), data.subset(vi)};
}

}  // namespace mosaic
