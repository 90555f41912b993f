#ifndef MOSAIC_TYPES_HPP
#define MOSAIC_TYPES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mosaic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = Eigen::Vector2d;

enum class ErrorKind {
  Argument,      // bad caller input
  Schema,        // file schema does not match the requested mapping
  Validation,    // data fails a model-level constraint
  Geometry,      // degenerate point configuration
  Conditioning,  // numerically rank-deficient design
  Infeasible,    // requested partitioning cannot exist
  Config,        // invalid configuration value
  Overflow,      // value outside the representable modeling range
  Io,            // file system failure
  Stage          // pipeline stage failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind(kind) {}
  ErrorKind kind;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Config: return "config";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Io: return "io";
    case ErrorKind::Stage: return "stage";
  }
  return "unknown";
}

// Exponential-family response with its canonical link (log for Poisson,
// logit for Bernoulli).
enum class Family { Poisson, Bernoulli };

inline const char* family_name(Family f) {
  return f == Family::Poisson ? "poisson" : "bernoulli";
}

Family parse_family(const std::string& name);

struct SpatialDataset {
  Matrix locations;   // N x 2
  Vector responses;   // integer-valued counts or {0,1}
  Matrix covariates;  // N x p
  Family family = Family::Poisson;

  Eigen::Index n() const { return responses.size(); }
  Eigen::Index p() const { return covariates.cols(); }

  Point location(Eigen::Index i) const { return locations.row(i).transpose(); }

  // Throws Validation/Argument on any violated constraint.
  void validate() const;

  SpatialDataset subset(const std::vector<int>& idx) const;
};

struct GlmFit {
  Vector beta;       // p
  Vector residuals;  // N deviance residuals
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
};

struct LinearPredictor {
  Vector eta;  // one entry per location
};

}  // namespace mosaic

#endif
