#pragma once

#include "hazardlab/hazard.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hazardlab {

/// Observed covariate vector x; dimension may be zero.
class CovariateValue {
 public:
  CovariateValue() = default;
  explicit CovariateValue(vector_t values);
  CovariateValue(std::initializer_list<double> values);

  const vector_t& values() const { return values_; }
  Eigen::Index dim() const { return values_.size(); }

  friend bool operator==(const CovariateValue& a, const CovariateValue& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  vector_t values_;
};

enum class ProvenanceKind { Explicit, Quadrature, Clustering };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Explicit;
  std::string descriptor;

  /// "explicit", "quadrature-of(<descriptor>)" or "clustering(<descriptor>)".
  std::string tag() const;
};

/**
 * Finite atomic law over mechanisms: strictly positive weights summing to one
 * (within 1e-12) on pairwise distinctly labeled mechanisms.
 */
class MechanismDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Validates every invariant; throws InputError on violation.
  MechanismDistribution(std::vector<Mechanism> mechanisms, vector_t weights, Provenance provenance = {});

  const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }
  const vector_t& weights() const { return weights_; }
  const Mechanism& mechanism(Eigen::Index k) const { return mechanisms_[static_cast<std::size_t>(k)]; }
  double weight(Eigen::Index k) const { return weights_(k); }
  Eigen::Index size() const { return weights_.size(); }
  const Provenance& provenance() const { return provenance_; }

  std::optional<Eigen::Index> find(std::string_view label) const;

 private:
  std::vector<Mechanism> mechanisms_;
  vector_t weights_;
  Provenance provenance_;
};

enum class Renormalize { No, Yes };

/**
 * Builds a distribution from (mechanism, weight) pairs. Weights must sum to 1
 * within 1e-9 and are then renormalized exactly; with Renormalize::Yes any
 * positive total is accepted.
 */
MechanismDistribution finite_mixture(std::vector<std::pair<Mechanism, double>> pairs,
                                     Renormalize renormalize = Renormalize::No);

/// Weighted combination (1 - lambda) a + lambda b, merging atoms by label.
MechanismDistribution blend(const MechanismDistribution& a, const MechanismDistribution& b,
                            double lambda);

struct GammaLaw {
  double shape;
  double scale;
};

struct LognormalLaw {
  double mu_log;
  double sigma_log;
};

using PositiveLaw = std::variant<GammaLaw, LognormalLaw>;

void validate_law(const PositiveLaw& law);
double law_mean(const PositiveLaw& law);
double law_pdf(const PositiveLaw& law, double u);
double law_quantile(const PositiveLaw& law, double p);
std::string law_descriptor(const PositiveLaw& law);

enum class QuadratureRule { GaussLegendre, Midpoint };
enum class DomainTransform { Identity, Log };

struct QuadratureSpec {
  QuadratureRule rule = QuadratureRule::GaussLegendre;
  int nodes = 64;
  DomainTransform transform = DomainTransform::Log;
  /// Integration bounds for DomainTransform::Identity.
  double lower = 0.0;
  double upper = 1.0;
  /// Quantile truncation for DomainTransform::Log.
  double q_lo = 1e-6;
  double q_hi = 1.0 - 1e-6;

  void validate() const;
};

struct Discretization {
  MechanismDistribution distribution;
  vector_t support;  ///< law values u at which atoms were placed
  double defect;     ///< |1 - sum of raw quadrature weights|
};

using MechanismLift = std::function<Mechanism(double u)>;

/**
 * Places atoms lift(u_i) at the quadrature nodes of the law's support with
 * weights proportional to w_i * density(u_i) (times the Jacobian under the
 * log transform). Raw weights are renormalized and their defect reported.
 */
Discretization discretize_positive_law(const PositiveLaw& law, const QuadratureSpec& spec,
                                       const MechanismLift& lift);

/// Survivor-conditioned update w_k(t) proportional to w_k S_k(t); atoms with S_k(t) = 0 are dropped.
MechanismDistribution posterior_given_survival(const MechanismDistribution& dist, double t);

}  // namespace hazardlab
