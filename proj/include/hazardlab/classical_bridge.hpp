#pragma once

#include "hazardlab/aggregation.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hazardlab {

//----------------------------------------------------------------------------
// Proportional hazards
//----------------------------------------------------------------------------

struct HazardRatioPair {
  std::size_t first;
  std::size_t second;
  double max_ratio;
  double min_ratio;
  /// max_ratio / min_ratio; 1 means exactly proportional on the grid.
  double spread;
  /// Grid times dropped because either hazard was zero there.
  std::vector<double> excluded_times;
};

struct PHAuditReport {
  std::vector<HazardRatioPair> pairs;
  double worst_spread() const;
};

/// Ratio audit on precomputed hazard curves sharing one grid.
PHAuditReport ph_audit(std::span<const Curve> hazards);

/// Ratio audit on the observable hazards of each covariate point's distribution.
PHAuditReport ph_audit(std::span<const std::pair<CovariateValue, MechanismDistribution>> dists,
                       const TimeGrid& grid);

/**
 * K mechanisms c_k h*(t) and a K x K matrix whose row j holds the mixture
 * weights at covariate point j.
 */
struct PHScenario {
  HazardShape shared_shape;
  vector_t scale_factors;
  std::vector<CovariateValue> covariate_points;
  matrix_t weight_matrix;

  void validate() const;
  /// Mechanism k: Scaled(h*, c_k) labelled "component<k>".
  Mechanism component(Eigen::Index k) const;
  /// Distribution at covariate point j with prior weights from row j.
  MechanismDistribution distribution_at(Eigen::Index j) const;
};

enum class PHWeightMode {
  /// Rows of W are held fixed over time: g(t) = W h(t).
  TimeConstant,
  /// Weights are survivor-updated, so g_j is the observable hazard at x_j.
  SurvivorUpdated,
};

/// Observable hazard curve per covariate point under the chosen weight reading.
std::vector<Curve> ph_observable_hazards(const PHScenario& scenario, const TimeGrid& grid, PHWeightMode mode);

struct PHRecovery {
  vector_t recovered_scales;  ///< normalized so the first entry is 1
  Curve recovered_shape;      ///< normalized to 1 at t_ref
  double condition_number;
  /// Largest deviation over the grid of h_k(t) / h_1(t) from the recovered scale.
  double proportionality_defect;
};

/**
 * Solves W h(t) = g(t) at every grid point, with g built from the scenario in
 * time-constant mode. Throws NumericalError when cond(W) > 1e8.
 */
PHRecovery ph_shape_recovery(const PHScenario& scenario, const TimeGrid& grid, double t_ref);

//----------------------------------------------------------------------------
// Gamma frailty
//----------------------------------------------------------------------------

struct FrailtySpec {
  HazardShape baseline;
  vector_t beta;
  double variance;

  void validate() const;
};

double linear_predictor(const vector_t& beta, const CovariateValue& x);

/// Atoms Scaled(h0, z exp(beta'x)) over the gamma(1/v, v) frailty law.
Discretization frailty_distribution(const FrailtySpec& spec, const CovariateValue& x,
                                    const QuadratureSpec& quad = {});

/// Closed-form (1 + v H0(t) exp(beta'x))^(-1/v).
Curve frailty_laplace_survival(const FrailtySpec& spec, const CovariateValue& x, const TimeGrid& grid);

struct FrailtyMarginal {
  Curve quadrature;
  Curve closed_form;
  double max_discrepancy;
};

/// Both routes, cross-checked; NumericalError when they differ by more than 1e-5.
FrailtyMarginal frailty_marginal_survival(const FrailtySpec& spec, const CovariateValue& x,
                                          const TimeGrid& grid, const QuadratureSpec& quad = {});

//----------------------------------------------------------------------------
// Accelerated failure time
//----------------------------------------------------------------------------

struct AFTSpec {
  HazardShape reference;
  vector_t beta;
  /// Law of the time-scale factor U; nullopt means U = 1.
  std::optional<PositiveLaw> u_law;

  void validate() const;
  /// a(x) = exp(beta'x).
  double acceleration(const CovariateValue& x) const;
};

/// Atoms TimeScaled(h0, u a(x)) over the quadrature nodes of U.
MechanismDistribution aft_build_distribution(const AFTSpec& spec, const CovariateValue& x,
                                             const QuadratureSpec& quad = {});

struct AFTDraws {
  vector_t event_time;      ///< T
  vector_t time_scale;      ///< U
  vector_t reference_time;  ///< T0
};

/// n draws of T = a(x) U T0; deterministic in seed.
AFTDraws aft_sample(const AFTSpec& spec, const CovariateValue& x, std::size_t n, std::uint64_t seed);

/// P(epsilon_aft <= z) = 1 - S0(exp(z)).
double aft_error_cdf(const AFTSpec& spec, double z);

//----------------------------------------------------------------------------
// Covariate-dependent clustering
//----------------------------------------------------------------------------

struct ClusteringSpec {
  std::vector<Mechanism> components;
  /// K x d; row k scores component k as weight_params.row(k) * x.
  matrix_t weight_params;

  void validate() const;
};

/// Softmax mixing weights pi(x).
vector_t clustering_weights(const ClusteringSpec& spec, const CovariateValue& x);

/// Finite mixture sum_k pi_k(x) delta_{Theta_k}; components whose weight underflows are omitted.
MechanismDistribution clustering_distribution(const ClusteringSpec& spec, const CovariateValue& x);

}  // namespace hazardlab
