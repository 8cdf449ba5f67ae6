#include "hazardlab/classical_bridge.hpp"
#include "hazardlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hazardlab {

double PHAuditReport::worst_spread() const {
  double worst = 1.0;
  for (const auto& p : pairs) worst = std::max(worst, p.spread);
  return worst;
}

PHAuditReport ph_audit(std::span<const Curve> hazards) {
  if (hazards.size() < 2) throw InputError("hazard-ratio audit needs at least two covariate points");
  const TimeGrid& grid = hazards.front().grid;
  for (const auto& c : hazards) {
    if (c.grid.size() != grid.size() || c.grid.points() != grid.points()) {
      throw InputError("hazard-ratio audit needs curves on a common grid");
    }
  }
  PHAuditReport report;
  for (std::size_t i = 0; i < hazards.size(); ++i) {
    for (std::size_t j = i + 1; j < hazards.size(); ++j) {
      HazardRatioPair pair{i, j, -std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(), 1.0, {}};
      for (Eigen::Index t = 0; t < grid.size(); ++t) {
        const double a = hazards[i].values(t);
        const double b = hazards[j].values(t);
        if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
          pair.excluded_times.push_back(grid[t]);
          continue;
        }
        pair.max_ratio = std::max(pair.max_ratio, a / b);
        pair.min_ratio = std::min(pair.min_ratio, a / b);
      }
      if (pair.excluded_times.size() == static_cast<std::size_t>(grid.size())) {
        throw NumericalError("hazard-ratio audit: hazards vanish at every grid point");
      }
      pair.spread = pair.max_ratio / pair.min_ratio;
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

PHAuditReport ph_audit(std::span<const std::pair<CovariateValue, MechanismDistribution>> dists,
                       const TimeGrid& grid) {
  std::vector<Curve> hazards;
  hazards.reserve(dists.size());
  for (const auto& [x, dist] : dists) hazards.push_back(observable_hazard(dist, grid));
  return ph_audit(hazards);
}

void PHScenario::validate() const {
  const Eigen::Index k = scale_factors.size();
  if (k < 1) throw InputError("PH scenario needs at least one component");
  if (static_cast<Eigen::Index>(covariate_points.size()) != k) {
    throw InputError("PH scenario needs one covariate point per component");
  }
  if (weight_matrix.rows() != k || weight_matrix.cols() != k) {
    throw InputError("PH weight matrix must be K x K");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(scale_factors(i) > 0.0) || !std::isfinite(scale_factors(i))) {
      throw InputError("PH scale factors must be positive");
    }
    if (!(weight_matrix.row(i).array() > 0.0).all()) {
      throw InputError("PH weight matrix row " + std::to_string(i) + " must be strictly positive");
    }
    if (std::abs(weight_matrix.row(i).sum() - 1.0) > 1e-9) {
      throw InputError("PH weight matrix row " + std::to_string(i) + " must sum to 1");
    }
  }
}

Mechanism PHScenario::component(Eigen::Index k) const {
  return Mechanism{"component" + std::to_string(k), HazardShape::scaled(shared_shape, scale_factors(k))};
}

MechanismDistribution PHScenario::distribution_at(Eigen::Index j) const {
  std::vector<std::pair<Mechanism, double>> pairs;
  for (Eigen::Index k = 0; k < scale_factors.size(); ++k) pairs.emplace_back(component(k), weight_matrix(j, k));
  return finite_mixture(std::move(pairs), Renormalize::Yes);
}

std::vector<Curve> ph_observable_hazards(const PHScenario& scenario, const TimeGrid& grid, PHWeightMode mode) {
  scenario.validate();
  std::vector<Curve> out;
  const Eigen::Index k = scenario.scale_factors.size();
  if (mode == PHWeightMode::SurvivorUpdated) {
    for (Eigen::Index j = 0; j < k; ++j) out.push_back(observable_hazard(scenario.distribution_at(j), grid));
    return out;
  }
  vector_t shape(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) shape(i) = hazard_at(scenario.shared_shape, grid[i]);
  const vector_t mixed_scale = scenario.weight_matrix * scenario.scale_factors;
  for (Eigen::Index j = 0; j < k; ++j) out.emplace_back(grid, mixed_scale(j) * shape, CurveKind::Hazard);
  return out;
}

PHRecovery ph_shape_recovery(const PHScenario& scenario, const TimeGrid& grid, double t_ref) {
  scenario.validate();
  const auto ref = grid.index_of(t_ref);
  if (!ref) throw InputError("t_ref must be a grid point");
  if (!(hazard_at(scenario.shared_shape, grid[*ref]) > 0.0)) {
    throw InputError("shared shape must be positive at t_ref");
  }

  const Eigen::JacobiSVD<matrix_t> svd(scenario.weight_matrix);
  const vector_t& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e8)) {
    throw NumericalError("ill-conditioned weight matrix (condition number " + format_double(cond) +
                         "); weight vectors must be linearly independent");
  }

  const Eigen::Index k = scenario.scale_factors.size();
  matrix_t component_hazards(k, grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    component_hazards.col(i) = scenario.scale_factors * hazard_at(scenario.shared_shape, grid[i]);
  }
  const matrix_t observed = scenario.weight_matrix * component_hazards;
  const matrix_t recovered = scenario.weight_matrix.fullPivLu().solve(observed);

  const double anchor = recovered(0, *ref);
  vector_t scales = recovered.col(*ref) / anchor;
  vector_t shape = recovered.row(0).transpose() / anchor;

  double defect = 0.0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(std::abs(recovered(0, i)) > 0.0)) continue;
    for (Eigen::Index j = 0; j < k; ++j) {
      defect = std::max(defect, std::abs(recovered(j, i) / recovered(0, i) - scales(j)));
    }
  }
  return PHRecovery{std::move(scales), Curve(grid, std::move(shape), CurveKind::Hazard), cond, defect};
}

void FrailtySpec::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw InputError("frailty variance must be positive");
  if (!beta.allFinite()) throw InputError("frailty beta must be finite");
}

double linear_predictor(const vector_t& beta, const CovariateValue& x) {
  if (beta.size() != x.dim()) {
    throw InputError("beta has dimension " + std::to_string(beta.size()) + " but covariate has " +
                     std::to_string(x.dim()));
  }
  return beta.size() == 0 ? 0.0 : beta.dot(x.values());
}

Discretization frailty_distribution(const FrailtySpec& spec, const CovariateValue& x, const QuadratureSpec& quad) {
  spec.validate();
  const double risk = std::exp(linear_predictor(spec.beta, x));
  const PositiveLaw law = GammaLaw{1.0 / spec.variance, spec.variance};
  const HazardShape& baseline = spec.baseline;
  return discretize_positive_law(law, quad, [&](double z) {
    return Mechanism{"frailty[z=" + format_double(z) + "]", HazardShape::scaled(baseline, z * risk)};
  });
}

Curve frailty_laplace_survival(const FrailtySpec& spec, const CovariateValue& x, const TimeGrid& grid) {
  spec.validate();
  const double risk = std::exp(linear_predictor(spec.beta, x));
  vector_t values(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double h0 = cumulative_hazard(spec.baseline, grid[i]);
    values(i) = std::exp(-std::log1p(spec.variance * h0 * risk) / spec.variance);
  }
  return Curve(grid, std::move(values), CurveKind::Survival);
}

FrailtyMarginal frailty_marginal_survival(const FrailtySpec& spec, const CovariateValue& x, const TimeGrid& grid,
                                          const QuadratureSpec& quad) {
  Curve quadrature = aggregate_survival(frailty_distribution(spec, x, quad).distribution, grid);
  Curve closed = frailty_laplace_survival(spec, x, grid);
  const double discrepancy = (quadrature.values - closed.values).cwiseAbs().maxCoeff();
  if (discrepancy > 1e-5) {
    throw NumericalError("frailty quadrature and Laplace transform disagree by " + format_double(discrepancy) +
                         ": internal consistency failure");
  }
  return FrailtyMarginal{std::move(quadrature), std::move(closed), discrepancy};
}

void AFTSpec::validate() const {
  if (!beta.allFinite()) throw InputError("AFT beta must be finite");
  if (u_law) validate_law(*u_law);
}

double AFTSpec::acceleration(const CovariateValue& x) const { return std::exp(linear_predictor(beta, x)); }

MechanismDistribution aft_build_distribution(const AFTSpec& spec, const CovariateValue& x, const QuadratureSpec& quad) {
  spec.validate();
  const double a = spec.acceleration(x);
  if (!(a > 0.0) || !std::isfinite(a)) throw InputError("acceleration factor exp(beta'x) overflowed");
  if (!spec.u_law) {
    if (a == 1.0) return finite_mixture({{Mechanism{"reference", spec.reference}, 1.0}});
    return finite_mixture({{Mechanism{"aft[a=" + format_double(a) + "]", HazardShape::time_scaled(spec.reference, a)}, 1.0}});
  }
  const HazardShape& reference = spec.reference;
  return discretize_positive_law(*spec.u_law, quad,
                                 [&](double u) {
                                   return Mechanism{"aft[u=" + format_double(u) + "]",
                                                    HazardShape::time_scaled(reference, u * a)};
                                 })
      .distribution;
}

AFTDraws aft_sample(const AFTSpec& spec, const CovariateValue& x, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InputError("AFT sample size must be at least 1");
  const double a = spec.acceleration(x);
  const Mechanism reference{"reference", spec.reference};
  AFTDraws draws{vector_t(static_cast<Eigen::Index>(n)), vector_t(static_cast<Eigen::Index>(n)),
                 vector_t(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = substream(seed, i);
    const double u = spec.u_law ? sample_law(*spec.u_law, rng) : 1.0;
    // x enters only through the mechanism; the event draw sees the mechanism and randomness.
    const Mechanism individual{"aft", HazardShape::time_scaled(spec.reference, a * u)};
    SplitMix64 replay = rng;
    const auto e = static_cast<Eigen::Index>(i);
    draws.event_time(e) = sample_event_time(individual, rng);
    draws.reference_time(e) = sample_event_time(reference, replay);
    draws.time_scale(e) = u;
  }
  return draws;
}

double aft_error_cdf(const AFTSpec& spec, double z) {
  if (std::isnan(z)) throw InputError("AFT error quantile must not be NaN");
  return -std::expm1(-cumulative_hazard(spec.reference, std::exp(z)));
}

void ClusteringSpec::validate() const {
  if (components.size() < 2) throw InputError("clustering needs at least two components");
  if (weight_params.rows() != static_cast<Eigen::Index>(components.size())) {
    throw InputError("clustering weight_params needs one row per component");
  }
  if (!weight_params.allFinite()) throw InputError("clustering weight_params must be finite");
}

vector_t clustering_weights(const ClusteringSpec& spec, const CovariateValue& x) {
  spec.validate();
  if (spec.weight_params.cols() != x.dim()) {
    throw InputError("clustering weight_params has " + std::to_string(spec.weight_params.cols()) +
                     " columns but covariate has dimension " + std::to_string(x.dim()));
  }
  vector_t scores = x.dim() == 0 ? vector_t(vector_t::Zero(spec.weight_params.rows()))
                                 : vector_t(spec.weight_params * x.values());
  // std::exp per entry: Eigen's packet exp clamps very negative arguments instead of underflowing to 0
  const double top = scores.maxCoeff();
  const vector_t e = scores.unaryExpr([top](double s) { return std::exp(s - top); });
  return e / e.sum();
}

MechanismDistribution clustering_distribution(const ClusteringSpec& spec, const CovariateValue& x) {
  const vector_t pi = clustering_weights(spec, x);
  std::vector<Mechanism> mechanisms;
  std::vector<double> weights;
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    if (pi(k) > 0.0) {
      mechanisms.push_back(spec.components[static_cast<std::size_t>(k)]);
      weights.push_back(pi(k));
    }
  }
  vector_t w = Eigen::Map<const vector_t>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  w /= w.sum();
  return MechanismDistribution(std::move(mechanisms), std::move(w),
                               Provenance{ProvenanceKind::Clustering, "x=" + covariate_json(x)});
}

}  // namespace hazardlab
