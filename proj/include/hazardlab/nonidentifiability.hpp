#pragma once

#include "hazardlab/aggregation.hpp"

#include <span>
#include <vector>

namespace hazardlab {

/**
 * Reference mechanism theta0 together with a bounded direction g (tabulated on
 * the working grid, g(0) = 0) and half-width delta such that
 * S_theta0(t)(1 + epsilon g(t)) is a valid survival curve for |epsilon| <= delta.
 *
 * Validity is checked on the grid only, at epsilon = -delta and +delta; both
 * the curve and its grid differences are affine in epsilon, so the endpoints
 * cover the whole interval. Past the grid g is held at its last value.
 */
struct PerturbationFamily {
  Mechanism theta0;
  TimeGrid grid;
  vector_t g;
  double delta;

  /// theta(epsilon), labelled "<theta0>[eps=<epsilon>]".
  Mechanism member(double epsilon_perturb) const;
  /// Largest time at which validity was checked.
  double verified_horizon() const { return grid.back(); }
};

PerturbationFamily make_perturbation(Mechanism theta0, vector_t g_values, double delta,
                                     const TimeGrid& grid);

/// Partner perturbation -alpha / (1 - alpha) * epsilon that cancels epsilon under the alpha mix.
double partner_epsilon(double alpha, double epsilon_perturb);

struct CounterexampleSpec {
  MechanismDistribution mu0;
  PerturbationFamily family;
  double alpha;
  double eta;
  std::vector<double> epsilons;

  /// min(delta, (1 - alpha) / alpha * delta).
  double admissible_half_width() const;
  void validate() const;
};

/**
 * mu0 - eta delta_theta0 + eta (alpha delta_theta(eps) + (1 - alpha) delta_theta(eps')).
 * Exposed with an explicit partner so callers can build corrupted controls.
 */
MechanismDistribution local_mass_replacement(const MechanismDistribution& mu0,
                                             const PerturbationFamily& family, double alpha,
                                             double eta, double epsilon_perturb,
                                             double epsilon_partner);

/// One distribution per epsilon in spec.epsilons, using the cancelling partner.
std::vector<MechanismDistribution> construct_counterexamples(const CounterexampleSpec& spec);

struct EquivalenceReport {
  double max_abs_deviation;
  double argmax_t;
};

/// Largest pairwise gap between aggregate survival curves over the grid.
EquivalenceReport verify_equivalence(std::span<const MechanismDistribution> dists, const TimeGrid& grid);

struct DistinctnessReport {
  double sup_path_gap;
  double tv_distance;
};

/// Half the L1 distance between atom weights, matching atoms by label.
double total_variation(const MechanismDistribution& a, const MechanismDistribution& b);

/**
 * sup_path_gap is the sup-norm Hausdorff distance, on the grid, between the
 * survival paths of atoms present in one measure but not the other. When only
 * one side has such atoms they are compared with the full support of the other.
 */
DistinctnessReport path_distinctness(const MechanismDistribution& a, const MechanismDistribution& b,
                                     const TimeGrid& grid);

/**
 * theta0 = Exp(1), g(t) = 0.5 t exp(-t), delta = 0.5, eta = 0.2,
 * mu0 = {theta0: 0.6, Exp(2): 0.4}, epsilons {0.05, 0.1, 0.2, 0.3, 0.4}.
 */
CounterexampleSpec default_demonstration(const TimeGrid& grid, double alpha = 0.25);

}  // namespace hazardlab
