#include "hazardlab/nonidentifiability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace hazardlab {

Mechanism PerturbationFamily::member(double epsilon_perturb) const {
  if (!(std::abs(epsilon_perturb) <= delta)) {
    throw InputError("perturbation epsilon " + format_double(epsilon_perturb) + " outside [-delta, delta]");
  }
  return Mechanism{theta0.label + "[eps=" + format_double(epsilon_perturb) + "]",
                   HazardShape::perturbed(theta0.shape, grid.points(), g, epsilon_perturb)};
}

PerturbationFamily make_perturbation(Mechanism theta0, vector_t g_values, double delta,
                                     const TimeGrid& grid) {
  if (g_values.size() != grid.size()) throw InputError("g must be tabulated on the working grid");
  if (!g_values.allFinite()) throw InputError("g must be bounded (finite on the grid)");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("delta must be a finite positive number");
  if (g_values(0) != 0.0) {
    throw InputError("g(0) must be 0 so that every perturbed survival curve starts at 1");
  }
  if ((g_values.array() == 0.0).all()) throw InputError("g must not be identically zero");
  for (double eps : {-delta, delta}) {
    if (auto bad = perturbation_violation(theta0.shape, grid.points(), g_values, eps)) {
      throw InputError("perturbation invalid at epsilon = " + format_double(eps) + ": " + bad->condition +
                       " fails at grid index " + std::to_string(bad->index) + " (t = " +
                       format_double(bad->time) + ")");
    }
  }
  return PerturbationFamily{std::move(theta0), grid, std::move(g_values), delta};
}

double partner_epsilon(double alpha, double epsilon_perturb) {
  return -alpha / (1.0 - alpha) * epsilon_perturb;
}

double CounterexampleSpec::admissible_half_width() const {
  return std::min(family.delta, (1.0 - alpha) / alpha * family.delta);
}

void CounterexampleSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const auto k0 = mu0.find(family.theta0.label);
  if (!k0) throw InputError("mu0 has no atom labelled '" + family.theta0.label + "'");
  if (!(eta > 0.0)) throw InputError("eta must be positive");
  if (eta > mu0.weight(*k0)) {
    throw InputError("eta exceeds the weight of the theta0 atom; the replaced measure would be negative "
                     "(need 0 < eta <= mu0({theta0}))");
  }
  for (Eigen::Index i = 0; i < family.grid.size(); ++i) {
    const double t = family.grid[i];
    if (std::abs(survival_at(mu0.mechanism(*k0), t) - survival_at(family.theta0, t)) > 1e-14) {
      throw InputError("mu0 atom '" + family.theta0.label + "' differs from the family's reference mechanism");
    }
  }
  if (epsilons.empty()) throw InputError("at least one epsilon is required");
  const double bound = admissible_half_width();
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double e = epsilons[i];
    if (e == 0.0) throw InputError("epsilons must be nonzero");
    if (!(std::abs(e) < bound)) {
      throw InputError("epsilon " + format_double(e) + " outside (-delta', delta') with delta' = " + format_double(bound));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (epsilons[j] == e) throw InputError("epsilons must be pairwise distinct");
    }
  }
}

MechanismDistribution local_mass_replacement(const MechanismDistribution& mu0,
                                             const PerturbationFamily& family, double alpha,
                                             double eta, double epsilon_perturb,
                                             double epsilon_partner) {
  const auto k0 = mu0.find(family.theta0.label);
  if (!k0) throw InputError("mu0 has no atom labelled '" + family.theta0.label + "'");
  if (!(eta > 0.0) || eta > mu0.weight(*k0)) throw InputError("need 0 < eta <= mu0({theta0})");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");

  std::vector<Mechanism> mechanisms;
  std::vector<double> weights;
  for (Eigen::Index k = 0; k < mu0.size(); ++k) {
    const double w = (k == *k0) ? mu0.weight(k) - eta : mu0.weight(k);
    if (w > 0.0) {
      mechanisms.push_back(mu0.mechanism(k));
      weights.push_back(w);
    }
  }
  auto add = [&](Mechanism m, double w) {
    if (auto it = std::find_if(mechanisms.begin(), mechanisms.end(), [&](const Mechanism& x) { return x.label == m.label; });
        it != mechanisms.end()) {
      weights[static_cast<std::size_t>(it - mechanisms.begin())] += w;
    } else {
      mechanisms.push_back(std::move(m));
      weights.push_back(w);
    }
  };
  add(family.member(epsilon_perturb), eta * alpha);
  add(family.member(epsilon_partner), eta * (1.0 - alpha));
  vector_t w = Eigen::Map<const vector_t>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return MechanismDistribution(std::move(mechanisms), std::move(w), mu0.provenance());
}

std::vector<MechanismDistribution> construct_counterexamples(const CounterexampleSpec& spec) {
  spec.validate();
  std::vector<MechanismDistribution> out;
  out.reserve(spec.epsilons.size());
  for (double eps : spec.epsilons) {
    out.push_back(local_mass_replacement(spec.mu0, spec.family, spec.alpha, spec.eta, eps,
                                         partner_epsilon(spec.alpha, eps)));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (total_variation(out[i], out[j]) == 0.0) {
        throw InputError("epsilons " + format_double(spec.epsilons[j]) + " and " + format_double(spec.epsilons[i]) +
                         " produce the same distribution");
      }
    }
  }
  return out;
}

EquivalenceReport verify_equivalence(std::span<const MechanismDistribution> dists, const TimeGrid& grid) {
  if (dists.size() < 2) throw InputError("equivalence check needs at least two distributions");
  matrix_t curves(grid.size(), static_cast<Eigen::Index>(dists.size()));
  for (std::size_t j = 0; j < dists.size(); ++j) {
    curves.col(static_cast<Eigen::Index>(j)) = aggregate_survival(dists[j], grid).values;
  }
  const vector_t spread = curves.rowwise().maxCoeff() - curves.rowwise().minCoeff();
  Eigen::Index at = 0;
  const double worst = spread.maxCoeff(&at);
  return EquivalenceReport{worst, grid[at]};
}

double total_variation(const MechanismDistribution& a, const MechanismDistribution& b) {
  std::unordered_map<std::string, double> diff;
  for (Eigen::Index k = 0; k < a.size(); ++k) diff[a.mechanism(k).label] += a.weight(k);
  for (Eigen::Index k = 0; k < b.size(); ++k) diff[b.mechanism(k).label] -= b.weight(k);
  double total = 0.0;
  for (const auto& [label, d] : diff) total += std::abs(d);
  return 0.5 * total;
}

DistinctnessReport path_distinctness(const MechanismDistribution& a, const MechanismDistribution& b,
                                     const TimeGrid& grid) {
  const matrix_t sa = survival_matrix(a, grid);
  const matrix_t sb = survival_matrix(b, grid);

  std::vector<Eigen::Index> only_a, only_b, all_a, all_b;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    all_a.push_back(k);
    if (!b.find(a.mechanism(k).label)) only_a.push_back(k);
  }
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    all_b.push_back(k);
    if (!a.find(b.mechanism(k).label)) only_b.push_back(k);
  }

  // Largest distance from a path in `from` to its nearest path in `to`.
  auto directed = [](const matrix_t& s_from, const std::vector<Eigen::Index>& from, const matrix_t& s_to,
                     const std::vector<Eigen::Index>& to) {
    double worst = 0.0;
    for (Eigen::Index i : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (Eigen::Index j : to) {
        nearest = std::min(nearest, (s_from.col(i) - s_to.col(j)).cwiseAbs().maxCoeff());
      }
      worst = std::max(worst, nearest);
    }
    return worst;
  };

  double gap = 0.0;
  if (!only_a.empty()) gap = std::max(gap, directed(sa, only_a, sb, only_b.empty() ? all_b : only_b));
  if (!only_b.empty()) gap = std::max(gap, directed(sb, only_b, sa, only_a.empty() ? all_a : only_a));
  return DistinctnessReport{gap, total_variation(a, b)};
}

CounterexampleSpec default_demonstration(const TimeGrid& grid, double alpha) {
  Mechanism theta0{"theta0", HazardShape::exponential(1.0)};
  vector_t g = (0.5 * grid.points().array() * (-grid.points().array()).exp()).matrix();
  auto family = make_perturbation(theta0, std::move(g), 0.5, grid);
  auto mu0 = finite_mixture({{theta0, 0.6}, {Mechanism{"exp2", HazardShape::exponential(2.0)}, 0.4}});
  return CounterexampleSpec{std::move(mu0), std::move(family), alpha, 0.2, {0.05, 0.1, 0.2, 0.3, 0.4}};
}

}  // namespace hazardlab
