#include "hazardlab/mechanism_dist.hpp"
#include "hazardlab/quadrature.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace hazardlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

CovariateValue::CovariateValue(vector_t values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InputError("covariate values must be finite");
}

CovariateValue::CovariateValue(std::initializer_list<double> values)
    : CovariateValue(vector_t(Eigen::Map<const vector_t>(values.begin(), static_cast<Eigen::Index>(values.size())))) {}

std::string Provenance::tag() const {
  switch (kind) {
    case ProvenanceKind::Explicit:
      return "explicit";
    case ProvenanceKind::Quadrature:
      return "quadrature-of(" + descriptor + ")";
    case ProvenanceKind::Clustering:
      return "clustering(" + descriptor + ")";
  }
  return "explicit";
}

MechanismDistribution::MechanismDistribution(std::vector<Mechanism> mechanisms, vector_t weights,
                                             Provenance provenance)
    : mechanisms_(std::move(mechanisms)), weights_(std::move(weights)), provenance_(std::move(provenance)) {
  if (mechanisms_.empty()) throw InputError("distribution needs at least one atom");
  if (static_cast<Eigen::Index>(mechanisms_.size()) != weights_.size()) {
    throw InputError("distribution needs one weight per mechanism");
  }
  std::unordered_set<std::string> labels;
  for (std::size_t k = 0; k < mechanisms_.size(); ++k) {
    if (!(weights_(static_cast<Eigen::Index>(k)) > 0.0)) {
      throw InputError("atom '" + mechanisms_[k].label + "' has nonpositive weight");
    }
    if (!labels.insert(mechanisms_[k].label).second) {
      throw InputError("duplicate label '" + mechanisms_[k].label + "'");
    }
  }
  if (std::abs(weights_.sum() - 1.0) > kSumTolerance) {
    throw InputError("distribution weights sum to " + format_double(weights_.sum()) + ", not 1");
  }
}

std::optional<Eigen::Index> MechanismDistribution::find(std::string_view label) const {
  for (std::size_t k = 0; k < mechanisms_.size(); ++k) {
    if (mechanisms_[k].label == label) return static_cast<Eigen::Index>(k);
  }
  return std::nullopt;
}

MechanismDistribution finite_mixture(std::vector<std::pair<Mechanism, double>> pairs,
                                     Renormalize renormalize) {
  if (pairs.empty()) throw InputError("mixture needs at least one atom");
  std::vector<Mechanism> mechanisms;
  vector_t weights(static_cast<Eigen::Index>(pairs.size()));
  std::unordered_set<std::string> labels;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto& [mechanism, weight] = pairs[k];
    if (!(weight > 0.0) || !std::isfinite(weight)) {
      throw InputError("atom '" + mechanism.label + "' has nonpositive weight " + format_double(weight));
    }
    if (!labels.insert(mechanism.label).second) {
      throw InputError("duplicate label '" + mechanism.label + "'");
    }
    weights(static_cast<Eigen::Index>(k)) = weight;
    mechanisms.push_back(std::move(mechanism));
  }
  const double total = weights.sum();
  if (renormalize == Renormalize::No && std::abs(total - 1.0) > 1e-9) {
    throw InputError("mixture weights sum to " + format_double(total) + "; expected 1 within 1e-9");
  }
  weights /= total;
  return MechanismDistribution(std::move(mechanisms), std::move(weights));
}

MechanismDistribution blend(const MechanismDistribution& a, const MechanismDistribution& b,
                            double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("blend weight must lie in [0, 1]");
  std::vector<std::pair<Mechanism, double>> pairs;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if ((1.0 - lambda) * a.weight(k) > 0.0) pairs.emplace_back(a.mechanism(k), (1.0 - lambda) * a.weight(k));
  }
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    const double w = lambda * b.weight(k);
    if (!(w > 0.0)) continue;
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [&](const auto& p) { return p.first.label == b.mechanism(k).label; });
    if (it != pairs.end()) {
      it->second += w;
    } else {
      pairs.emplace_back(b.mechanism(k), w);
    }
  }
  return finite_mixture(std::move(pairs), Renormalize::Yes);
}

void validate_law(const PositiveLaw& law) {
  std::visit(overloaded{
                 [](const GammaLaw& g) {
                   if (!(g.shape > 0.0) || !(g.scale > 0.0) || !std::isfinite(g.shape) || !std::isfinite(g.scale)) {
                     throw InputError("gamma law needs positive finite shape and scale");
                   }
                 },
                 [](const LognormalLaw& l) {
                   if (!std::isfinite(l.mu_log) || !(l.sigma_log > 0.0) || !std::isfinite(l.sigma_log)) {
                     throw InputError("lognormal law needs finite mu_log and positive sigma_log");
                   }
                 },
             },
             law);
}

double law_mean(const PositiveLaw& law) {
  return std::visit(overloaded{
                        [](const GammaLaw& g) { return g.shape * g.scale; },
                        [](const LognormalLaw& l) { return std::exp(l.mu_log + 0.5 * l.sigma_log * l.sigma_log); },
                    },
                    law);
}

double law_pdf(const PositiveLaw& law, double u) {
  if (!(u > 0.0)) return 0.0;
  return std::visit(overloaded{
                        [u](const GammaLaw& g) {
                          return boost::math::pdf(boost::math::gamma_distribution<double>(g.shape, g.scale), u);
                        },
                        [u](const LognormalLaw& l) {
                          return boost::math::pdf(boost::math::lognormal_distribution<double>(l.mu_log, l.sigma_log), u);
                        },
                    },
                    law);
}

double law_quantile(const PositiveLaw& law, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  return std::visit(overloaded{
                        [p](const GammaLaw& g) {
                          return boost::math::quantile(boost::math::gamma_distribution<double>(g.shape, g.scale), p);
                        },
                        [p](const LognormalLaw& l) {
                          return boost::math::quantile(boost::math::lognormal_distribution<double>(l.mu_log, l.sigma_log), p);
                        },
                    },
                    law);
}

std::string law_descriptor(const PositiveLaw& law) {
  return std::visit(overloaded{
                        [](const GammaLaw& g) {
                          return "gamma(shape=" + format_double(g.shape) + ", scale=" + format_double(g.scale) + ")";
                        },
                        [](const LognormalLaw& l) {
                          return "lognormal(mu_log=" + format_double(l.mu_log) +
                                 ", sigma_log=" + format_double(l.sigma_log) + ")";
                        },
                    },
                    law);
}

void QuadratureSpec::validate() const {
  if (nodes < 8) throw InputError("quadrature needs at least 8 nodes");
  if (transform == DomainTransform::Log) {
    if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) {
      throw InputError("quantile range must satisfy 0 < q_lo < q_hi < 1");
    }
  } else if (!(lower >= 0.0 && upper > lower && std::isfinite(upper))) {
    throw InputError("identity quadrature needs 0 <= lower < upper < infinity");
  }
}

Discretization discretize_positive_law(const PositiveLaw& law, const QuadratureSpec& spec,
                                       const MechanismLift& lift) {
  validate_law(law);
  spec.validate();

  double a = spec.lower;
  double b = spec.upper;
  if (spec.transform == DomainTransform::Log) {
    a = std::log(law_quantile(law, spec.q_lo));
    b = std::log(law_quantile(law, spec.q_hi));
  }

  vector_t nodes(spec.nodes);
  vector_t weights(spec.nodes);
  if (spec.rule == QuadratureRule::GaussLegendre) {
    const auto rule = gauss_legendre<double>(spec.nodes);
    nodes = 0.5 * (b - a) * rule.nodes.array() + 0.5 * (a + b);
    weights = 0.5 * (b - a) * rule.weights;
  } else {
    const double width = (b - a) / spec.nodes;
    for (int i = 0; i < spec.nodes; ++i) nodes(i) = a + (i + 0.5) * width;
    weights.setConstant(width);
  }

  std::vector<std::pair<Mechanism, double>> pairs;
  std::vector<double> support;
  double raw_total = 0.0;
  for (int i = 0; i < spec.nodes; ++i) {
    const double u = spec.transform == DomainTransform::Log ? std::exp(nodes(i)) : nodes(i);
    const double jacobian = spec.transform == DomainTransform::Log ? u : 1.0;
    const double w = weights(i) * law_pdf(law, u) * jacobian;
    raw_total += w;
    if (!(w > 0.0)) continue;  // density underflow
    pairs.emplace_back(lift(u), w);
    support.push_back(u);
  }
  if (pairs.empty()) throw NumericalError("quadrature produced no atoms with positive weight");

  Discretization out{finite_mixture(std::move(pairs), Renormalize::Yes),
                     Eigen::Map<const vector_t>(support.data(), static_cast<Eigen::Index>(support.size())),
                     std::abs(1.0 - raw_total)};
  // finite_mixture tags its result explicit; re-wrap with the quadrature provenance.
  out.distribution = MechanismDistribution(out.distribution.mechanisms(), out.distribution.weights(),
                                           Provenance{ProvenanceKind::Quadrature, law_descriptor(law)});
  return out;
}

MechanismDistribution posterior_given_survival(const MechanismDistribution& dist, double t) {
  if (!(t >= 0.0)) throw InputError("time must be nonnegative");
  std::vector<Mechanism> kept;
  std::vector<double> updated;
  for (Eigen::Index k = 0; k < dist.size(); ++k) {
    const double w = dist.weight(k) * survival_at(dist.mechanism(k), t);
    if (w > 0.0) {
      kept.push_back(dist.mechanism(k));
      updated.push_back(w);
    }
  }
  if (kept.empty()) throw NumericalError("risk set empty at t = " + format_double(t));
  vector_t weights = Eigen::Map<const vector_t>(updated.data(), static_cast<Eigen::Index>(updated.size()));
  weights /= weights.sum();
  return MechanismDistribution(std::move(kept), std::move(weights), dist.provenance());
}

}  // namespace hazardlab
