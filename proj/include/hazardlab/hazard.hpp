#pragma once

#include "hazardlab/core.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hazardlab {

class HazardShape;
using ShapePtr = std::shared_ptr<const HazardShape>;

/// h(t) = rate.
struct Exponential {
  double rate;
};

/// h(t) = (k / scale) (t / scale)^(k - 1).
struct Weibull {
  double shape;
  double scale;
};

/// rates[i] applies on [breakpoints[i-1], breakpoints[i]); the last rate runs to infinity.
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> rates;
};

/// h(t) = (k / scale) (t / scale)^(k - 1) / (1 + (t / scale)^k).
struct LogLogistic {
  double shape;
  double scale;
};

/// h(t) = factor * h_base(t).
struct Scaled {
  ShapePtr base;
  double factor;
};

/// h(t) = h_base(t / factor) / factor, so S(t) = S_base(t / factor).
struct TimeScaled {
  ShapePtr base;
  double factor;
};

/**
 * Piecewise-linear hazard on a finite grid. The cumulative hazard at each
 * grid point is cached at construction; evaluation past the last grid point
 * is an error.
 */
struct Tabulated {
  vector_t grid;
  vector_t values;
  vector_t cumulative;
};

/**
 * Survival S(t) = S_base(t) (1 + epsilon g(t)) with g piecewise linear on
 * `grid` and held at its last value beyond it. The hazard is the exact
 * -d/dt log S, using the right-hand slope of g at grid points.
 */
struct Perturbed {
  ShapePtr base;
  vector_t grid;
  vector_t g;
  double epsilon;
};

/**
 * Immutable hazard trajectory. Construct through the named factories, which
 * validate parameters; composite shapes share their base by pointer.
 */
class HazardShape {
 public:
  using Variant = std::variant<Exponential, Weibull, PiecewiseConstant, LogLogistic, Scaled,
                               TimeScaled, Tabulated, Perturbed>;

  static HazardShape exponential(double rate);
  static HazardShape weibull(double shape, double scale);
  static HazardShape piecewise_constant(std::vector<double> breakpoints, std::vector<double> rates);
  static HazardShape log_logistic(double shape, double scale);
  static HazardShape scaled(HazardShape base, double factor);
  static HazardShape time_scaled(HazardShape base, double factor);
  static HazardShape tabulated(vector_t grid, vector_t values);
  /// Requires 1 + epsilon g > 0 on the grid and grid[0] == 0; validity of the
  /// resulting survival curve is checked separately (see perturbation_violation).
  static HazardShape perturbed(HazardShape base, vector_t grid, vector_t g, double epsilon);

  const Variant& variant() const { return variant_; }
  std::string_view kind() const;

 private:
  explicit HazardShape(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// A labeled hazard mechanism.
struct Mechanism {
  std::string label;
  HazardShape shape;
};

double hazard_at(const HazardShape& shape, double t);
double cumulative_hazard(const HazardShape& shape, double t);
double survival_at(const HazardShape& shape, double t);
/// Smallest t with H(t) >= u, to within 1e-10 in H.
double inverse_cumulative_hazard(const HazardShape& shape, double u);
/// +infinity unless the shape is only defined on a bounded horizon.
double cumulative_hazard_supremum(const HazardShape& shape);

inline double hazard_at(const Mechanism& m, double t) { return hazard_at(m.shape, t); }
inline double cumulative_hazard(const Mechanism& m, double t) { return cumulative_hazard(m.shape, t); }
inline double survival_at(const Mechanism& m, double t) { return survival_at(m.shape, t); }
inline double inverse_cumulative_hazard(const Mechanism& m, double u) {
  return inverse_cumulative_hazard(m.shape, u);
}

/// First failing validity condition of a perturbed survival curve on its grid.
struct PerturbationViolation {
  Eigen::Index index;
  double time;
  std::string condition;
};

/**
 * Checks that t -> S_base(t)(1 + epsilon g(t)) equals 1 at t = 0, stays in
 * (0, 1], is nonincreasing on the grid, and has a nonnegative hazard at both
 * ends of every grid interval.
 */
std::optional<PerturbationViolation> perturbation_violation(const HazardShape& base,
                                                            const vector_t& grid, const vector_t& g,
                                                            double epsilon);

}  // namespace hazardlab
