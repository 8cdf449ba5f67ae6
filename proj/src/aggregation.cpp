#include "hazardlab/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace hazardlab {

namespace {

constexpr double kCurveSlack = 1e-12;
// Finite-difference hazards may undershoot a true zero by rounding.
constexpr double kHazardSlack = 1e-9;

void require_positive_survival(const vector_t& survival, const TimeGrid& grid) {
  for (Eigen::Index i = 0; i < survival.size(); ++i) {
    if (!(survival(i) > 0.0)) throw NumericalError("risk set exhausted at t = " + format_double(grid[i]));
  }
}

// Derivative at x0 of the quadratic through (x0,f0), (x1,f1), (x2,f2).
double three_point_derivative(double x0, double x1, double x2, double f0, double f1, double f2) {
  const double d01 = x0 - x1;
  const double d02 = x0 - x2;
  const double d12 = x1 - x2;
  return f0 * (2.0 * x0 - x1 - x2) / (d01 * d02) + f1 * (x0 - x2) / (-d01 * d12) +
         f2 * (x0 - x1) / (d02 * d12);
}

}  // namespace

TimeGrid::TimeGrid(vector_t points) : points_(std::move(points)) {
  if (points_.size() < 3) throw InputError("time grid needs at least three points");
  if (points_(0) != 0.0) throw InputError("time grid must start at 0");
  for (Eigen::Index i = 1; i < points_.size(); ++i) {
    if (!std::isfinite(points_(i)) || !(points_(i) > points_(i - 1))) {
      throw InputError("time grid must be strictly increasing and finite");
    }
  }
}

TimeGrid TimeGrid::uniform(double t_max, double step) {
  if (!(t_max > 0.0) || !(step > 0.0) || !std::isfinite(t_max) || !std::isfinite(step)) {
    throw InputError("grid needs t_max > 0 and step > 0");
  }
  const auto intervals = static_cast<Eigen::Index>(std::llround(t_max / step));
  if (intervals < 2) throw InputError("grid step too large for t_max");
  vector_t points(intervals + 1);
  for (Eigen::Index i = 0; i <= intervals; ++i) points(i) = static_cast<double>(i) * step;
  return TimeGrid(std::move(points));
}

std::optional<Eigen::Index> TimeGrid::index_of(double t) const {
  const auto* begin = points_.data();
  const auto* end = begin + points_.size();
  const auto* it = std::lower_bound(begin, end, t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it != end && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t))) return it - begin;
  return std::nullopt;
}

Curve::Curve(TimeGrid grid_in, vector_t values_in, CurveKind kind_in)
    : grid(std::move(grid_in)), values(std::move(values_in)), kind(kind_in) {
  if (values.size() != grid.size()) throw InputError("curve values must match the grid length");
  switch (kind) {
    case CurveKind::Survival:
      if (std::abs(values(0) - 1.0) > kCurveSlack) throw InputError("survival curve must equal 1 at t = 0");
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < -kCurveSlack || values(i) > 1.0 + kCurveSlack) {
          throw InputError("survival curve leaves [0, 1] at t = " + format_double(grid[i]));
        }
        if (i > 0 && values(i) > values(i - 1) + kCurveSlack) {
          throw InputError("survival curve increases at t = " + format_double(grid[i]));
        }
      }
      break;
    case CurveKind::Hazard:
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!(values(i) >= -kHazardSlack)) {
          throw InputError("hazard curve negative at t = " + format_double(grid[i]));
        }
      }
      break;
    case CurveKind::Gap:
      break;
  }
}

void write_csv(std::ostream& out, const Curve& curve) {
  out << "t,value\n";
  for (Eigen::Index i = 0; i < curve.values.size(); ++i) {
    out << format_double(curve.grid[i]) << ',' << format_double(curve.values(i)) << '\n';
  }
}

matrix_t survival_matrix(const MechanismDistribution& dist, const TimeGrid& grid) {
  matrix_t s(grid.size(), dist.size());
  for (Eigen::Index k = 0; k < dist.size(); ++k) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) s(i, k) = survival_at(dist.mechanism(k), grid[i]);
  }
  return s;
}

matrix_t hazard_matrix(const MechanismDistribution& dist, const TimeGrid& grid) {
  matrix_t h(grid.size(), dist.size());
  for (Eigen::Index k = 0; k < dist.size(); ++k) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) h(i, k) = hazard_at(dist.mechanism(k), grid[i]);
  }
  return h;
}

Curve aggregate_survival(const MechanismDistribution& dist, const TimeGrid& grid) {
  vector_t values = survival_matrix(dist, grid) * dist.weights();
  return Curve(grid, std::move(values), CurveKind::Survival);
}

Curve observable_hazard(const MechanismDistribution& dist, const TimeGrid& grid) {
  const matrix_t s = survival_matrix(dist, grid);
  const matrix_t h = hazard_matrix(dist, grid);
  const vector_t denominator = s * dist.weights();
  require_positive_survival(denominator, grid);
  const vector_t numerator = h.cwiseProduct(s) * dist.weights();
  return Curve(grid, numerator.cwiseQuotient(denominator), CurveKind::Hazard);
}

Curve observable_hazard_logderiv(const MechanismDistribution& dist, const TimeGrid& grid) {
  const vector_t survival = survival_matrix(dist, grid) * dist.weights();
  require_positive_survival(survival, grid);
  const vector_t f = -survival.array().log();
  const vector_t& t = grid.points();
  const Eigen::Index n = t.size();
  vector_t d(n);
  d(0) = three_point_derivative(t(0), t(1), t(2), f(0), f(1), f(2));
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d(i) = three_point_derivative(t(i), t(i - 1), t(i + 1), f(i), f(i - 1), f(i + 1));
  }
  d(n - 1) = three_point_derivative(t(n - 1), t(n - 2), t(n - 3), f(n - 1), f(n - 2), f(n - 3));
  return Curve(grid, std::move(d), CurveKind::Hazard);
}

Curve mechanism_average_hazard(const MechanismDistribution& dist, const TimeGrid& grid) {
  vector_t values = hazard_matrix(dist, grid) * dist.weights();
  return Curve(grid, std::move(values), CurveKind::Hazard);
}

Curve selection_gap(const MechanismDistribution& dist, const TimeGrid& grid) {
  const Curve average = mechanism_average_hazard(dist, grid);
  const Curve observed = observable_hazard(dist, grid);
  return Curve(grid, average.values - observed.values, CurveKind::Gap);
}

}  // namespace hazardlab
