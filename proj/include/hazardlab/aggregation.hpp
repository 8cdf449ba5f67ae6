#pragma once

#include "hazardlab/mechanism_dist.hpp"

#include <ostream>

namespace hazardlab {

/// Strictly increasing evaluation times starting at 0, at least three points.
class TimeGrid {
 public:
  explicit TimeGrid(vector_t points);

  /// Points i * step for i = 0..round(t_max / step).
  static TimeGrid uniform(double t_max, double step);

  const vector_t& points() const { return points_; }
  Eigen::Index size() const { return points_.size(); }
  double operator[](Eigen::Index i) const { return points_(i); }
  double back() const { return points_(points_.size() - 1); }
  /// Index of the grid point equal to t (within 1e-12 relative), if any.
  std::optional<Eigen::Index> index_of(double t) const;

 private:
  vector_t points_;
};

enum class CurveKind { Survival, Hazard, Gap };

/// A function sampled on a TimeGrid; survival and hazard kinds enforce their range invariants.
struct Curve {
  Curve(TimeGrid grid, vector_t values, CurveKind kind);

  TimeGrid grid;
  vector_t values;
  CurveKind kind;

  double sup_norm() const { return values.cwiseAbs().maxCoeff(); }
};

/// Writes `t,value` rows in shortest round-trip decimal form.
void write_csv(std::ostream& out, const Curve& curve);

/// Matrix of S_k(t_i), one row per grid point, one column per atom.
matrix_t survival_matrix(const MechanismDistribution& dist, const TimeGrid& grid);
/// Matrix of h_k(t_i).
matrix_t hazard_matrix(const MechanismDistribution& dist, const TimeGrid& grid);

/// S(t) = sum_k w_k S_k(t).
Curve aggregate_survival(const MechanismDistribution& dist, const TimeGrid& grid);

/// Survivor-weighted hazard sum_k w_k h_k S_k / sum_k w_k S_k.
Curve observable_hazard(const MechanismDistribution& dist, const TimeGrid& grid);

/**
 * -d/dt log S(t) by second-order three-point differences on the (possibly
 * nonuniform) grid, one-sided at the ends. Independent of observable_hazard.
 */
Curve observable_hazard_logderiv(const MechanismDistribution& dist, const TimeGrid& grid);

/// Prior-weighted hazard sum_k w_k h_k(t), no survivor conditioning.
Curve mechanism_average_hazard(const MechanismDistribution& dist, const TimeGrid& grid);

/// mechanism_average_hazard - observable_hazard. Requires ground-truth mechanisms.
Curve selection_gap(const MechanismDistribution& dist, const TimeGrid& grid);

}  // namespace hazardlab
