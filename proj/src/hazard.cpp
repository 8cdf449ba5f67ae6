#include "hazardlab/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hazardlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InputError(std::string(what) + " must be a finite positive number");
  }
}

void require_time(double t) {
  if (!(t >= 0.0)) throw InputError("time must be nonnegative, got " + format_double(t));
}

void require_grid(const vector_t& grid, const char* what) {
  if (grid.size() < 2) throw InputError(std::string(what) + " needs at least two points");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid(i)) || grid(i) < 0.0) {
      throw InputError(std::string(what) + " points must be finite and nonnegative");
    }
    if (i > 0 && !(grid(i) > grid(i - 1))) {
      throw InputError(std::string(what) + " must be strictly increasing");
    }
  }
}

// Index i with grid(i) <= t < grid(i+1); the last interval is closed on the right.
Eigen::Index segment_of(const vector_t& grid, double t) {
  const auto* begin = grid.data();
  const auto* end = begin + grid.size();
  auto it = std::upper_bound(begin, end, t);
  Eigen::Index i = (it - begin) - 1;
  return std::clamp<Eigen::Index>(i, 0, grid.size() - 2);
}

double tabulated_hazard(const Tabulated& tab, double t) {
  if (t > tab.grid(tab.grid.size() - 1)) {
    throw InputError("time " + format_double(t) + " beyond tabulated grid end " +
                     format_double(tab.grid(tab.grid.size() - 1)));
  }
  if (t < tab.grid(0)) return tab.values(0);
  const Eigen::Index i = segment_of(tab.grid, t);
  const double w = (t - tab.grid(i)) / (tab.grid(i + 1) - tab.grid(i));
  return (1.0 - w) * tab.values(i) + w * tab.values(i + 1);
}

double tabulated_cumulative(const Tabulated& tab, double t) {
  if (t > tab.grid(tab.grid.size() - 1)) {
    throw InputError("time " + format_double(t) + " beyond tabulated grid end " +
                     format_double(tab.grid(tab.grid.size() - 1)));
  }
  if (t <= tab.grid(0)) return tab.values(0) * t;
  const Eigen::Index i = segment_of(tab.grid, t);
  const double s = t - tab.grid(i);
  const double slope = (tab.values(i + 1) - tab.values(i)) / (tab.grid(i + 1) - tab.grid(i));
  return tab.cumulative(i) + tab.values(i) * s + 0.5 * slope * s * s;
}

// Piecewise-linear g with constant extension past the last grid point.
double perturbation_value(const Perturbed& p, double t) {
  const Eigen::Index last = p.grid.size() - 1;
  if (t >= p.grid(last)) return p.g(last);
  const Eigen::Index i = segment_of(p.grid, t);
  const double w = (t - p.grid(i)) / (p.grid(i + 1) - p.grid(i));
  return (1.0 - w) * p.g(i) + w * p.g(i + 1);
}

double perturbation_slope(const Perturbed& p, double t) {
  const Eigen::Index last = p.grid.size() - 1;
  if (t >= p.grid(last)) return 0.0;
  const Eigen::Index i = segment_of(p.grid, t);
  return (p.g(i + 1) - p.g(i)) / (p.grid(i + 1) - p.grid(i));
}

double bisect_inverse(const HazardShape& shape, double u) {
  double lo = 0.0;
  double hi = 1.0;
  while (cumulative_hazard(shape, hi) < u) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("cumulative hazard bracket diverged");
  }
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (cumulative_hazard(shape, mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return hi;
}

}  // namespace

HazardShape HazardShape::exponential(double rate) {
  require_positive(rate, "exponential rate");
  return HazardShape(Exponential{rate});
}

HazardShape HazardShape::weibull(double shape, double scale) {
  require_positive(shape, "weibull shape");
  require_positive(scale, "weibull scale");
  return HazardShape(Weibull{shape, scale});
}

HazardShape HazardShape::piecewise_constant(std::vector<double> breakpoints,
                                            std::vector<double> rates) {
  if (rates.size() != breakpoints.size() + 1) {
    throw InputError("piecewise constant hazard needs one more rate than breakpoints");
  }
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0) || !std::isfinite(breakpoints[i])) {
      throw InputError("piecewise constant breakpoints must be finite and positive");
    }
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
      throw InputError("piecewise constant breakpoints must be strictly increasing");
    }
  }
  for (double r : rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("piecewise constant rate must be finite and nonnegative");
  }
  return HazardShape(PiecewiseConstant{std::move(breakpoints), std::move(rates)});
}

HazardShape HazardShape::log_logistic(double shape, double scale) {
  require_positive(shape, "log-logistic shape");
  require_positive(scale, "log-logistic scale");
  return HazardShape(LogLogistic{shape, scale});
}

HazardShape HazardShape::scaled(HazardShape base, double factor) {
  require_positive(factor, "scale factor");
  return HazardShape(Scaled{std::make_shared<const HazardShape>(std::move(base)), factor});
}

HazardShape HazardShape::time_scaled(HazardShape base, double factor) {
  require_positive(factor, "time-scale factor");
  return HazardShape(TimeScaled{std::make_shared<const HazardShape>(std::move(base)), factor});
}

HazardShape HazardShape::tabulated(vector_t grid, vector_t values) {
  require_grid(grid, "tabulated grid");
  if (values.size() != grid.size()) {
    throw InputError("tabulated values must match the grid length");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= 0.0) || !std::isfinite(values(i))) {
      throw InputError("tabulated hazard values must be finite and nonnegative");
    }
  }
  vector_t cumulative(grid.size());
  cumulative(0) = values(0) * grid(0);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    cumulative(i) = cumulative(i - 1) + 0.5 * (values(i) + values(i - 1)) * (grid(i) - grid(i - 1));
  }
  return HazardShape(Tabulated{std::move(grid), std::move(values), std::move(cumulative)});
}

HazardShape HazardShape::perturbed(HazardShape base, vector_t grid, vector_t g, double epsilon) {
  require_grid(grid, "perturbation grid");
  if (grid(0) != 0.0) throw InputError("perturbation grid must start at 0");
  if (g.size() != grid.size()) throw InputError("perturbation values must match the grid length");
  if (!std::isfinite(epsilon)) throw InputError("perturbation epsilon must be finite");
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g(i))) throw InputError("perturbation values must be finite");
    if (!(1.0 + epsilon * g(i) > 0.0)) {
      throw InputError("perturbed survival must stay positive (1 + epsilon g > 0) at t = " +
                       format_double(grid(i)));
    }
  }
  return HazardShape(
      Perturbed{std::make_shared<const HazardShape>(std::move(base)), std::move(grid), std::move(g), epsilon});
}

std::string_view HazardShape::kind() const {
  return std::visit(overloaded{
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const Weibull&) { return std::string_view("weibull"); },
                        [](const PiecewiseConstant&) { return std::string_view("piecewise_constant"); },
                        [](const LogLogistic&) { return std::string_view("log_logistic"); },
                        [](const Scaled&) { return std::string_view("scaled"); },
                        [](const TimeScaled&) { return std::string_view("time_scaled"); },
                        [](const Tabulated&) { return std::string_view("tabulated"); },
                        [](const Perturbed&) { return std::string_view("perturbed"); },
                    },
                    variant_);
}

double hazard_at(const HazardShape& shape, double t) {
  require_time(t);
  return std::visit(
      overloaded{
          [](const Exponential& e) { return e.rate; },
          [t](const Weibull& w) {
            if (w.shape == 1.0) return 1.0 / w.scale;
            if (t == 0.0) return w.shape < 1.0 ? kInf : 0.0;
            return (w.shape / w.scale) * std::pow(t / w.scale, w.shape - 1.0);
          },
          [t](const PiecewiseConstant& p) {
            const auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), t);
            return p.rates[static_cast<std::size_t>(it - p.breakpoints.begin())];
          },
          [t](const LogLogistic& l) {
            if (t == 0.0) return l.shape < 1.0 ? kInf : (l.shape == 1.0 ? 1.0 / l.scale : 0.0);
            const double z = std::pow(t / l.scale, l.shape);
            return (l.shape / t) * z / (1.0 + z);
          },
          [t](const Scaled& s) { return s.factor * hazard_at(*s.base, t); },
          [t](const TimeScaled& s) { return hazard_at(*s.base, t / s.factor) / s.factor; },
          [t](const Tabulated& tab) { return tabulated_hazard(tab, t); },
          [t](const Perturbed& p) {
            const double g = perturbation_value(p, t);
            return hazard_at(*p.base, t) - p.epsilon * perturbation_slope(p, t) / (1.0 + p.epsilon * g);
          },
      },
      shape.variant());
}

double cumulative_hazard(const HazardShape& shape, double t) {
  require_time(t);
  return std::visit(
      overloaded{
          [t](const Exponential& e) { return e.rate * t; },
          [t](const Weibull& w) { return std::pow(t / w.scale, w.shape); },
          [t](const PiecewiseConstant& p) {
            double total = 0.0;
            double start = 0.0;
            for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
              if (t <= p.breakpoints[i]) return total + p.rates[i] * (t - start);
              total += p.rates[i] * (p.breakpoints[i] - start);
              start = p.breakpoints[i];
            }
            return total + p.rates.back() * (t - start);
          },
          [t](const LogLogistic& l) { return std::log1p(std::pow(t / l.scale, l.shape)); },
          [t](const Scaled& s) { return s.factor * cumulative_hazard(*s.base, t); },
          [t](const TimeScaled& s) { return cumulative_hazard(*s.base, t / s.factor); },
          [t](const Tabulated& tab) { return tabulated_cumulative(tab, t); },
          [t](const Perturbed& p) {
            return cumulative_hazard(*p.base, t) - std::log1p(p.epsilon * perturbation_value(p, t));
          },
      },
      shape.variant());
}

double survival_at(const HazardShape& shape, double t) {
  require_time(t);
  if (const auto* p = std::get_if<Perturbed>(&shape.variant())) {
    return survival_at(*p->base, t) * (1.0 + p->epsilon * perturbation_value(*p, t));
  }
  return std::exp(-cumulative_hazard(shape, t));
}

double cumulative_hazard_supremum(const HazardShape& shape) {
  return std::visit(overloaded{
                        [](const Tabulated& tab) { return tab.cumulative(tab.cumulative.size() - 1); },
                        [](const PiecewiseConstant& p) {
                          // bounded only when the final rate is zero
                          if (p.rates.back() > 0.0) return kInf;
                          double total = 0.0, start = 0.0;
                          for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
                            total += p.rates[i] * (p.breakpoints[i] - start);
                            start = p.breakpoints[i];
                          }
                          return total;
                        },
                        [](const Scaled& s) { return s.factor * cumulative_hazard_supremum(*s.base); },
                        [](const TimeScaled& s) { return cumulative_hazard_supremum(*s.base); },
                        [](const Perturbed& p) {
                          const double sup = cumulative_hazard_supremum(*p.base);
                          return std::isfinite(sup) ? sup - std::log1p(p.epsilon * p.g(p.g.size() - 1)) : sup;
                        },
                        [](const auto&) { return kInf; },
                    },
                    shape.variant());
}

double inverse_cumulative_hazard(const HazardShape& shape, double u) {
  if (!(u >= 0.0) || !std::isfinite(u)) {
    throw InputError("cumulative hazard level must be finite and nonnegative");
  }
  if (u == 0.0) return 0.0;
  if (u > cumulative_hazard_supremum(shape)) throw InputError("unreachable cumulative hazard");
  return std::visit(
      overloaded{
          [u](const Exponential& e) { return u / e.rate; },
          [u](const Weibull& w) { return w.scale * std::pow(u, 1.0 / w.shape); },
          [u](const PiecewiseConstant& p) {
            double total = 0.0;
            double start = 0.0;
            for (std::size_t i = 0; i < p.breakpoints.size(); ++i) {
              const double next = total + p.rates[i] * (p.breakpoints[i] - start);
              if (u <= next) return start + (u - total) / p.rates[i];
              total = next;
              start = p.breakpoints[i];
            }
            return start + (u - total) / p.rates.back();
          },
          [u](const LogLogistic& l) { return l.scale * std::pow(std::expm1(u), 1.0 / l.shape); },
          [u](const Scaled& s) { return inverse_cumulative_hazard(*s.base, u / s.factor); },
          [u](const TimeScaled& s) { return s.factor * inverse_cumulative_hazard(*s.base, u); },
          [u](const Tabulated& tab) {
            // First segment whose right-end cumulative reaches u; solve the quadratic inside it.
            Eigen::Index i = 0;
            const Eigen::Index last = tab.grid.size() - 1;
            if (u <= tab.cumulative(0)) {
              return u / tab.values(0);
            }
            while (i < last - 1 && tab.cumulative(i + 1) < u) ++i;
            const double width = tab.grid(i + 1) - tab.grid(i);
            const double a2 = 0.5 * (tab.values(i + 1) - tab.values(i)) / width;
            const double b = tab.values(i);
            const double r = u - tab.cumulative(i);
            const double disc = std::max(0.0, b * b + 4.0 * a2 * r);
            const double denom = b + std::sqrt(disc);
            const double s = denom > 0.0 ? 2.0 * r / denom : 0.0;
            return std::min(tab.grid(i) + s, tab.grid(i + 1));
          },
          [&shape, u](const Perturbed&) { return bisect_inverse(shape, u); },
      },
      shape.variant());
}

std::optional<PerturbationViolation> perturbation_violation(const HazardShape& base,
                                                            const vector_t& grid, const vector_t& g,
                                                            double epsilon) {
  const Eigen::Index n = grid.size();
  if (n != g.size() || n < 2 || grid(0) != 0.0) {
    return PerturbationViolation{0, 0.0, "grid must start at 0 and match g in length"};
  }
  constexpr double kSlack = 1e-14;
  if (g(0) != 0.0) return PerturbationViolation{0, grid(0), "survival equals 1 at t = 0"};
  double previous = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double factor = 1.0 + epsilon * g(i);
    const double s = survival_at(base, grid(i)) * factor;
    if (!(factor > 0.0) || s > 1.0 + kSlack) {
      return PerturbationViolation{i, grid(i), "[0,1] bound"};
    }
    if (s > previous + kSlack) return PerturbationViolation{i, grid(i), "monotonicity"};
    previous = s;
    // Hazard h_base (1 + eps g) - eps g' must be nonnegative from both sides of the point.
    const double h = hazard_at(base, grid(i));
    if (i + 1 < n) {
      const double right = (g(i + 1) - g(i)) / (grid(i + 1) - grid(i));
      if (h * factor - epsilon * right < -kSlack) {
        return PerturbationViolation{i, grid(i), "monotonicity (negative hazard)"};
      }
    }
    if (i > 0) {
      const double left = (g(i) - g(i - 1)) / (grid(i) - grid(i - 1));
      if (h * factor - epsilon * left < -kSlack) {
        return PerturbationViolation{i, grid(i), "monotonicity (negative hazard)"};
      }
    }
  }
  return std::nullopt;
}

}  // namespace hazardlab
