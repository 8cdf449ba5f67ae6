#pragma once

#include "hazardlab/hazard.hpp"
#include "hazardlab/simulate.hpp"

#include <cmath>
#include <vector>

namespace testing {

using namespace hazardlab;

// Tiny parameter generator for property tests; seeded so failures replay.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform01(rng_) * (hi - lo + 1)); }

 private:
  SplitMix64 rng_;
};

// Every parametric shape family, including nested composites.
inline std::vector<HazardShape> shape_matrix() {
  std::vector<HazardShape> out;
  for (double rate : {0.1, 1.0, 3.5}) out.push_back(HazardShape::exponential(rate));
  for (double k : {0.5, 1.0, 2.0, 3.0}) {
    for (double scale : {0.5, 2.0}) out.push_back(HazardShape::weibull(k, scale));
  }
  out.push_back(HazardShape::piecewise_constant({1.0}, {1.0, 3.0}));
  out.push_back(HazardShape::piecewise_constant({0.5, 2.0, 4.0}, {0.2, 0.0, 1.5, 0.7}));
  for (double k : {0.8, 2.5}) out.push_back(HazardShape::log_logistic(k, 1.5));
  const HazardShape w = HazardShape::weibull(1.7, 1.2);
  out.push_back(HazardShape::scaled(w, 2.5));
  out.push_back(HazardShape::time_scaled(w, 0.4));
  out.push_back(HazardShape::scaled(HazardShape::time_scaled(HazardShape::log_logistic(1.3, 0.8), 3.0), 0.5));
  return out;
}

inline vector_t linspace(double a, double b, Eigen::Index n) { return vector_t::LinSpaced(n, a, b); }

}  // namespace testing
