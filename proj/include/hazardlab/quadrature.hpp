#pragma once

#include "hazardlab/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace hazardlab {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
template <typename Scalar = scalar_t>
struct GaussLegendreRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/**
 * Computes the Gauss-Legendre rule by Newton iteration on P_n, starting from
 * the Tricomi approximation of each root. Nodes are returned in increasing
 * order.
 */
template <typename Scalar = scalar_t>
GaussLegendreRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw InputError("gauss_legendre: need at least one node");
  GaussLegendreRule<Scalar> rule;
  if (n == 1) {
    rule.nodes = Eigen::Matrix<Scalar, 1, 1>::Zero();
    rule.weights = Eigen::Matrix<Scalar, 1, 1>::Constant(2);
    return rule;
  }
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    Scalar x = std::cos(pi * (i + Scalar(0.75)) / (n + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar step = p1 / dp;
      x -= step;
      if (std::abs(step) <= 4 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // Re-evaluate the derivative at the converged root for the weight.
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes(i) = -x;
    rule.nodes(n - 1 - i) = x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0;
  return rule;
}

/// Fixed-order Gauss-Legendre estimate of the integral of f over [a, b].
template <typename Scalar, typename Func>
Scalar integrate_fixed(const GaussLegendreRule<Scalar>& rule, Func&& f, Scalar a, Scalar b) {
  const Scalar half = (b - a) / 2;
  const Scalar mid = (a + b) / 2;
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights(i) * f(mid + half * rule.nodes(i));
  }
  return sum * half;
}

namespace detail {

template <typename Scalar, typename Func>
Scalar integrate_adaptive_impl(const GaussLegendreRule<Scalar>& rule, Func& f, Scalar a, Scalar b,
                               Scalar whole, Scalar tol, int depth) {
  const Scalar mid = (a + b) / 2;
  const Scalar left = integrate_fixed(rule, f, a, mid);
  const Scalar right = integrate_fixed(rule, f, mid, b);
  const Scalar refined = left + right;
  if (std::abs(refined - whole) <= tol || depth >= 40 || mid <= a || mid >= b) return refined;
  return integrate_adaptive_impl(rule, f, a, mid, left, tol / 2, depth + 1) +
         integrate_adaptive_impl(rule, f, mid, b, right, tol / 2, depth + 1);
}

}  // namespace detail

/**
 * Composite Gauss-Legendre quadrature with interval bisection. An interval is
 * accepted once the two-halves estimate agrees with the whole-interval
 * estimate to within its share of the absolute tolerance.
 */
template <typename Scalar = scalar_t, typename Func>
Scalar integrate_adaptive(Func&& f, Scalar a, Scalar b, Scalar abs_tol = Scalar(1e-10)) {
  if (b == a) return Scalar(0);
  if (b < a) return -integrate_adaptive<Scalar>(f, b, a, abs_tol);
  static const GaussLegendreRule<Scalar> rule = gauss_legendre<Scalar>(10);
  const Scalar whole = integrate_fixed(rule, f, a, b);
  return detail::integrate_adaptive_impl(rule, f, a, b, whole, abs_tol, 0);
}

}  // namespace hazardlab
