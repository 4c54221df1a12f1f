#pragma once

/// \file quadrature.hpp
/// Legendre polynomials on [-1,1] and Gauss-Legendre rules.

#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dgcg {

namespace legendre {

/// P_k(xi) by the three-term recurrence.
inline double value(int k, double xi)
{
  if (k == 0) return 1.0;
  double p_prev = 1.0, p = xi;
  for (int j = 1; j < k; ++j) {
    const double p_next = ((2 * j + 1) * xi * p - j * p_prev) / (j + 1);
    p_prev = p;
    p = p_next;
  }
  return p;
}

/// P_0..P_r at xi, written to out (size r+1).
inline void values(int r, double xi, double* out)
{
  out[0] = 1.0;
  if (r == 0) return;
  out[1] = xi;
  for (int j = 1; j < r; ++j)
    out[j + 1] = ((2 * j + 1) * xi * out[j] - j * out[j - 1]) / (j + 1);
}

/// P_k'(xi); uses P_k' = sum over k-1, k-3, ... of (2j+1) P_j, valid at the endpoints too.
inline double derivative(int k, double xi)
{
  double d = 0.0;
  for (int j = k - 1; j >= 0; j -= 2) d += (2 * j + 1) * value(j, xi);
  return d;
}

/// P_k(-1) = (-1)^k.
constexpr double at_left(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

}  // namespace legendre

struct GaussRule {
  std::vector<double> nodes;    // on [-1,1], ascending
  std::vector<double> weights;  // sum to 2

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
inline GaussRule gauss_legendre(int n)
{
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double p = legendre::value(n, x);
      const double dp = n * (x * p - legendre::value(n - 1, x)) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = n * (x * legendre::value(n, x) - legendre::value(n - 1, x)) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Cached rules. A deque keeps returned references valid while the cache grows.
inline const GaussRule& gauss_rule(int n)
{
  static thread_local std::deque<GaussRule> cache;
  if (static_cast<std::size_t>(n) >= cache.size()) cache.resize(n + 1);
  if (cache[n].nodes.empty()) cache[n] = gauss_legendre(n);
  return cache[n];
}

/// Integrate fn over [a,b] with an n-point Gauss rule.
template <class F>
double integrate(F&& fn, double a, double b, int n)
{
  const auto& rule = gauss_rule(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * fn(mid + half * rule.nodes[q]);
  return s * half;
}

}  // namespace dgcg
