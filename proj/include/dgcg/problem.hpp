#pragma once

/// \file problem.hpp
/// The model problem  du/dt - (a u')' = f  on (0,1) x (0,T],  u = 0 on {0,1},  u(0) = u0,
/// with a piecewise-constant diffusion coefficient, and a small catalog of manufactured solutions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgcg {

using Function1 = std::function<double(double)>;
using Function2 = std::function<double(double, double)>;

/// Piecewise-constant function on (0,1): values[i] on (breakpoints[i-1], breakpoints[i]).
class PiecewiseConstant {
public:
  PiecewiseConstant() : values_{1.0} {}
  explicit PiecewiseConstant(double value) : values_{value} {}
  PiecewiseConstant(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values))
  {
    if (values_.size() != breakpoints_.size() + 1)
      throw std::invalid_argument("coefficient: need one more value than breakpoints");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > 0.0 && breakpoints_[i] < 1.0))
        throw std::invalid_argument("coefficient: breakpoints must lie in (0,1)");
      if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
        throw std::invalid_argument("coefficient: breakpoints must be increasing");
    }
  }

  /// Value at x; at a breakpoint the right-hand value.
  double operator()(double x) const
  {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
  }

  /// Value just left of x.
  double left_of(double x) const
  {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
  }

  /// Exact integral over [lo, hi].
  double integral(double lo, double hi) const
  {
    double s = 0.0, x = lo;
    for (std::size_t i = 0; i <= breakpoints_.size(); ++i) {
      const double end = (i < breakpoints_.size()) ? breakpoints_[i] : std::numeric_limits<double>::infinity();
      if (end <= x) continue;
      const double b = std::min(end, hi);
      if (b > x) s += values_[i] * (b - x);
      x = b;
      if (x >= hi) break;
    }
    return s;
  }

  /// Breakpoints strictly inside (lo, hi).
  std::vector<double> breakpoints_in(double lo, double hi) const
  {
    std::vector<double> out;
    for (double b : breakpoints_)
      if (b > lo && b < hi) out.push_back(b);
    return out;
  }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  bool is_constant() const { return min() == max(); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  PiecewiseConstant scaled(double c) const
  {
    auto v = values_;
    for (double& x : v) x *= c;
    return {breakpoints_, v};
  }

private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Exact solution u(x,t) with the derivatives needed to manufacture data and measure errors.
/// `kinks` lists interior points where u_x may jump (they become point loads in f).
struct ManufacturedSolution {
  std::string name;
  Function2 u;
  Function2 du_dt;
  Function2 du_dx;
  Function2 d2u_dx2;
  std::vector<double> kinks;
};

/// Dirac load weight(t) * delta_x.
struct PointLoad {
  double x = 0.5;
  Function1 weight;
};

struct Problem {
  PiecewiseConstant coefficient;
  Function2 source;                      // L2 part of f
  std::vector<PointLoad> point_loads;    // singular part of f (vertices of every mesh in use)
  Function1 initial;
  double final_time = 1.0;
  std::optional<ManufacturedSolution> manufactured;

  bool has_point_loads() const { return !point_loads.empty(); }
};

struct EllipticConstants {
  double alpha_flat = 1.0;
  double alpha_sharp = 1.0;
  double c_pf_pivot_x = 1.0 / std::numbers::pi;
  double c_pf_dual_pivot = 1.0 / std::numbers::pi;
};

/// f = u_t - a u_xx on each coefficient piece (the L2 part of the manufactured source).
inline double manufactured_source(const Problem& problem, double x, double t)
{
  if (!problem.manufactured) throw std::invalid_argument("no exact solution configured");
  const auto& m = *problem.manufactured;
  return m.du_dt(x, t) - problem.coefficient(x) * m.d2u_dx2(x, t);
}

/// Coercivity and continuity constants for the seminorm ||v||_X = ||v'||, plus the (0,1)
/// Poincare-Friedrichs constants 1/pi.
inline EllipticConstants constants_for(const PiecewiseConstant& coefficient)
{
  if (!(coefficient.min() > 0.0)) throw std::invalid_argument("coercivity violated");
  EllipticConstants c;
  c.alpha_flat = coefficient.min();
  c.alpha_sharp = coefficient.max();
  return c;
}

inline EllipticConstants constants_for(const Problem& problem) { return constants_for(problem.coefficient); }

/// Point loads generated by jumps of the flux a u_x of a manufactured solution at coefficient
/// breakpoints and kinks; negligible ones are dropped.
inline std::vector<PointLoad> manufactured_point_loads(const PiecewiseConstant& a, const ManufacturedSolution& m,
                                                       double final_time)
{
  std::vector<double> points = a.breakpoints();
  points.insert(points.end(), m.kinks.begin(), m.kinks.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<PointLoad> loads;
  for (double p : points) {
    const double lo = std::nextafter(p, 0.0), hi = std::nextafter(p, 1.0);
    auto du_dx = m.du_dx;
    const double a_lo = a.left_of(p), a_hi = a(p);
    Function1 weight = [=](double t) { return a_lo * du_dx(lo, t) - a_hi * du_dx(hi, t); };
    double peak = 0.0, scale = 1.0;
    for (int k = 0; k <= 16; ++k) {
      const double t = final_time * k / 16.0;
      peak = std::max(peak, std::abs(weight(t)));
      scale = std::max(scale, std::abs(a_lo * du_dx(lo, t)));
    }
    if (peak > 1e-12 * scale) loads.push_back({p, weight});
  }
  return loads;
}

/// Problem whose data are manufactured from an exact solution.
inline Problem make_problem(PiecewiseConstant coefficient, ManufacturedSolution exact, double final_time)
{
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  constants_for(coefficient);
  Problem p;
  p.coefficient = std::move(coefficient);
  p.final_time = final_time;
  p.manufactured = std::move(exact);
  p.point_loads = manufactured_point_loads(p.coefficient, *p.manufactured, final_time);
  const auto m = *p.manufactured;
  const auto a = p.coefficient;
  p.source = [m, a](double x, double t) { return m.du_dt(x, t) - a(x) * m.d2u_dx2(x, t); };
  p.initial = [m](double x) { return m.u(x, 0.0); };
  return p;
}

/// Problem with user data and no exact solution.
inline Problem make_problem(PiecewiseConstant coefficient, Function2 source, Function1 initial, double final_time)
{
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  constants_for(coefficient);
  Problem p;
  p.coefficient = std::move(coefficient);
  p.source = std::move(source);
  p.initial = std::move(initial);
  p.final_time = final_time;
  return p;
}

namespace catalog {

inline ManufacturedSolution zero()
{
  auto z = [](double, double) { return 0.0; };
  return {"zero", z, z, z, z, {}};
}

/// sin(pi x) e^{-t}
inline ManufacturedSolution sinpi_expdecay()
{
  constexpr double pi = std::numbers::pi;
  return {"sinpi_expdecay",
          [](double x, double t) { return std::sin(pi * x) * std::exp(-t); },
          [](double x, double t) { return -std::sin(pi * x) * std::exp(-t); },
          [](double x, double t) { return pi * std::cos(pi * x) * std::exp(-t); },
          [](double x, double t) { return -pi * pi * std::sin(pi * x) * std::exp(-t); },
          {}};
}

/// sin(pi x), time independent
inline ManufacturedSolution stationary_sin()
{
  constexpr double pi = std::numbers::pi;
  return {"stationary_sin",
          [](double x, double) { return std::sin(pi * x); },
          [](double, double) { return 0.0; },
          [](double x, double) { return pi * std::cos(pi * x); },
          [](double x, double) { return -pi * pi * std::sin(pi * x); },
          {}};
}

/// Heat flow from the first `terms` sine modes of the indicator of (0, 1/2), f = 0, for a
/// constant coefficient `diffusivity`.
inline ManufacturedSolution rough_ic(double diffusivity = 1.0, int terms = 16)
{
  constexpr double pi = std::numbers::pi;
  std::vector<double> b(terms + 1, 0.0);
  for (int k = 1; k <= terms; ++k) b[k] = 2.0 * (1.0 - std::cos(k * pi / 2.0)) / (k * pi);
  auto series = [b, diffusivity, terms](int deriv_x, bool deriv_t) {
    return [=](double x, double t) {
      double s = 0.0;
      for (int k = 1; k <= terms; ++k) {
        if (b[k] == 0.0) continue;
        const double kp = k * pi;
        const double decay = std::exp(-diffusivity * kp * kp * t);
        double space = 0.0;
        switch (deriv_x) {
          case 0: space = std::sin(kp * x); break;
          case 1: space = kp * std::cos(kp * x); break;
          default: space = -kp * kp * std::sin(kp * x); break;
        }
        s += b[k] * space * decay * (deriv_t ? -diffusivity * kp * kp : 1.0);
      }
      return s;
    };
  };
  return {"rough_ic", series(0, false), series(0, true), series(1, false), series(2, false), {}};
}

/// hat(x) cos(2 pi t) with hat(x) = 1 - |2x - 1|. Piecewise linear in space with a kink at 1/2,
/// so it lies in every P1 space whose mesh has a vertex at 1/2; the source carries a point load there.
inline ManufacturedSolution hat_cosine()
{
  constexpr double pi = std::numbers::pi;
  auto hat = [](double x) { return 1.0 - std::abs(2.0 * x - 1.0); };
  auto dhat = [](double x) { return x < 0.5 ? 2.0 : -2.0; };
  return {"hat_cosine",
          [=](double x, double t) { return hat(x) * std::cos(2 * pi * t); },
          [=](double x, double t) { return -2 * pi * hat(x) * std::sin(2 * pi * t); },
          [=](double x, double t) { return dhat(x) * std::cos(2 * pi * t); },
          [](double, double) { return 0.0; },
          {0.5}};
}

/// Catalog lookup by name.
inline ManufacturedSolution by_name(const std::string& name, const PiecewiseConstant& coefficient, int terms = 16)
{
  if (name == "zero") return zero();
  if (name == "sinpi_expdecay") return sinpi_expdecay();
  if (name == "stationary_sin") return stationary_sin();
  if (name == "hat_cosine") return hat_cosine();
  if (name == "rough_ic") {
    if (!coefficient.is_constant()) throw std::invalid_argument("rough_ic needs a constant coefficient");
    return rough_ic(coefficient.min(), terms);
  }
  throw std::invalid_argument("unknown manufactured solution '" + name + "'");
}

}  // namespace catalog

}  // namespace dgcg
