#pragma once

/// \file bounds.hpp
/// Assembly of the L2(0,t_n;X), Linf(0,t_n;H) and broken H1(0,t_n;X') error bounds from an
/// IndicatorBreakdown. Every addend is kept in a named ledger.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dgcg/estimators.hpp"
#include "dgcg/problem.hpp"

namespace dgcg {

enum class BoundKind { L2X, LinfH, H1XDual };

inline const char* to_string(BoundKind k)
{
  switch (k) {
    case BoundKind::L2X: return "L2X";
    case BoundKind::LinfH: return "LinfH";
    default: return "H1Xdual";
  }
}

struct BoundTerm {
  std::string name;
  double value = 0.0;
  bool squared = true;  // enters the bound inside the square root
};

struct CertifiedBound {
  BoundKind kind = BoundKind::L2X;
  double value = 0.0;
  std::vector<BoundTerm> terms;
  double lambda = 1.0;
  double horizon = 0.0;

  double term(const std::string& name) const
  {
    for (const auto& t : terms)
      if (t.name == name) return t.value;
    throw std::out_of_range("no bound term '" + name + "'");
  }
};

/// lambda = min(1, 1/t_n)
inline double choose_lambda(double t_n)
{
  if (!(t_n > 0.0)) throw std::invalid_argument("lambda needs a positive horizon");
  return std::min(1.0, 1.0 / t_n);
}

/// Sums of the per-slab indicators over slabs 1..n.
struct Accumulated {
  double theta2 = 0.0, space = 0.0, osc = 0.0, mesh_l2 = 0.0, mesh_l1 = 0.0, elliptic_x = 0.0;
  double linf_jump_max = 0.0, linf_elliptic_max = 0.0;
  double horizon = 0.0;
};

inline Accumulated accumulate(const IndicatorBreakdown& b, std::size_t n)
{
  if (n < 1 || n > b.slabs.size()) throw std::out_of_range("bound horizon outside the partition");
  Accumulated a;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = b.slabs[j];
    for (double v : {s.theta, s.space_l2t, s.osc_l2t, s.mesh_change_l2t, s.mesh_change_l1t, s.elliptic_x_l2t, s.linf_jump, s.linf_elliptic})
      if (!(v >= 0.0)) throw std::logic_error("negative indicator in slab " + std::to_string(s.n));
    a.theta2 += s.theta * s.theta;
    a.space += s.space_l2t;
    a.osc += s.osc_l2t;
    a.mesh_l2 += s.mesh_change_l2t;
    a.mesh_l1 += s.mesh_change_l1t;
    a.elliptic_x += s.elliptic_x_l2t;
    a.linf_jump_max = std::max(a.linf_jump_max, s.linf_jump);
    a.linf_elliptic_max = std::max(a.linf_elliptic_max, s.linf_elliptic);
  }
  a.horizon = b.slabs[n - 1].t;
  return a;
}

namespace detail {

inline void check_lambda(double lambda)
{
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0,1]");
}

inline double root_of_squared(const std::vector<BoundTerm>& terms)
{
  double s = 0.0;
  for (const auto& t : terms)
    if (t.squared) s += t.value;
  return std::sqrt(s);
}

}  // namespace detail

/// ||u - U||_{L2(0,t_n;X)}^2 <= 6/a init + 3 sum int E_X^2 + 12/a lambda^2 (sum int eta)^2 + 21/a^2 sum theta^2
///   + 18/a^2 sum (int S^2 + int osc^2) + 18/a^2 C_PF^2 (1-lambda)^2 sum int eta^2,   a = alpha_flat.
inline CertifiedBound assemble_l2x_bound(const IndicatorBreakdown& b, const EllipticConstants& c, double lambda, std::size_t n)
{
  detail::check_lambda(lambda);
  const auto s = accumulate(b, n);
  const double a = c.alpha_flat, cpf = c.c_pf_pivot_x, init = b.initial.value();
  CertifiedBound out{BoundKind::L2X, 0.0, {}, lambda, s.horizon};
  out.terms = {{"initial", 6.0 / a * init},
               {"elliptic", 3.0 * s.elliptic_x},
               {"mesh_l1", 12.0 / a * lambda * lambda * s.mesh_l1 * s.mesh_l1},
               {"time", 21.0 / (a * a) * s.theta2},
               {"space", 18.0 / (a * a) * s.space},
               {"osc", 18.0 / (a * a) * s.osc},
               {"mesh_l2", 18.0 / (a * a) * cpf * cpf * (1 - lambda) * (1 - lambda) * s.mesh_l2}};
  out.value = detail::root_of_squared(out.terms);
  return out;
}

/// The rho-only part: ||U^ - u||_{L2(0,t_n;X)}^2 <= 2/a init + 4/a lambda^2 (sum int eta)^2
///   + 6/a^2 sum (theta^2 + int S^2 + int osc^2) + 6/a^2 C_PF^2 (1-lambda)^2 sum int eta^2.
inline double rho_l2x_bound(const IndicatorBreakdown& b, const EllipticConstants& c, double lambda, std::size_t n)
{
  detail::check_lambda(lambda);
  const auto s = accumulate(b, n);
  const double a = c.alpha_flat, cpf = c.c_pf_pivot_x;
  return std::sqrt(2.0 / a * b.initial.value() + 4.0 / a * lambda * lambda * s.mesh_l1 * s.mesh_l1
                   + 6.0 / (a * a) * (s.theta2 + s.space + s.osc) + 6.0 / (a * a) * cpf * cpf * (1 - lambda) * (1 - lambda) * s.mesh_l2);
}

/// ||u - U||_{Linf(0,t_n;H)} <= sqrt(2 init + 4 lambda^2 (sum int eta)^2 + 4/a sum (theta^2 + int S^2 + int osc^2)
///   + 4/a C_PF^2 (1-lambda)^2 sum int eta^2) + max_j (E_H[pi-[[U]], [[AU]]] + ||[[U]]||) + max_j sup_t E_H[U, A_j U].
inline CertifiedBound assemble_linfh_bound(const IndicatorBreakdown& b, const EllipticConstants& c, double lambda, std::size_t n)
{
  detail::check_lambda(lambda);
  const auto s = accumulate(b, n);
  const double a = c.alpha_flat, cpf = c.c_pf_pivot_x;
  CertifiedBound out{BoundKind::LinfH, 0.0, {}, lambda, s.horizon};
  out.terms = {{"initial", 2.0 * b.initial.value()},
               {"mesh_l1", 4.0 * lambda * lambda * s.mesh_l1 * s.mesh_l1},
               {"time", 4.0 / a * s.theta2},
               {"space", 4.0 / a * s.space},
               {"osc", 4.0 / a * s.osc},
               {"mesh_l2", 4.0 / a * cpf * cpf * (1 - lambda) * (1 - lambda) * s.mesh_l2},
               {"linf_jump_max", s.linf_jump_max, false},
               {"linf_elliptic_max", s.linf_elliptic_max, false}};
  out.value = detail::root_of_squared(out.terms) + s.linf_jump_max + s.linf_elliptic_max;
  return out;
}

/// Broken H1(0,t_n;X') seminorm bound:
///   sqrt2 (sqrt(sum theta^2) + sqrt(sum int S^2) + sqrt(sum int osc^2) + C_PF sqrt(sum int eta^2))
///   + sqrt2 alpha_sharp rho_l2x + sqrt(sum int S^2),
/// the last term bounding the seminorm of U^ - U.
inline CertifiedBound assemble_h1xdual_bound(const IndicatorBreakdown& b, const EllipticConstants& c, double rho_l2x, std::size_t n)
{
  if (!(rho_l2x >= 0.0)) throw std::invalid_argument("rho bound must be nonnegative");
  const auto s = accumulate(b, n);
  const double r = std::sqrt(s.theta2) + std::sqrt(s.space) + std::sqrt(s.osc) + c.c_pf_pivot_x * std::sqrt(s.mesh_l2);
  CertifiedBound out{BoundKind::H1XDual, 0.0, {}, 1.0, s.horizon};
  out.terms = {{"residual", std::sqrt(2.0) * r, false},
               {"rho", std::sqrt(2.0) * c.alpha_sharp * rho_l2x, false},
               {"space_seminorm", std::sqrt(s.space), false}};
  for (const auto& t : out.terms) out.value += t.value;
  return out;
}

/// lambda (sum int eta)^2 <= sum int eta^2 for t_n >= 1 and lambda = 1/t_n.
inline bool lambda_inequality_holds(const IndicatorBreakdown& b, std::size_t n, double slack = 1e-12)
{
  const auto s = accumulate(b, n);
  const double lambda = choose_lambda(s.horizon);
  return lambda * s.mesh_l1 * s.mesh_l1 <= s.mesh_l2 * (1 + slack) + slack;
}

}  // namespace dgcg
