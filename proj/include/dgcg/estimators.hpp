#pragma once

/// \file estimators.hpp
/// Elliptic a posteriori estimator E[w_h, g] and the parabolic indicators built on it.
///
/// E[w_h, g] bounds ||w - w_h|| where w = A^{-1} g and w_h is the Galerkin solution of the same
/// load on a mesh V. In 1D with P1 elements, v - I_h v vanishes at the mesh vertices, so vertex
/// flux jumps drop out of the error representation and only two local quantities remain:
///   eta_K = (h_K/pi) ||g||_K + sum_{b coefficient breakpoint inside K} |w_h' [[a]]_b| sqrt((b-x_L)(x_R-b)/h_K).
/// With them
///   E_X  = (sum_K eta_K^2)^{1/2} / alpha_flat,
///   E_H  = (sum_{K smooth} (h_K^2 ||g||_K / (pi^2 a_K))^2)^{1/2} + C_PF/alpha_flat (sum_{K with breakpoint} eta_K^2)^{1/2},
///   E_X' = C_PF E_H.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgcg/problem.hpp"
#include "dgcg/quadrature.hpp"
#include "dgcg/reconstruction.hpp"
#include "dgcg/spatial_fem.hpp"
#include "dgcg/time_dg.hpp"

namespace dgcg {

enum class NormTag { X, H, XDual };

inline const char* to_string(NormTag t)
{
  switch (t) {
    case NormTag::X: return "X";
    case NormTag::H: return "H";
    default: return "X_dual";
  }
}

struct EllipticEstimatorKind {
  NormTag norm = NormTag::X;
  std::string variant = "residual";
};

/// Load of an elliptic problem: an FE function on a mesh of the tree, a callable, or their sum.
struct Load {
  std::optional<FeFunction> fe;
  Function1 remainder;

  Load() = default;
  Load(FeFunction f) : fe(std::move(f)) {}
  Load(Function1 g) : remainder(std::move(g)) {}
  Load(FeFunction f, Function1 g) : fe(std::move(f)), remainder(std::move(g)) {}
};

/// ||g||_K for every element K of `space`.
inline std::vector<double> element_load_norms(const FeSpace& space, const Load& g, int points = 8)
{
  if (!g.fe && !g.remainder) throw std::invalid_argument("load not representable");
  std::vector<double> sq(space.num_elements(), 0.0);
  FeSpace carrier = space;
  std::optional<FeFunction> gf;
  if (g.fe) {
    if (g.fe->space.max_depth() != space.max_depth()) throw std::invalid_argument("load not representable");
    carrier = superspace(space, g.fe->space);
    gf = prolong(*g.fe, carrier);
  }
  for (std::size_t e = 0; e < carrier.num_elements(); ++e) {
    const double xl = carrier.vertex(e), xr = carrier.vertex(e + 1), h = xr - xl;
    const std::size_t k = space.element_of(0.5 * (xl + xr));
    if (!g.remainder) {
      const double a = gf->at_vertex(e), b = gf->at_vertex(e + 1);
      sq[k] += h * (a * a + a * b + b * b) / 3.0;
    } else {
      sq[k] += integrate(
          [&](double x) {
            const double v = (gf ? (*gf)(x) : 0.0) + g.remainder(x);
            return v * v;
          },
          xl, xr, points);
    }
  }
  for (double& v : sq) v = std::sqrt(v);
  return sq;
}

struct ElementIndicator {
  double eta = 0.0;         // X-type local indicator
  double h_weighted = 0.0;  // h_K^2 ||g||_K / (pi^2 a_K), meaningful on smooth elements
  bool breakpoint = false;  // coefficient jumps inside K
};

inline std::vector<ElementIndicator> element_indicators(const PiecewiseConstant& a, const FeFunction& wh, const Load& g)
{
  const auto& s = wh.space;
  const auto gn = element_load_norms(s, g);
  constexpr double pi = std::numbers::pi;
  std::vector<ElementIndicator> out(s.num_elements());
  for (std::size_t k = 0; k < s.num_elements(); ++k) {
    const double xl = s.vertex(k), xr = s.vertex(k + 1), h = xr - xl;
    auto& ind = out[k];
    ind.eta = h / pi * gn[k];
    const auto bps = a.breakpoints_in(xl, xr);
    ind.breakpoint = !bps.empty();
    const double slope = wh.slope(k);
    for (double b : bps) ind.eta += std::abs(slope * (a(b) - a.left_of(b))) * std::sqrt((b - xl) * (xr - b) / h);
    if (!ind.breakpoint) ind.h_weighted = h * h * gn[k] / (pi * pi * a(0.5 * (xl + xr)));
  }
  return out;
}

/// E_{Z,V}[w_h, g] for the residual estimator.
inline double elliptic_estimate(const EllipticEstimatorKind& kind, const EllipticConstants& c, const PiecewiseConstant& a,
                                const FeFunction& wh, const Load& g)
{
  if (kind.variant != "residual") throw std::invalid_argument("unknown estimator variant '" + kind.variant + "'");
  const auto ind = element_indicators(a, wh, g);
  if (kind.norm == NormTag::X) {
    double s = 0.0;
    for (const auto& e : ind) s += e.eta * e.eta;
    return std::sqrt(s) / c.alpha_flat;
  }
  double smooth = 0.0, rough = 0.0;
  for (const auto& e : ind) {
    if (e.breakpoint)
      rough += e.eta * e.eta;
    else
      smooth += e.h_weighted * e.h_weighted;
  }
  const double h = std::sqrt(smooth) + c.c_pf_pivot_x / c.alpha_flat * std::sqrt(rough);
  return kind.norm == NormTag::H ? h : c.c_pf_dual_pivot * h;
}

inline double elliptic_estimate(NormTag norm, const EllipticConstants& c, const PiecewiseConstant& a, const FeFunction& wh,
                                const Load& g)
{
  return elliptic_estimate(EllipticEstimatorKind{norm, "residual"}, c, a, wh, g);
}

/// ||v||_{X'}^2 <= alpha_sharp^2 E_X[Psi, v]^2 + alpha_sharp (A_V Psi, Psi),  Psi = A_V^{-1} P_V v.
struct DualNormBound {
  double value = 0.0;
  double energy = 0.0;     // (A_V Psi, Psi)
  double estimator = 0.0;  // E_X[Psi, v]
};

inline DualNormBound dual_norm_bound(const Discretization& disc, const EllipticConstants& c, const FeSpace& space, const FeFunction& v)
{
  DualNormBound out;
  if (space.dim() == 0) {
    out.estimator = elliptic_estimate(NormTag::X, c, disc.coefficient(), FeFunction(space), Load(v));
  } else {
    const auto b = load_vector(disc, space, v);
    const FeFunction psi(space, disc.ops(space).stiffness_solve(b));
    for (std::size_t j = 0; j < b.size(); ++j) out.energy += b[j] * psi.values[j];
    out.estimator = elliptic_estimate(NormTag::X, c, disc.coefficient(), psi, Load(v));
  }
  out.value = std::sqrt(std::max(0.0, c.alpha_sharp * c.alpha_sharp * out.estimator * out.estimator + c.alpha_sharp * out.energy));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Slab quantities of a dG solution

/// U(t_{n-1}^-) and the discrete elliptic operator applied to it; n = 1 uses P_0 u_0 on V_0.
inline FeFunction left_state(const DgSolution& sol, std::size_t n) { return sol.u.left_limit(n - 1); }

/// [[A U]]_{n-1} = A_n U(t_{n-1}^+) - A_{n-1} U(t_{n-1}^-) on the overlay of V_{n-1} and V_n.
inline FeFunction discrete_elliptic_jump(const Discretization& disc, const DgSolution& sol, std::size_t n)
{
  return discrete_elliptic_apply(disc, sol.slab(n).left()) - discrete_elliptic_apply(disc, left_state(sol, n));
}

enum class ThetaMode { Super, Pf };

inline const char* to_string(ThetaMode m) { return m == ThetaMode::Super ? "super" : "pf"; }

/// theta_n, bounding the L2(I_n; X') norm of A applied to the time-reconstruction error of omega.
inline double theta_indicator(const Discretization& disc, const EllipticConstants& c, const DgSolution& sol, std::size_t n,
                              ThetaMode mode)
{
  const double C = reconstruction_constant(sol.partition.tau(n), sol.partition.degree(n));
  const auto v = discrete_elliptic_jump(disc, sol, n);
  if (mode == ThetaMode::Pf) return C * c.c_pf_dual_pivot * l2_norm(disc, v);

  const FeSpace& plus = v.space;
  double energy = 0.0;
  FeFunction psi(plus);
  if (sol.space(n - 1) == sol.space(n)) {
    // A_n [[U]] = [[A U]] on a fixed mesh
    psi = jump(sol, n - 1);
    energy = l2_inner(disc, v, psi);
  } else if (plus.dim() > 0) {
    const auto b = load_vector(disc, plus, v);
    psi = FeFunction(plus, disc.ops(plus).stiffness_solve(b));
    for (std::size_t j = 0; j < b.size(); ++j) energy += b[j] * psi.values[j];
  }
  const double est = elliptic_estimate(NormTag::X, c, disc.coefficient(), psi, Load(v));
  const double sq = c.alpha_sharp * C * C * std::max(0.0, energy) + c.alpha_sharp * c.alpha_sharp * C * C * est * est;
  return std::sqrt(std::max(0.0, sq));
}

/// Slab polynomials entering the space indicator:
///   g = A_n U' + chi_n([[A U]]) on V+,  w = pi-(U' + chi_n([[U]])) on V-.
struct SpaceIndicatorData {
  SlabPolynomial load;
  SlabPolynomial ritz;
};

inline SpaceIndicatorData space_indicator_data(const Discretization& disc, const DgSolution& sol, std::size_t n)
{
  const auto& u = sol.slab(n);
  const int r = u.degree();
  const FeSpace plus = superspace(sol.space(n - 1), sol.space(n));
  const FeSpace minus = subspace(sol.space(n - 1), sol.space(n));
  const auto du = u.derivative_poly();
  const auto chi_u = lift(jump(sol, n - 1), u.t0, u.t1, r);
  const auto chi_au = lift(discrete_elliptic_jump(disc, sol, n), u.t0, u.t1, r);

  SpaceIndicatorData d{SlabPolynomial(u.t0, u.t1, plus, r), SlabPolynomial(u.t0, u.t1, minus, r)};
  for (int i = 0; i <= r; ++i) {
    const FeFunction dui = i <= du.degree() ? du.modes[i] : FeFunction(u.space());
    d.load.modes[i] = prolong(discrete_elliptic_apply(disc, dui), plus) + prolong(chi_au.modes[i], plus);
    d.ritz.modes[i] = ritz_project(disc, minus, prolong(dui, plus) + prolong(chi_u.modes[i], plus));
  }
  return d;
}

/// Space indicator at time t of slab n (X'-norm variant of E on V-).
inline double space_indicator(const Discretization& disc, const EllipticConstants& c, const SpaceIndicatorData& d, double t)
{
  return elliptic_estimate(NormTag::XDual, c, disc.coefficient(), d.ritz.value(t), Load(d.load.value(t)));
}

inline double space_indicator(const Discretization& disc, const EllipticConstants& c, const DgSolution& sol, std::size_t n, double t)
{
  return space_indicator(disc, c, space_indicator_data(disc, sol, n), t);
}

/// int_{I_n} (space indicator)^2 with 2r+3 Gauss points.
inline double space_indicator_l2(const Discretization& disc, const EllipticConstants& c, const DgSolution& sol, std::size_t n)
{
  const auto d = space_indicator_data(disc, sol, n);
  const auto& u = sol.slab(n);
  return integrate(
      [&](double t) {
        const double s = space_indicator(disc, c, d, t);
        return s * s;
      },
      u.t0, u.t1, 2 * u.degree() + 3);
}

struct MeshChangeIndicator {
  FeFunction jump;       // U(t_{n-1}^-) - P_n U(t_{n-1}^-)
  double l2t = 0.0;      // int eta^2 = (r+1)^2 / tau ||jump||^2
  double l1t = 0.0;      // int eta = ||jump|| int_0^1 |kappa_r|
  int degree = 0;
  double tau = 1.0;

  /// eta_n(t) = ||chi_n(jump)(t)||_H
  double profile(const Discretization& disc, double s) const
  {
    return l2_norm(disc, jump) * std::abs(LiftingKernel::of(degree)(s)) / tau;
  }
};

inline MeshChangeIndicator mesh_change_indicator(const Discretization& disc, const DgSolution& sol, std::size_t n)
{
  MeshChangeIndicator m;
  m.degree = sol.partition.degree(n);
  m.tau = sol.partition.tau(n);
  const auto prev = left_state(sol, n);
  const FeSpace plus = superspace(prev.space, sol.space(n));
  m.jump = prolong(prev, plus) - prolong(l2_project(disc, sol.space(n), prev), plus);
  const double w = l2_norm(disc, m.jump);
  m.l2t = (m.degree + 1.0) * (m.degree + 1.0) / m.tau * w * w;
  m.l1t = w * LiftingKernel::of(m.degree).abs_integral();
  return m;
}

/// ||l||_{X'} for l = q + sum_p w_p delta_p on (0,1) under ||v||_X = ||v'||: with G(x) = l((0,x)),
/// ||l||_{X'} = ||G - mean G||.
inline double exact_dual_norm(const Function1& q, const std::vector<std::pair<double, double>>& points,
                              const std::vector<double>& cuts, int per_piece = 8)
{
  std::vector<double> grid{0.0, 1.0};
  grid.insert(grid.end(), cuts.begin(), cuts.end());
  for (const auto& p : points) grid.push_back(p.first);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto& rule = gauss_rule(per_piece);
  double G0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double xl = grid[i], xr = grid[i + 1], h = xr - xl;
    for (const auto& p : points)
      if (p.first == xl) G0 += p.second;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double x = xl + 0.5 * h * (1.0 + rule.nodes[k]);
      const double G = G0 + integrate(q, xl, x, per_piece);
      const double w = 0.5 * h * rule.weights[k];
      m1 += w * G;
      m2 += w * G * G;
    }
    G0 += integrate(q, xl, xr, per_piece);
  }
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

/// int_{I_n} ||f - Pi_n f||_{X'}^2 with the exact 1D dual norm (r+6 points in time, 8 per element piece).
inline double oscillation_indicator(const Discretization& disc, const EllipticConstants&, const Problem& problem,
                                    const DgSolution& sol, std::size_t n)
{
  const auto& pi_f = sol.source_projection.at(n - 1);
  const auto& s = pi_f.space();
  const auto& a = disc.coefficient();
  std::vector<double> cuts;
  for (std::size_t i = 1; i + 1 < s.num_vertices(); ++i) cuts.push_back(s.vertex(i));
  cuts.insert(cuts.end(), a.breakpoints().begin(), a.breakpoints().end());
  return integrate(
      [&](double t) {
        const auto pf = pi_f.value(t);
        auto diff = [&](double x) { return (problem.source ? problem.source(x, t) : 0.0) - pf(x); };
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : problem.point_loads) pts.emplace_back(p.x, p.weight(t));
        const double d = exact_dual_norm(diff, pts, cuts);
        return d * d;
      },
      pi_f.t0, pi_f.t1, pi_f.degree() + 6);
}

/// int_{I_n} E_X[U, A_n U]^2 with 2r+4 Gauss points.
inline double elliptic_x_l2(const Discretization& disc, const EllipticConstants& c, const DgSolution& sol, std::size_t n)
{
  const auto& u = sol.slab(n);
  return integrate(
      [&](double t) {
        const auto ut = u.value(t);
        const double e = elliptic_estimate(NormTag::X, c, disc.coefficient(), ut, Load(discrete_elliptic_apply(disc, ut)));
        return e * e;
      },
      u.t0, u.t1, 2 * u.degree() + 4);
}

/// E_H[U(t), A_n U(t)].
inline double elliptic_h_at(const Discretization& disc, const EllipticConstants& c, const SlabPolynomial& u, double t)
{
  const auto ut = u.value(t);
  return elliptic_estimate(NormTag::H, c, disc.coefficient(), ut, Load(discrete_elliptic_apply(disc, ut)));
}

/// sup over the slab of E_H[U, A_n U]: sampling followed by golden-section refinement.
inline double elliptic_h_sup(const Discretization& disc, const EllipticConstants& c, const SlabPolynomial& u, int samples = 64)
{
  double best = -1.0, tbest = u.t0;
  for (int k = 0; k <= samples; ++k) {
    const double t = u.t0 + u.tau() * k / samples;
    const double v = elliptic_h_at(disc, c, u, t);
    if (v > best) best = v, tbest = t;
  }
  double lo = std::max(u.t0, tbest - u.tau() / samples), hi = std::min(u.t1, tbest + u.tau() / samples);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = elliptic_h_at(disc, c, u, x1), f2 = elliptic_h_at(disc, c, u, x2);
  for (int it = 0; it < 40; ++it) {
    if (f1 > f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - g * (hi - lo), f1 = elliptic_h_at(disc, c, u, x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + g * (hi - lo), f2 = elliptic_h_at(disc, c, u, x2);
    }
  }
  return std::max({best, f1, f2});
}

/// E_H[pi-[[U]], [[A U]]] + ||[[U]]||, the jump part of the Linf(H) bound at node n-1.
inline double linf_jump_term(const Discretization& disc, const EllipticConstants& c, const DgSolution& sol, std::size_t n)
{
  const auto ju = jump(sol, n - 1);
  const auto jau = discrete_elliptic_jump(disc, sol, n);
  const FeSpace minus = subspace(sol.space(n - 1), sol.space(n));
  const auto wh = ritz_project(disc, minus, ju);
  return elliptic_estimate(NormTag::H, c, disc.coefficient(), wh, Load(jau)) + l2_norm(disc, ju);
}

/// Initial term (||u0 - P_0 u0|| + E_H[P_0 u0, A_0 P_0 u0])^2: the time error at t = 0 with the
/// convention omega(0^-) = A^{-1} A_0 P_0 u0.
struct InitialTerm {
  double projection_error = 0.0;  // ||u0 - P_0 u0||
  double reconstruction = 0.0;    // E_H[P_0 u0, A_0 P_0 u0]
  double value() const { return (projection_error + reconstruction) * (projection_error + reconstruction); }
};

inline InitialTerm initial_term(const Discretization& disc, const EllipticConstants& c, const Problem& problem, const DgSolution& sol)
{
  InitialTerm it;
  const auto& p0 = sol.u0_projection();
  const auto& s = p0.space;
  double sq = 0.0;
  for (std::size_t k = 0; k < s.num_elements(); ++k)
    sq += integrate_element(
        s, k, disc.coefficient(),
        [&](double x) {
          const double d = problem.initial(x) - p0(x);
          return d * d;
        },
        12);
  it.projection_error = std::sqrt(sq);
  it.reconstruction = elliptic_estimate(NormTag::H, c, disc.coefficient(), p0, Load(discrete_elliptic_apply(disc, p0)));
  return it;
}

struct SlabIndicators {
  std::size_t n = 0;
  double t = 0.0, tau = 0.0;
  int degree = 0;
  double theta = 0.0;            // in the selected mode
  double theta_super = 0.0;
  double theta_pf = 0.0;
  double space_l2t = 0.0;        // int S^2
  double mesh_change_l2t = 0.0;  // int eta^2
  double mesh_change_l1t = 0.0;  // int eta
  double osc_l2t = 0.0;          // int osc^2
  double elliptic_x_l2t = 0.0;   // int E_X[U, A U]^2
  double linf_jump = 0.0;        // E_H[pi-[[U]], [[AU]]] + ||[[U]]||
  double linf_elliptic = 0.0;    // sup_t E_H[U, A U]
  std::size_t dim = 0, dim_plus = 0, dim_minus = 0;
};

struct IndicatorBreakdown {
  std::vector<SlabIndicators> slabs;
  InitialTerm initial;
  ThetaMode theta_mode = ThetaMode::Super;
};

inline IndicatorBreakdown compute_breakdown(const Discretization& disc, const EllipticConstants& c, const Problem& problem,
                                            const DgSolution& sol, ThetaMode mode = ThetaMode::Super)
{
  IndicatorBreakdown b;
  b.theta_mode = mode;
  b.initial = initial_term(disc, c, problem, sol);
  for (std::size_t n = 1; n <= sol.num_slabs(); ++n) {
    SlabIndicators s;
    s.n = n;
    s.t = sol.partition.node(n);
    s.tau = sol.partition.tau(n);
    s.degree = sol.partition.degree(n);
    s.theta_super = theta_indicator(disc, c, sol, n, ThetaMode::Super);
    s.theta_pf = theta_indicator(disc, c, sol, n, ThetaMode::Pf);
    s.theta = mode == ThetaMode::Super ? s.theta_super : s.theta_pf;
    s.space_l2t = space_indicator_l2(disc, c, sol, n);
    const auto m = mesh_change_indicator(disc, sol, n);
    s.mesh_change_l2t = m.l2t;
    s.mesh_change_l1t = m.l1t;
    s.osc_l2t = oscillation_indicator(disc, c, problem, sol, n);
    s.elliptic_x_l2t = elliptic_x_l2(disc, c, sol, n);
    s.linf_jump = linf_jump_term(disc, c, sol, n);
    s.linf_elliptic = elliptic_h_sup(disc, c, sol.slab(n));
    s.dim = sol.space(n).dim();
    s.dim_plus = superspace(sol.space(n - 1), sol.space(n)).dim();
    s.dim_minus = subspace(sol.space(n - 1), sol.space(n)).dim();
    b.slabs.push_back(s);
  }
  return b;
}

}  // namespace dgcg
