#pragma once

/// \file verify.hpp
/// Oracles: true errors against a manufactured solution, fine-space dual norms, and consistency
/// checks of the pointwise form of the scheme on a refined reference space.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgcg/bounds.hpp"
#include "dgcg/estimators.hpp"
#include "dgcg/problem.hpp"
#include "dgcg/reconstruction.hpp"
#include "dgcg/spatial_fem.hpp"
#include "dgcg/time_dg.hpp"

namespace dgcg {

struct OracleSettings {
  int reference_depth = 4;     // levels added to a mesh for reference computations
  int space_points = 12;       // Gauss points per element piece for true errors
  int extra_time_points = 4;   // r + extra Gauss points per slab
  int linf_samples = 30;       // interior samples per slab for Linf errors
};

namespace detail {

/// Cut points where u or U may kink: mesh vertices, coefficient breakpoints and solution kinks.
inline std::vector<double> error_grid(const FeSpace& s, const Problem& p)
{
  std::vector<double> g;
  for (std::size_t i = 0; i < s.num_vertices(); ++i) g.push_back(s.vertex(i));
  const auto& bp = p.coefficient.breakpoints();
  g.insert(g.end(), bp.begin(), bp.end());
  if (p.manufactured) g.insert(g.end(), p.manufactured->kinks.begin(), p.manufactured->kinks.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

template <class F>
double integrate_pieces(const std::vector<double>& grid, F&& fn, int points)
{
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) s += integrate(fn, grid[i], grid[i + 1], points);
  return s;
}

inline const ManufacturedSolution& exact_of(const Problem& p)
{
  if (!p.manufactured) throw std::invalid_argument("no exact solution configured");
  return *p.manufactured;
}

}  // namespace detail

/// ||u(t) - w||_{L2} and ||(u(t) - w)'|| for an FE function w.
inline double h_error_at(const Problem& p, const FeFunction& w, double t, int points = 12)
{
  const auto& u = detail::exact_of(p);
  const auto grid = detail::error_grid(w.space, p);
  return std::sqrt(detail::integrate_pieces(
      grid,
      [&](double x) {
        const double d = u.u(x, t) - w(x);
        return d * d;
      },
      points));
}

inline double x_error_at(const Problem& p, const FeFunction& w, double t, int points = 12)
{
  const auto& u = detail::exact_of(p);
  const auto grid = detail::error_grid(w.space, p);
  return std::sqrt(detail::integrate_pieces(
      grid,
      [&](double x) {
        const std::size_t k = w.space.element_of(x);
        const double d = u.du_dx(x, t) - w.slope(k);
        return d * d;
      },
      points));
}

/// int_{I_j} ||(u - U)'||^2.
inline double true_error_l2x_slab(const DgSolution& sol, const Problem& p, std::size_t j, const OracleSettings& o = {})
{
  const auto& u = sol.slab(j);
  return integrate(
      [&](double t) {
        const double e = x_error_at(p, u.value(t), t, o.space_points);
        return e * e;
      },
      u.t0, u.t1, u.degree() + o.extra_time_points);
}

/// max of ||u - U|| over both one-sided slab ends and interior samples of I_j.
inline double true_error_linfh_slab(const DgSolution& sol, const Problem& p, std::size_t j, const OracleSettings& o = {})
{
  const auto& u = sol.slab(j);
  double m = std::max(h_error_at(p, u.left(), u.t0, o.space_points), h_error_at(p, u.right(), u.t1, o.space_points));
  for (int k = 1; k <= o.linf_samples; ++k) {
    const double t = u.t0 + u.tau() * k / (o.linf_samples + 1.0);
    m = std::max(m, h_error_at(p, u.value(t), t, o.space_points));
  }
  return m;
}

/// int_{I_j} ||d/dt (u - U) - chi_j([[U]])||_{X'}^2 with the exact 1D dual norm.
inline double true_error_h1xdual_slab(const DgSolution& sol, const Problem& p, std::size_t j, const OracleSettings& o = {})
{
  const auto& ex = detail::exact_of(p);
  const auto& u = sol.slab(j);
  const auto chi = lift(jump(sol, j - 1), u.t0, u.t1, u.degree());
  const auto grid = detail::error_grid(chi.space(), p);
  const std::vector<double> cuts(grid.begin() + 1, grid.end() - 1);
  return integrate(
      [&](double t) {
        const auto du = u.derivative(t);
        const auto ch = chi.value(t);
        const double d = exact_dual_norm([&](double x) { return ex.du_dt(x, t) - du(x) - ch(x); }, {}, cuts, 6);
        return d * d;
      },
      u.t0, u.t1, u.degree() + o.extra_time_points);
}

/// ||u - U||_{L2(0,t_n;X)}.
inline double true_error_l2x(const DgSolution& sol, const Problem& p, std::size_t n, const OracleSettings& o = {})
{
  double s = 0.0;
  for (std::size_t j = 1; j <= n; ++j) s += true_error_l2x_slab(sol, p, j, o);
  return std::sqrt(s);
}

/// ||u - U||_{Linf(0,t_n;H)}, including t = 0 against P_0 u0.
inline double true_error_linfh(const DgSolution& sol, const Problem& p, std::size_t n, const OracleSettings& o = {})
{
  double m = h_error_at(p, sol.u0_projection(), 0.0, o.space_points);
  for (std::size_t j = 1; j <= n; ++j) m = std::max(m, true_error_linfh_slab(sol, p, j, o));
  return m;
}

/// Broken seminorm (sum_j int ||d/dt (u - U) - chi_j([[U]])||_{X'}^2)^{1/2}.
inline double true_error_h1xdual(const DgSolution& sol, const Problem& p, std::size_t n, const OracleSettings& o = {})
{
  double s = 0.0;
  for (std::size_t j = 1; j <= n; ++j) s += true_error_h1xdual_slab(sol, p, j, o);
  return std::sqrt(s);
}

/// ||v||_{X'} from below: Riesz representer in the depth-refined space under ||w||_X = ||w'||.
/// Nondecreasing in depth.
inline double dual_norm_oracle(const Discretization& disc, const FeFunction& v, int depth)
{
  const auto fine = refine(v.space, depth);
  if (fine.dim() == 0) return 0.0;
  const auto b = load_vector(disc, fine, v);
  const auto psi = disc.ops(fine).laplace_solve(b);
  double s = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * psi[j];
  return std::sqrt(std::max(0.0, s));
}

/// ||w||_{X'} of a functional given by its action on the basis of `space` (exact on that space).
inline double discrete_dual_norm(const Discretization& disc, const FeSpace& space, const std::vector<double>& action)
{
  if (space.dim() == 0) return 0.0;
  const auto psi = disc.ops(space).laplace_solve(action);
  double s = 0.0;
  for (std::size_t j = 0; j < action.size(); ++j) s += action[j] * psi[j];
  return std::sqrt(std::max(0.0, s));
}

/// (int_{I_n} ||A(W - omega)||_{X'}^2)^{1/2} = C(tau, r) ||[[A U]]||_{X'} through the Riesz oracle.
inline double theta_oracle(const Discretization& disc, const DgSolution& sol, std::size_t n, int depth = 4)
{
  const double C = reconstruction_constant(sol.partition.tau(n), sol.partition.degree(n));
  return C * dual_norm_oracle(disc, discrete_elliptic_jump(disc, sol, n), depth);
}

/// Reference elliptic reconstructions around slab n on R = refine(V+_n, depth).
struct ReferenceSlab {
  FeSpace ref;
  SlabPolynomial omega;   // omega on I_n
  FeFunction omega_left;  // omega(t_{n-1}^-); for n = 1 the reconstruction of P_0 u0
};

inline ReferenceSlab reference_slab(const Discretization& disc, const DgSolution& sol, std::size_t n, int depth)
{
  ReferenceSlab r;
  r.ref = refine(superspace(sol.space(n - 1), sol.space(n)), depth);
  r.omega = elliptic_reconstruct_reference(disc, sol.slab(n), r.ref);
  r.omega_left = elliptic_reconstruct_reference(disc, sol.u.left_limit(n - 1), r.ref);
  return r;
}

/// ||omega' + chi([[omega]]) - U' - chi([[U]])||_{X'} at time t, measured on the reference space;
/// the space indicator bounds it.
inline double space_indicator_oracle(const Discretization& disc, const DgSolution& sol, std::size_t n, double t, int depth = 4)
{
  const auto rs = reference_slab(disc, sol, n, depth);
  const auto& u = sol.slab(n);
  const int r = u.degree();
  const auto chi_w = lift(rs.omega.left() - rs.omega_left, u.t0, u.t1, r).value(t);
  const auto chi_u = lift(jump(sol, n - 1), u.t0, u.t1, r).value(t);
  const auto d = rs.omega.derivative(t) + chi_w - prolong(u.derivative(t), rs.ref) - prolong(chi_u, rs.ref);
  return discrete_dual_norm(disc, rs.ref, load_vector(disc, rs.ref, d));
}

struct PointwiseCheck {
  double form_gap = 0.0;      // L2(I_n; X') residual of the pointwise form on the reference space
  double identity_gap = 0.0;  // L2(I_n; L2) gap of the time-derivative/space-projection identity
};

/// Checks, on the reference space R, the pointwise form
///   W' + A W = Pi f + P(omega' - U') + W' - P W' + chi(P[[omega - U]]) + A(W - omega)
/// with W the time reconstruction of omega and P the L2 projection onto V_n, and the identity
///   P(omega' - U') + W' - P W' + chi(P[[omega - U]]) = (omega' - U') + chi([[omega - U]]) + chi([[U - P U]]).
inline PointwiseCheck pointwise_form_check(const Discretization& disc, const DgSolution& sol, std::size_t n, int depth = 4)
{
  const auto rs = reference_slab(disc, sol, n, depth);
  const FeSpace& R = rs.ref;
  const FeSpace& V = sol.space(n);
  const auto& u = sol.slab(n);
  const int r = u.degree();
  const auto& opsR = disc.ops(R);

  SpaceTimeFunction omega;
  omega.initial = rs.omega_left;
  omega.slabs.push_back(rs.omega);
  const auto W = time_reconstruct(omega).slab(1);

  auto P = [&](const FeFunction& f) { return prolong(l2_project(disc, V, f), R); };
  auto onR = [&](const FeFunction& f) { return prolong(f, R); };

  const auto jump_omega_minus_u = (rs.omega.left() - rs.omega_left) - onR(jump(sol, n - 1));
  const auto left_u = sol.u.left_limit(n - 1);
  const auto jump_u_minus_pu = onR(l2_project(disc, V, left_u)) - onR(left_u);  // [[U - P U]] = -(U^- - P U^-)
  const auto chi_p_jump = lift(P(jump_omega_minus_u), u.t0, u.t1, r);
  const auto chi_jump = lift(jump_omega_minus_u, u.t0, u.t1, r);
  const auto chi_mesh = lift(jump_u_minus_pu, u.t0, u.t1, r);
  const auto& pif = sol.source_projection.at(n - 1);

  PointwiseCheck out;
  const auto& rule = gauss_rule(r + 4);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double t = 0.5 * (u.t0 + u.t1) + 0.5 * u.tau() * rule.nodes[q];
    const double w = 0.5 * u.tau() * rule.weights[q];
    const auto dW = W.derivative(t);
    const auto d_omega_minus_u = rs.omega.derivative(t) - onR(u.derivative(t));
    const auto lhs_identity = P(d_omega_minus_u) + dW - P(dW) + chi_p_jump.value(t);
    const auto rhs_identity = d_omega_minus_u + chi_jump.value(t) + chi_mesh.value(t);
    const double ig = l2_norm(disc, lhs_identity - rhs_identity);
    out.identity_gap += w * ig * ig;

    // residual functional on R: (W', v) + a(W, v) - (Pi f + identity-lhs, v) - a(W - omega, v)
    const auto Wt = W.value(t);
    auto res = load_vector(disc, R, dW - onR(pif.value(t)) - lhs_identity);
    const auto kw = opsR.stiffness_apply(Wt.values);
    const auto kd = opsR.stiffness_apply((Wt - rs.omega.value(t)).values);
    for (std::size_t j = 0; j < res.size(); ++j) res[j] += kw[j] - kd[j];
    const double fg = discrete_dual_norm(disc, R, res);
    out.form_gap += w * fg * fg;
  }
  out.form_gap = std::sqrt(out.form_gap);
  out.identity_gap = std::sqrt(out.identity_gap);
  return out;
}

/// Galerkin-orthogonality residual of slab n: max over L_k phi_j of
///   |int_I [(U', v) + a(U, v)] + ([[U]], v(t+)) - int_I <f, v>|, relative to the load scale.
inline double slab_residual(const Discretization& disc, const Problem& p, const DgSolution& sol, std::size_t n)
{
  const auto& u = sol.slab(n);
  const auto& s = u.space();
  if (s.dim() == 0) return 0.0;
  const auto& ops = disc.ops(s);
  const auto load = slab_load(p, s, u.t0, u.t1, u.degree());
  const auto jl = load_vector(disc, s, jump(sol, n - 1));
  const auto& rule = gauss_rule(u.degree() + 2);
  double worst = 0.0, scale = 1e-300;
  for (int k = 0; k <= u.degree(); ++k) {
    std::vector<double> res(s.dim(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double t = 0.5 * (u.t0 + u.t1) + 0.5 * u.tau() * rule.nodes[q], w = 0.5 * u.tau() * rule.weights[q];
      const auto mu = ops.mass_apply(u.derivative(t).values);
      const auto ku = ops.stiffness_apply(u.value(t).values);
      const double lk = legendre::value(k, rule.nodes[q]);
      for (std::size_t j = 0; j < s.dim(); ++j) res[j] += w * lk * (mu[j] + ku[j]);
    }
    for (std::size_t j = 0; j < s.dim(); ++j) {
      const double total = res[j] + legendre::at_left(k) * jl[j] - load[k][j];
      worst = std::max(worst, std::abs(total));
      scale = std::max({scale, std::abs(res[j]), std::abs(load[k][j]), std::abs(jl[j])});
    }
  }
  return worst / std::max(scale, 1.0);
}

struct ErrorReport {
  std::size_t horizon_index = 0;
  double horizon = 0.0;
  double true_l2x = 0.0, true_linfh = 0.0, true_h1xdual = 0.0;
  CertifiedBound l2x, linfh, h1xdual;

  double effectivity_l2x() const { return true_l2x > 0 ? l2x.value / true_l2x : 0.0; }
  double effectivity_linfh() const { return true_linfh > 0 ? linfh.value / true_linfh : 0.0; }
  double effectivity_h1xdual() const { return true_h1xdual > 0 ? h1xdual.value / true_h1xdual : 0.0; }
};

/// Bounds at horizon t_n, with true errors when an exact solution is configured. lambda < 0 selects
/// min(1, 1/t_n).
inline ErrorReport error_report(const Discretization&, const EllipticConstants& c, const Problem& p, const DgSolution& sol,
                                const IndicatorBreakdown& b, std::size_t n, double lambda = -1.0, const OracleSettings& o = {})
{
  ErrorReport r;
  r.horizon_index = n;
  r.horizon = sol.partition.node(n);
  const double lam = lambda < 0 ? choose_lambda(r.horizon) : lambda;
  r.l2x = assemble_l2x_bound(b, c, lam, n);
  r.linfh = assemble_linfh_bound(b, c, lam, n);
  r.h1xdual = assemble_h1xdual_bound(b, c, rho_l2x_bound(b, c, lam, n), n);
  if (p.manufactured) {
    r.true_l2x = true_error_l2x(sol, p, n, o);
    r.true_linfh = true_error_linfh(sol, p, n, o);
    r.true_h1xdual = true_error_h1xdual(sol, p, n, o);
  }
  return r;
}

}  // namespace dgcg
