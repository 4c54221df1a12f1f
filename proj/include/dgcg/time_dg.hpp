#pragma once

/// \file time_dg.hpp
/// Time partitions, slab-wise Legendre expansions and the dG(r)-in-time / P1-in-space solver.
///
/// On a slab I_n = (t_{n-1}, t_n] a discrete function is sum_i L_i(t) w_i with L_i the Legendre
/// polynomial P_i mapped to I_n and w_i an FE function on the slab space. Slabs are numbered
/// n = 1..N, time nodes 0..N, as in the usual dG notation; jumps live at nodes 0..N-1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgcg/problem.hpp"
#include "dgcg/quadrature.hpp"
#include "dgcg/spatial_fem.hpp"

namespace dgcg {

constexpr int max_time_degree = 10;

class TimePartition {
public:
  TimePartition() = default;
  TimePartition(std::vector<double> nodes, std::vector<int> degrees) : nodes_(std::move(nodes)), degrees_(std::move(degrees))
  {
    if (nodes_.size() < 2) throw std::invalid_argument("time partition needs at least one slab");
    if (degrees_.size() != nodes_.size() - 1) throw std::invalid_argument("time partition: one degree per slab");
    if (nodes_.front() != 0.0) throw std::invalid_argument("time partition must start at 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i] > nodes_[i - 1])) throw std::invalid_argument("time nodes must be strictly increasing");
    for (int r : degrees_)
      if (r < 0 || r > max_time_degree)
        throw std::invalid_argument("time degree " + std::to_string(r) + " outside [0," + std::to_string(max_time_degree) + "]");
  }

  static TimePartition uniform(double final_time, int slabs, int degree)
  {
    if (slabs < 1) throw std::invalid_argument("need at least one slab");
    std::vector<double> t(slabs + 1);
    for (int n = 0; n <= slabs; ++n) t[n] = final_time * n / slabs;
    t[slabs] = final_time;
    return {t, std::vector<int>(slabs, degree)};
  }

  /// Geometric grading towards t = 0: t_n = T sigma^{N-n}; degrees r_n = floor(slope * n), capped.
  static TimePartition geometric(double final_time, double sigma, int slabs, double slope, int base_degree = 0)
  {
    if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("grading factor must lie in (0,1)");
    if (slabs < 1) throw std::invalid_argument("need at least one slab");
    std::vector<double> t(slabs + 1, 0.0);
    std::vector<int> r(slabs);
    for (int n = 1; n <= slabs; ++n) {
      t[n] = final_time * std::pow(sigma, slabs - n);
      r[n - 1] = std::min(max_time_degree, base_degree + static_cast<int>(std::floor(slope * n)));
    }
    return {t, r};
  }

  std::size_t num_slabs() const { return degrees_.size(); }
  double final_time() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<int>& degrees() const { return degrees_; }

  double node(std::size_t n) const { return nodes_.at(n); }
  /// Slab accessors, n = 1..N.
  double tau(std::size_t n) const { return nodes_.at(n) - nodes_.at(n - 1); }
  int degree(std::size_t n) const { return degrees_.at(n - 1); }

  /// Slab containing t (left-open slabs, t = 0 maps to slab 1).
  std::size_t slab_of(double t) const
  {
    auto it = std::lower_bound(nodes_.begin() + 1, nodes_.end(), t);
    if (it == nodes_.end()) --it;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

private:
  std::vector<double> nodes_{0.0, 1.0};
  std::vector<int> degrees_{0};
};

/// Temporal matrices of one slab in the Legendre basis.
struct SlabBasis {
  int degree = 0;
  double tau = 1.0;

  /// int_I L_i L_k = tau/(2k+1) delta_ik
  double mass(int k) const { return tau / (2 * k + 1); }
  /// int_I L_i' L_k: 2 when k < i and i+k odd
  static double derivative(int k, int i) { return (k < i && (i + k) % 2 == 1) ? 2.0 : 0.0; }
  /// derivative plus the upwind jump pairing L_i(t0+) L_k(t0+)
  static double transport(int k, int i) { return derivative(k, i) + legendre::at_left(i) * legendre::at_left(k); }

  /// Number of Gauss points used for the source integrals.
  int source_points() const { return degree + 3; }
};

/// Map t in [t0,t1] to xi in [-1,1].
inline double to_reference(double t, double t0, double t1) { return (2.0 * t - t0 - t1) / (t1 - t0); }

/// Polynomial in time with FE-function coefficients on one slab.
struct SlabPolynomial {
  double t0 = 0.0, t1 = 1.0;
  std::vector<FeFunction> modes;  // Legendre modes 0..degree, all on one space

  SlabPolynomial() = default;
  SlabPolynomial(double a, double b, const FeSpace& space, int degree) : t0(a), t1(b), modes(degree + 1, FeFunction(space)) {}

  int degree() const { return static_cast<int>(modes.size()) - 1; }
  double tau() const { return t1 - t0; }
  const FeSpace& space() const { return modes.front().space; }
  std::size_t dim() const { return space().dim(); }

  FeFunction value(double t) const
  {
    std::vector<double> p(modes.size());
    legendre::values(degree(), to_reference(t, t0, t1), p.data());
    return weighted(p);
  }

  FeFunction derivative(double t) const
  {
    const double xi = to_reference(t, t0, t1);
    std::vector<double> p(modes.size());
    for (int i = 0; i <= degree(); ++i) p[i] = legendre::derivative(i, xi) * 2.0 / tau();
    return weighted(p);
  }

  FeFunction left() const
  {
    std::vector<double> p(modes.size());
    for (int i = 0; i <= degree(); ++i) p[i] = legendre::at_left(i);
    return weighted(p);
  }

  FeFunction right() const { return weighted(std::vector<double>(modes.size(), 1.0)); }

  /// Derivative as a slab polynomial of degree-1 (degree 0 for constants).
  SlabPolynomial derivative_poly() const
  {
    const int r = degree();
    SlabPolynomial d(t0, t1, space(), std::max(0, r - 1));
    for (int i = 1; i <= r; ++i)
      for (int k = i - 1; k >= 0; k -= 2)
        for (std::size_t j = 0; j < dim(); ++j) d.modes[k].values[j] += (2 * k + 1) * 2.0 / tau() * modes[i].values[j];
    return d;
  }

  /// Same polynomial expressed on a refining mesh.
  SlabPolynomial on(const FeSpace& fine) const
  {
    SlabPolynomial out;
    out.t0 = t0;
    out.t1 = t1;
    for (const auto& m : modes) out.modes.push_back(prolong(m, fine));
    return out;
  }

  FeFunction weighted(const std::vector<double>& w) const
  {
    FeFunction f(space());
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (w[i] != 0.0)
        for (std::size_t j = 0; j < f.values.size(); ++j) f.values[j] += w[i] * modes[i].values[j];
    return f;
  }
};

/// Piecewise polynomial in time with one-sided limits; `initial` supplies the value at t_0^-.
struct SpaceTimeFunction {
  std::vector<SlabPolynomial> slabs;  // slabs[n-1] lives on I_n
  FeFunction initial;

  std::size_t num_slabs() const { return slabs.size(); }
  const SlabPolynomial& slab(std::size_t n) const { return slabs.at(n - 1); }

  /// w(t_n^-), n = 0..N
  FeFunction left_limit(std::size_t n) const { return n == 0 ? initial : slabs.at(n - 1).right(); }
  /// w(t_n^+), n = 0..N-1
  FeFunction right_limit(std::size_t n) const { return slabs.at(n).left(); }
  /// [[w]]_n = w(t_n^+) - w(t_n^-) on the overlay of the two meshes
  FeFunction jump(std::size_t n) const
  {
    if (n >= slabs.size()) throw std::out_of_range("jump index out of range");
    return right_limit(n) - left_limit(n);
  }

  FeFunction value(double t) const
  {
    if (slabs.empty()) return initial;
    std::size_t n = 1;
    while (n < slabs.size() && t > slabs[n - 1].t1) ++n;
    return slabs[n - 1].value(t);
  }
};

struct DgSolution {
  TimePartition partition;
  std::vector<FeSpace> spaces;                  // V_0 .. V_N
  SpaceTimeFunction u;                          // u.initial = P_0 u_0 on V_0
  std::vector<SlabPolynomial> source_projection;  // Pi_n f per slab, as seen by the solver

  std::size_t num_slabs() const { return partition.num_slabs(); }
  const FeSpace& space(std::size_t n) const { return spaces.at(n); }
  const SlabPolynomial& slab(std::size_t n) const { return u.slab(n); }
  const FeFunction& u0_projection() const { return u.initial; }
};

struct SlabSolve {
  SlabPolynomial solution;
  SlabPolynomial source_projection;
  std::vector<std::vector<double>> load;  // F_k = int_I <f, L_k phi_j>
};

/// Per-mode load vectors F_k = int_I <f, L_k phi_j> by Gauss quadrature in time.
inline std::vector<std::vector<double>> slab_load(const Problem& problem, const FeSpace& space, double t0, double t1, int degree)
{
  const SlabBasis basis{degree, t1 - t0};
  std::vector<std::vector<double>> load(degree + 1, std::vector<double>(space.dim(), 0.0));
  if (space.dim() == 0) return load;
  const auto& rule = gauss_rule(basis.source_points());
  std::vector<double> p(degree + 1);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * rule.nodes[q];
    const double w = 0.5 * (t1 - t0) * rule.weights[q];
    std::vector<double> b;
    if (problem.source)
      b = load_vector(space, [&](double x) { return problem.source(x, t); });
    else
      b.assign(space.dim(), 0.0);
    for (const auto& pl : problem.point_loads) add_point_load(space, pl.x, pl.weight(t), b);
    legendre::values(degree, rule.nodes[q], p.data());
    for (int k = 0; k <= degree; ++k)
      for (std::size_t j = 0; j < b.size(); ++j) load[k][j] += w * p[k] * b[j];
  }
  return load;
}

/// One dG slab: find U in P_r(I_n; V_n) with
///   int_I [(U', v) + a(U, v)] + (U(t0+) - prev_left, v(t0+)) = int_I <f, v>   for all v.
/// The system couples (r+1) temporal coefficients per spatial node through tridiagonal M and K and
/// is solved by block-tridiagonal elimination over the nodes.
inline SlabSolve solve_slab(const Discretization& disc, const FeFunction& prev_left, const FeSpace& space, double t0, double t1,
                            int degree, const std::vector<std::vector<double>>& load)
{
  const int r = degree;
  const int m = r + 1;
  const std::size_t n = space.dim();
  const SlabBasis basis{r, t1 - t0};
  SlabSolve out{SlabPolynomial(t0, t1, space, r), SlabPolynomial(t0, t1, space, r), load};
  if (n == 0) return out;

  const auto& ops = disc.ops(space);
  const auto prev_load = load_vector(disc, space, prev_left);

  Eigen::MatrixXd transport(m, m), tmass = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    tmass(k, k) = basis.mass(k);
    for (int i = 0; i < m; ++i) transport(k, i) = SlabBasis::transport(k, i);
  }
  auto block = [&](double mass_entry, double stiff_entry) -> Eigen::MatrixXd { return mass_entry * transport + stiff_entry * tmass; };

  std::vector<Eigen::VectorXd> rhs(n, Eigen::VectorXd(m));
  for (std::size_t j = 0; j < n; ++j)
    for (int k = 0; k < m; ++k) rhs[j](k) = load[k][j] + legendre::at_left(k) * prev_load[j];

  // forward elimination
  std::vector<Eigen::MatrixXd> upper_reduced(n);
  std::vector<Eigen::VectorXd> rhs_reduced(n);
  for (std::size_t j = 0; j < n; ++j) {
    Eigen::MatrixXd diag = block(ops.mass.diag(j), ops.stiffness.diag(j));
    Eigen::VectorXd b = rhs[j];
    if (j > 0) {
      const Eigen::MatrixXd low = block(ops.mass.lower(j), ops.stiffness.lower(j));
      diag -= low * upper_reduced[j - 1];
      b -= low * rhs_reduced[j - 1];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(diag);
    if (!std::isfinite(lu.rcond()) || lu.rcond() < 1e-14) throw std::runtime_error("slab solve failed");
    if (j + 1 < n) upper_reduced[j] = lu.solve(block(ops.mass.upper(j), ops.stiffness.upper(j)));
    rhs_reduced[j] = lu.solve(b);
  }
  for (std::size_t j = n; j-- > 0;) {
    if (j + 1 < n) rhs_reduced[j] -= upper_reduced[j] * rhs_reduced[j + 1];
    for (int k = 0; k < m; ++k) out.solution.modes[k].values[j] = rhs_reduced[j](k);
  }

  for (int k = 0; k < m; ++k) {
    auto c = ops.mass_solve(load[k]);
    for (double& v : c) v *= (2 * k + 1) / basis.tau;
    out.source_projection.modes[k] = FeFunction(space, std::move(c));
  }
  return out;
}

inline SlabSolve solve_slab(const Discretization& disc, const FeFunction& prev_left, const FeSpace& space, double t0, double t1,
                            int degree, const Problem& problem)
{
  return solve_slab(disc, prev_left, space, t0, t1, degree, slab_load(problem, space, t0, t1, degree));
}

/// March the scheme over all slabs. `spaces` holds V_0..V_N, or V_1..V_N with V_0 := V_1.
inline DgSolution solve_all(const Discretization& disc, const Problem& problem, const TimePartition& partition,
                            std::vector<FeSpace> spaces)
{
  const std::size_t N = partition.num_slabs();
  if (spaces.size() == N) spaces.insert(spaces.begin(), spaces.front());
  if (spaces.size() != N + 1) throw std::invalid_argument("need one space per slab (plus optionally V_0)");
  for (const auto& s : spaces) require_same_tree(s, spaces.front());

  DgSolution sol;
  sol.partition = partition;
  sol.spaces = spaces;
  sol.u.initial = l2_project(disc, spaces[0], problem.initial);
  FeFunction left = sol.u.initial;
  for (std::size_t n = 1; n <= N; ++n) {
    auto slab = solve_slab(disc, left, spaces[n], partition.node(n - 1), partition.node(n), partition.degree(n), problem);
    left = slab.solution.right();
    sol.u.slabs.push_back(std::move(slab.solution));
    sol.source_projection.push_back(std::move(slab.source_projection));
  }
  return sol;
}

inline DgSolution solve_all(const Discretization& disc, const Problem& problem, const TimePartition& partition, const FeSpace& space)
{
  return solve_all(disc, problem, partition, std::vector<FeSpace>(partition.num_slabs() + 1, space));
}

/// [[U]]_n for n = 0..N-1, with [[U]]_0 = U(0+) - P_0 u_0.
inline FeFunction jump(const DgSolution& sol, std::size_t n)
{
  if (n >= sol.num_slabs()) throw std::out_of_range("jump index out of range");
  return sol.u.jump(n);
}

}  // namespace dgcg
