#pragma once

/// \file spatial_fem.hpp
/// Conforming P1 spaces on (0,1) whose meshes are leaf sets of one dyadic refinement tree, so that
/// the sum and intersection of two spaces are again spaces of the same kind.
///
/// A mesh is stored by its vertices on the integer grid {0, ..., 2^max_depth}. Every element
/// [g_i, g_{i+1}] must be a node of the binary tree: its length is a power of two and g_i is a
/// multiple of it. Degrees of freedom are the interior vertices (homogeneous Dirichlet data).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgcg/problem.hpp"
#include "dgcg/quadrature.hpp"
#include "dgcg/tridiagonal.hpp"

namespace dgcg {

class FeSpace {
public:
  static constexpr int default_max_depth = 20;

  FeSpace() : FeSpace(std::vector<std::int64_t>{0, std::int64_t{1} << default_max_depth}, default_max_depth) {}

  /// 2^level equal elements.
  static FeSpace uniform(int level, int max_depth = default_max_depth)
  {
    if (level < 0 || level > max_depth) throw std::invalid_argument("uniform mesh: level outside the tree depth");
    const std::int64_t n = std::int64_t{1} << level, step = std::int64_t{1} << (max_depth - level);
    std::vector<std::int64_t> g(n + 1);
    for (std::int64_t i = 0; i <= n; ++i) g[i] = i * step;
    return FeSpace(std::move(g), max_depth);
  }

  /// Mesh with the given interior vertices (dyadic rationals in (0,1)).
  static FeSpace from_cuts(std::span<const double> cuts, int max_depth = default_max_depth)
  {
    const double scale = std::ldexp(1.0, max_depth);
    std::vector<std::int64_t> g{0, std::int64_t{1} << max_depth};
    for (double c : cuts) {
      const double s = c * scale;
      if (!(c > 0.0 && c < 1.0) || s != std::floor(s))
        throw std::invalid_argument("mesh cut " + std::to_string(c) + " is not a dyadic point of the tree");
      g.push_back(static_cast<std::int64_t>(s));
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return FeSpace(std::move(g), max_depth);
  }

  FeSpace(std::vector<std::int64_t> grid, int max_depth)
  {
    if (max_depth < 0 || max_depth > 52) throw std::invalid_argument("tree depth out of range");
    const std::int64_t top = std::int64_t{1} << max_depth;
    if (grid.size() < 2 || grid.front() != 0 || grid.back() != top)
      throw std::invalid_argument("mesh must cover [0,1]");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const std::int64_t len = grid[i + 1] - grid[i];
      if (len <= 0 || (len & (len - 1)) != 0 || grid[i] % len != 0)
        throw std::invalid_argument("mesh element is not a node of the dyadic tree");
    }
    auto d = std::make_shared<Data>();
    d->grid = std::move(grid);
    d->max_depth = max_depth;
    d->scale = std::ldexp(1.0, -max_depth);
    data_ = std::move(d);
  }

  int max_depth() const { return data_->max_depth; }
  std::size_t num_elements() const { return data_->grid.size() - 1; }
  std::size_t num_vertices() const { return data_->grid.size(); }
  std::size_t dim() const { return data_->grid.size() - 2; }
  const std::vector<std::int64_t>& grid() const { return data_->grid; }

  double vertex(std::size_t i) const { return static_cast<double>(data_->grid[i]) * data_->scale; }
  double h(std::size_t k) const { return vertex(k + 1) - vertex(k); }
  double h_max() const
  {
    double m = 0.0;
    for (std::size_t k = 0; k < num_elements(); ++k) m = std::max(m, h(k));
    return m;
  }

  /// Element containing x (the left one at a vertex, except at 0).
  std::size_t element_of(double x) const
  {
    const double s = x / data_->scale;
    const auto& g = data_->grid;
    auto it = std::lower_bound(g.begin(), g.end(), s, [](std::int64_t v, double y) { return static_cast<double>(v) < y; });
    std::size_t k = (it == g.begin()) ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
    return std::min(k, num_elements() - 1);
  }

  /// True if every vertex of `coarse` is a vertex of this mesh.
  bool refines(const FeSpace& coarse) const
  {
    if (coarse.max_depth() != max_depth()) return false;
    return std::includes(grid().begin(), grid().end(), coarse.grid().begin(), coarse.grid().end());
  }

  /// Interior vertices as coordinates.
  std::vector<double> cuts() const
  {
    std::vector<double> c;
    for (std::size_t i = 1; i + 1 < num_vertices(); ++i) c.push_back(vertex(i));
    return c;
  }

  friend bool operator==(const FeSpace& a, const FeSpace& b)
  {
    return a.data_ == b.data_ || (a.max_depth() == b.max_depth() && a.grid() == b.grid());
  }

private:
  struct Data {
    std::vector<std::int64_t> grid;
    int max_depth = 0;
    double scale = 1.0;
  };
  std::shared_ptr<const Data> data_;
};

inline void require_same_tree(const FeSpace& a, const FeSpace& b)
{
  if (a.max_depth() != b.max_depth()) throw std::invalid_argument("incompatible mesh trees");
}

/// Smallest common superspace: the overlay of both meshes.
inline FeSpace superspace(const FeSpace& a, const FeSpace& b)
{
  require_same_tree(a, b);
  if (a == b) return a;
  std::vector<std::int64_t> g;
  std::set_union(a.grid().begin(), a.grid().end(), b.grid().begin(), b.grid().end(), std::back_inserter(g));
  return FeSpace(std::move(g), a.max_depth());
}

/// Largest common subspace: the common coarsening of both meshes.
inline FeSpace subspace(const FeSpace& a, const FeSpace& b)
{
  require_same_tree(a, b);
  if (a == b) return a;
  std::vector<std::int64_t> g;
  std::set_intersection(a.grid().begin(), a.grid().end(), b.grid().begin(), b.grid().end(), std::back_inserter(g));
  return FeSpace(std::move(g), a.max_depth());
}

/// Split every element into 2^levels children.
inline FeSpace refine(const FeSpace& space, int levels)
{
  if (levels == 0) return space;
  const std::int64_t parts = std::int64_t{1} << levels;
  std::vector<std::int64_t> g;
  g.reserve(space.num_elements() * parts + 1);
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const std::int64_t a = space.grid()[k], len = space.grid()[k + 1] - a;
    if (len < parts) throw std::invalid_argument("refinement exceeds the tree depth");
    for (std::int64_t j = 0; j < parts; ++j) g.push_back(a + j * (len / parts));
  }
  g.push_back(space.grid().back());
  return FeSpace(std::move(g), space.max_depth());
}

/// A P1 function: nodal values at the interior vertices of `space`.
struct FeFunction {
  FeSpace space;
  std::vector<double> values;

  FeFunction() = default;
  explicit FeFunction(FeSpace s) : space(std::move(s)), values(space.dim(), 0.0) {}
  FeFunction(FeSpace s, std::vector<double> v) : space(std::move(s)), values(std::move(v))
  {
    if (values.size() != space.dim()) throw std::invalid_argument("FE function: dimension mismatch");
  }

  /// Value at vertex i (0 at the boundary).
  double at_vertex(std::size_t i) const { return (i == 0 || i + 1 >= space.num_vertices()) ? 0.0 : values[i - 1]; }

  double operator()(double x) const
  {
    const std::size_t k = space.element_of(x);
    const double xl = space.vertex(k), hk = space.h(k);
    const double s = (x - xl) / hk;
    return (1.0 - s) * at_vertex(k) + s * at_vertex(k + 1);
  }

  /// Constant derivative on element k.
  double slope(std::size_t k) const { return (at_vertex(k + 1) - at_vertex(k)) / space.h(k); }
};

inline FeFunction nodal_interpolant(const FeSpace& space, const Function1& fn)
{
  FeFunction f(space);
  for (std::size_t i = 0; i < space.dim(); ++i) f.values[i] = fn(space.vertex(i + 1));
  return f;
}

/// Represent f exactly on a mesh that refines f's mesh.
inline FeFunction prolong(const FeFunction& f, const FeSpace& fine)
{
  if (fine == f.space) return f;
  if (!fine.refines(f.space)) throw std::invalid_argument("prolongation target must refine the source mesh");
  FeFunction out(fine);
  std::size_t k = 0;
  const auto& cg = f.space.grid();
  for (std::size_t i = 1; i + 1 < fine.num_vertices(); ++i) {
    const std::int64_t gi = fine.grid()[i];
    while (cg[k + 1] < gi) ++k;
    const double s = static_cast<double>(gi - cg[k]) / static_cast<double>(cg[k + 1] - cg[k]);
    out.values[i - 1] = (1.0 - s) * f.at_vertex(k) + s * f.at_vertex(k + 1);
  }
  return out;
}

/// Transpose of the prolongation: maps a load vector on `fine` to the load vector on `coarse`.
inline std::vector<double> restrict_load(const FeSpace& coarse, const FeSpace& fine, std::span<const double> fine_load)
{
  if (fine == coarse) return {fine_load.begin(), fine_load.end()};
  if (!fine.refines(coarse)) throw std::invalid_argument("restriction source must refine the target mesh");
  std::vector<double> out(coarse.dim(), 0.0);
  std::size_t k = 0;
  const auto& cg = coarse.grid();
  const std::size_t nc = coarse.num_vertices();
  for (std::size_t i = 1; i + 1 < fine.num_vertices(); ++i) {
    const std::int64_t gi = fine.grid()[i];
    while (cg[k + 1] < gi) ++k;
    const double s = static_cast<double>(gi - cg[k]) / static_cast<double>(cg[k + 1] - cg[k]);
    if (k >= 1) out[k - 1] += (1.0 - s) * fine_load[i - 1];
    if (k + 1 <= nc - 2) out[k] += s * fine_load[i - 1];
  }
  return out;
}

/// c1 f1 + c2 f2 on the overlay of both meshes.
inline FeFunction combine(double c1, const FeFunction& f1, double c2, const FeFunction& f2)
{
  const FeSpace s = superspace(f1.space, f2.space);
  auto a = prolong(f1, s), b = prolong(f2, s);
  for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = c1 * a.values[i] + c2 * b.values[i];
  return a;
}

inline FeFunction operator-(const FeFunction& a, const FeFunction& b) { return combine(1.0, a, -1.0, b); }
inline FeFunction operator+(const FeFunction& a, const FeFunction& b) { return combine(1.0, a, 1.0, b); }
inline FeFunction operator*(double c, FeFunction f)
{
  for (double& v : f.values) v *= c;
  return f;
}

/// Mass, stiffness (with coefficient a) and unit-coefficient stiffness on one space, factorized.
struct SpatialOperators {
  FeSpace space;
  Tridiagonal mass;
  Tridiagonal stiffness;
  Tridiagonal laplace;  // Gram matrix of the X inner product (v', w')

  std::vector<double> mass_apply(std::span<const double> x) const { return mass.apply(x); }
  std::vector<double> stiffness_apply(std::span<const double> x) const { return stiffness.apply(x); }
  std::vector<double> mass_solve(std::span<const double> b) const { return mass.solve(b); }
  std::vector<double> stiffness_solve(std::span<const double> b) const { return stiffness.solve(b); }
  std::vector<double> laplace_solve(std::span<const double> b) const { return laplace.solve(b); }

  double l2_inner(std::span<const double> x, std::span<const double> y) const { return mass.quadratic_form(x, y); }
  double energy_inner(std::span<const double> x, std::span<const double> y) const { return stiffness.quadratic_form(x, y); }
  double x_inner(std::span<const double> x, std::span<const double> y) const { return laplace.quadratic_form(x, y); }
};

inline SpatialOperators assemble_operators(const FeSpace& space, const PiecewiseConstant& coefficient)
{
  const std::size_t n = space.dim();
  SpatialOperators ops{space, Tridiagonal(n), Tridiagonal(n), Tridiagonal(n)};
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const double hk = space.h(k);
    const double abar = coefficient.integral(space.vertex(k), space.vertex(k + 1)) / hk;
    const double me[2][2] = {{hk / 3, hk / 6}, {hk / 6, hk / 3}};
    const double ke[2][2] = {{1 / hk, -1 / hk}, {-1 / hk, 1 / hk}};
    const std::size_t dofs[2] = {k, k + 1};  // vertex indices; dof = vertex - 1
    for (int a = 0; a < 2; ++a) {
      if (dofs[a] == 0 || dofs[a] + 1 >= space.num_vertices()) continue;
      const std::size_t i = dofs[a] - 1;
      for (int b = 0; b < 2; ++b) {
        if (dofs[b] == 0 || dofs[b] + 1 >= space.num_vertices()) continue;
        const std::size_t j = dofs[b] - 1;
        auto add = [&](Tridiagonal& m, double v) {
          if (i == j) m.diag(i) += v;
          else if (j == i + 1) m.upper(i) += v;
          else m.lower(i) += v;
        };
        add(ops.mass, me[a][b]);
        add(ops.stiffness, abar * ke[a][b]);
        add(ops.laplace, ke[a][b]);
      }
    }
  }
  if (n > 0) {
    ops.mass.factorize();
    ops.stiffness.factorize();
    ops.laplace.factorize();
  }
  return ops;
}

/// Operator bundles per mesh for one coefficient. Assembly is lazy and single-threaded; returned
/// references stay valid for the cache's lifetime.
class Discretization {
public:
  explicit Discretization(PiecewiseConstant coefficient) : coefficient_(std::move(coefficient)) {}

  const PiecewiseConstant& coefficient() const { return coefficient_; }

  const SpatialOperators& ops(const FeSpace& space) const
  {
    auto key = std::make_pair(space.max_depth(), space.grid());
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(std::move(key), std::make_unique<SpatialOperators>(assemble_operators(space, coefficient_))).first;
    return *it->second;
  }

private:
  PiecewiseConstant coefficient_;
  mutable std::map<std::pair<int, std::vector<std::int64_t>>, std::unique_ptr<SpatialOperators>> cache_;
};

// ---------------------------------------------------------------------------------------------
// Load vectors <g, phi_i>

/// Integrate fn over element k split at the coefficient breakpoints.
template <class F>
double integrate_element(const FeSpace& space, std::size_t k, const PiecewiseConstant& a, F&& fn, int points)
{
  double lo = space.vertex(k);
  const double hi = space.vertex(k + 1);
  double s = 0.0;
  for (double b : a.breakpoints_in(lo, hi)) {
    s += integrate(fn, lo, b, points);
    lo = b;
  }
  return s + integrate(fn, lo, hi, points);
}

/// <g, phi_i> for a callable g, Gauss quadrature per element.
inline std::vector<double> load_vector(const FeSpace& space, const Function1& g, int points = 10)
{
  std::vector<double> b(space.dim(), 0.0);
  const auto& rule = gauss_rule(points);
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const double xl = space.vertex(k), hk = space.h(k);
    double left = 0.0, right = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double s = 0.5 * (1.0 + rule.nodes[q]);
      const double w = 0.5 * hk * rule.weights[q] * g(xl + s * hk);
      left += w * (1.0 - s);
      right += w * s;
    }
    if (k >= 1) b[k - 1] += left;
    if (k + 1 < space.num_vertices() - 1) b[k] += right;
  }
  return b;
}

/// (g, phi_i) for an FE function g on any mesh of the same tree (exact).
inline std::vector<double> load_vector(const Discretization& disc, const FeSpace& space, const FeFunction& g)
{
  const FeSpace s = superspace(space, g.space);
  const auto gs = prolong(g, s);
  const auto ms = disc.ops(s).mass_apply(gs.values);
  return restrict_load(space, s, ms);
}

/// Add weight * phi_i(x) for a point load.
inline void add_point_load(const FeSpace& space, double x, double weight, std::vector<double>& b)
{
  const std::size_t k = space.element_of(x);
  const double s = (x - space.vertex(k)) / space.h(k);
  if (k >= 1) b[k - 1] += weight * (1.0 - s);
  if (k + 1 < space.num_vertices() - 1) b[k] += weight * s;
}

// ---------------------------------------------------------------------------------------------
// Projections and the discrete elliptic operator

/// L2 projection of a callable onto the space.
inline FeFunction l2_project(const Discretization& disc, const FeSpace& space, const Function1& g, int points = 10)
{
  if (space.dim() == 0) return FeFunction(space);
  return FeFunction(space, disc.ops(space).mass_solve(load_vector(space, g, points)));
}

/// L2 projection of an FE function living on any mesh of the tree.
inline FeFunction l2_project(const Discretization& disc, const FeSpace& space, const FeFunction& g)
{
  if (space.dim() == 0) return FeFunction(space);
  if (g.space == space) return g;
  return FeFunction(space, disc.ops(space).mass_solve(load_vector(disc, space, g)));
}

/// L2 projection of a functional given by its action on the basis.
inline FeFunction l2_project_load(const Discretization& disc, const FeSpace& space, std::span<const double> load)
{
  if (load.size() != space.dim()) throw std::invalid_argument("load vector: dimension mismatch");
  if (space.dim() == 0) return FeFunction(space);
  return FeFunction(space, disc.ops(space).mass_solve(load));
}

/// A_V w = M^{-1} K w.
inline FeFunction discrete_elliptic_apply(const Discretization& disc, const FeFunction& w)
{
  if (w.space.dim() == 0) return w;
  const auto& ops = disc.ops(w.space);
  return FeFunction(w.space, ops.mass_solve(ops.stiffness_apply(w.values)));
}

/// A_V^{-1} g = K^{-1} M g.
inline FeFunction discrete_elliptic_inverse(const Discretization& disc, const FeFunction& g)
{
  if (g.space.dim() == 0) return g;
  const auto& ops = disc.ops(g.space);
  return FeFunction(g.space, ops.stiffness_solve(ops.mass_apply(g.values)));
}

/// Ritz projection onto `space` of an FE function on a mesh of the same tree: K c = a(w, phi_i).
inline FeFunction ritz_project(const Discretization& disc, const FeSpace& space, const FeFunction& w)
{
  if (space.dim() == 0) return FeFunction(space);
  if (w.space == space) return w;
  const FeSpace s = superspace(space, w.space);
  const auto ws = prolong(w, s);
  const auto ks = disc.ops(s).stiffness_apply(ws.values);
  return FeFunction(space, disc.ops(space).stiffness_solve(restrict_load(space, s, ks)));
}

/// Ritz projection of a smooth function given through its derivative.
inline FeFunction ritz_project(const Discretization& disc, const FeSpace& space, const Function1& dw, int points = 10)
{
  if (space.dim() == 0) return FeFunction(space);
  std::vector<double> b(space.dim(), 0.0);
  const auto& a = disc.coefficient();
  for (std::size_t k = 0; k < space.num_elements(); ++k) {
    const double hk = space.h(k);
    const double flux = integrate_element(space, k, a, [&](double x) { return a(x) * dw(x); }, points);
    if (k >= 1) b[k - 1] -= flux / hk;
    if (k + 1 < space.num_vertices() - 1) b[k] += flux / hk;
  }
  return FeFunction(space, disc.ops(space).stiffness_solve(b));
}

/// L2 norm of an FE function.
inline double l2_norm(const Discretization& disc, const FeFunction& f)
{
  if (f.space.dim() == 0) return 0.0;
  return std::sqrt(std::max(0.0, disc.ops(f.space).l2_inner(f.values, f.values)));
}

/// L2 inner product of two FE functions on meshes of one tree (exact).
inline double l2_inner(const Discretization& disc, const FeFunction& f, const FeFunction& g)
{
  const FeSpace s = superspace(f.space, g.space);
  if (s.dim() == 0) return 0.0;
  const auto fs = prolong(f, s), gs = prolong(g, s);
  return disc.ops(s).l2_inner(fs.values, gs.values);
}

/// ||f'||, the X norm.
inline double x_norm(const Discretization& disc, const FeFunction& f)
{
  if (f.space.dim() == 0) return 0.0;
  return std::sqrt(std::max(0.0, disc.ops(f.space).x_inner(f.values, f.values)));
}

}  // namespace dgcg
