#pragma once

/// \file reconstruction.hpp
/// Time lifting, time reconstruction and the (reference) elliptic reconstruction.
///
/// The lifting chi_n(w) is the Riesz representer of w tested at t_{n-1}^+ within P_r(I_n):
///   int_I (chi_n(w), v) = (w, v(t_{n-1}^+)),
/// so chi_n(w)(t_{n-1} + s tau) = w kappa_r(s) / tau with a scalar kernel kappa_r on (0,1).
/// The time reconstruction of a dG function w on I_n is
///   W(t) = w(t_{n-1}^-) + int_{t_{n-1}}^t (w' + chi_n([[w]]_{n-1})) = w(t) + [[w]]_{n-1} (K(s) - 1),
/// with K(s) = int_0^s kappa_r; it has degree r+1, is continuous and satisfies W(t_n) = w(t_n^-).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "dgcg/quadrature.hpp"
#include "dgcg/spatial_fem.hpp"
#include "dgcg/time_dg.hpp"

namespace dgcg {

/// C(tau, r) = ||w - W||_{L2(I_n)} / ||[[w]]||, see reconstruction_gap_norms.
inline double reconstruction_constant(double tau, int r) { return std::sqrt(tau * (r + 1) / ((2.0 * r + 1) * (2.0 * r + 3))); }

class LiftingKernel {
public:
  explicit LiftingKernel(int degree) : degree_(degree)
  {
    if (degree < 0 || degree > max_time_degree) throw std::invalid_argument("lifting kernel degree out of range");
    const int m = degree + 1;
    const auto& rule = gauss_rule(m + 1);
    std::vector<double> p(m);

    // Gram system on (0,1): sum_i c_i int P_i P_k = P_k(-1)
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      legendre::values(degree, rule.nodes[q], p.data());
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) gram(k, i) += 0.5 * rule.weights[q] * p[i] * p[k];
    }
    Eigen::VectorXd rhs(m);
    for (int k = 0; k < m; ++k) rhs(k) = legendre::at_left(k);
    const Eigen::VectorXd c = gram.ldlt().solve(rhs);
    coeffs_.assign(c.data(), c.data() + m);

    // Legendre coefficients of K(s) - 1 (degree r+1), by projection with an exact rule
    const int g = m + 1;
    const auto& rule2 = gauss_rule(g + 1);
    gap_.assign(g, 0.0);
    std::vector<double> pg(g);
    for (std::size_t q = 0; q < rule2.size(); ++q) {
      const double s = 0.5 * (1.0 + rule2.nodes[q]);
      const double v = antiderivative(s) - 1.0;
      legendre::values(g - 1, rule2.nodes[q], pg.data());
      for (int i = 0; i < g; ++i) gap_[i] += 0.5 * rule2.weights[q] * v * pg[i] * (2 * i + 1);
    }

    abs_integral_ = integrate_abs();
  }

  int degree() const { return degree_; }
  /// Legendre coefficients of kappa_r in P_i(2s-1).
  const std::vector<double>& coefficients() const { return coeffs_; }
  /// Legendre coefficients (degree r+1) of K(s) - 1.
  const std::vector<double>& gap_coefficients() const { return gap_; }

  double operator()(double s) const
  {
    std::vector<double> p(coeffs_.size());
    legendre::values(degree_, 2.0 * s - 1.0, p.data());
    double v = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) v += coeffs_[i] * p[i];
    return v;
  }

  /// K(s) = int_0^s kappa.
  double antiderivative(double s) const
  {
    if (s <= 0.0) return 0.0;
    return integrate([this](double x) { return (*this)(x); }, 0.0, s, degree_ + 1);
  }

  /// int_0^1 kappa^2 = (r+1)^2
  double square_integral() const
  {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) s += coeffs_[i] * coeffs_[i] / (2.0 * i + 1);
    return s;
  }

  /// int_0^1 |kappa|
  double abs_integral() const { return abs_integral_; }

  /// Cached kernels per degree.
  static const LiftingKernel& of(int degree)
  {
    static thread_local std::map<int, LiftingKernel> cache;
    auto it = cache.find(degree);
    if (it == cache.end()) it = cache.emplace(degree, LiftingKernel(degree)).first;
    return it->second;
  }

private:
  double integrate_abs() const
  {
    // split (0,1) at the sign changes of kappa, then integrate exactly on each piece
    std::vector<double> cuts{0.0};
    const int samples = 4096;
    double prev = (*this)(0.0);
    for (int i = 1; i <= samples; ++i) {
      const double x = double(i) / samples, v = (*this)(x);
      if (prev * v < 0.0) {
        double lo = double(i - 1) / samples, hi = x;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((*this)(lo) * (*this)(mid) <= 0.0 ? hi : lo) = mid;
        }
        cuts.push_back(0.5 * (lo + hi));
      }
      prev = v;
    }
    cuts.push_back(1.0);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      s += std::abs(integrate([this](double x) { return (*this)(x); }, cuts[i], cuts[i + 1], degree_ + 1));
    return s;
  }

  int degree_;
  std::vector<double> coeffs_;
  std::vector<double> gap_;
  double abs_integral_ = 0.0;
};

/// chi_n(w) on the slab (t0, t1] with temporal degree r.
inline SlabPolynomial lift(const FeFunction& w, double t0, double t1, int degree)
{
  const auto& kappa = LiftingKernel::of(degree);
  SlabPolynomial out(t0, t1, w.space, degree);
  for (int i = 0; i <= degree; ++i) out.modes[i] = (kappa.coefficients()[i] / (t1 - t0)) * w;
  return out;
}

/// Time reconstruction slab by slab; slab n lives on the overlay of the spaces of w(t_{n-1}^-) and w|I_n.
inline SpaceTimeFunction time_reconstruct(const SpaceTimeFunction& w)
{
  SpaceTimeFunction out;
  out.initial = w.initial;
  for (std::size_t n = 1; n <= w.num_slabs(); ++n) {
    const auto& slab = w.slab(n);
    const auto jmp = w.jump(n - 1);
    const FeSpace s = jmp.space;
    const int r = slab.degree();
    const auto& gap = LiftingKernel::of(r).gap_coefficients();
    SlabPolynomial rec(slab.t0, slab.t1, s, r + 1);
    for (int i = 0; i <= r + 1; ++i) {
      if (i <= r) rec.modes[i] = prolong(slab.modes[i], s);
      for (std::size_t j = 0; j < s.dim(); ++j) rec.modes[i].values[j] += gap[i] * jmp.values[j];
    }
    out.slabs.push_back(std::move(rec));
  }
  return out;
}

enum class TimeNorm { L2, Linf };
enum class SpaceNorm { H, X };

/// ||w - W|| on each slab, by Gauss quadrature (L2 in time) or sampling (Linf: both endpoints
/// and `samples` interior points).
inline std::vector<double> reconstruction_gap_norms(const Discretization& disc, const SpaceTimeFunction& w,
                                                    const SpaceTimeFunction& rec, TimeNorm tnorm, SpaceNorm snorm,
                                                    int samples = 1000)
{
  if (w.num_slabs() != rec.num_slabs()) throw std::invalid_argument("reconstruction does not match its source");
  std::vector<double> out;
  for (std::size_t n = 1; n <= w.num_slabs(); ++n) {
    const auto& ws = w.slab(n);
    const auto& rs = rec.slab(n);
    auto gap_at = [&](double t) {
      const auto d = rs.value(t) - ws.value(t);
      return snorm == SpaceNorm::H ? l2_norm(disc, d) : x_norm(disc, d);
    };
    if (tnorm == TimeNorm::L2) {
      const auto& rule = gauss_rule(rs.degree() + 3);
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double t = 0.5 * (ws.t0 + ws.t1) + 0.5 * ws.tau() * rule.nodes[q];
        const double g = gap_at(t);
        s += 0.5 * ws.tau() * rule.weights[q] * g * g;
      }
      out.push_back(std::sqrt(s));
    } else {
      // the left endpoint is the limit from inside the slab
      double m = std::max(gap_at(ws.t0), gap_at(ws.t1));
      for (int k = 1; k <= samples; ++k) m = std::max(m, gap_at(ws.t0 + ws.tau() * k / (samples + 1.0)));
      out.push_back(m);
    }
  }
  return out;
}

/// omega = A^{-1} A_V w for an FE function w, realized on a finer reference space.
inline FeFunction elliptic_reconstruct_reference(const Discretization& disc, const FeFunction& w, const FeSpace& ref)
{
  if (!ref.refines(w.space)) throw std::invalid_argument("reference space must refine slab space");
  if (ref.dim() == 0) return FeFunction(ref);
  const auto aw = discrete_elliptic_apply(disc, w);
  return FeFunction(ref, disc.ops(ref).stiffness_solve(load_vector(disc, ref, aw)));
}

/// Elliptic reconstruction of a slab polynomial, mode by mode.
inline SlabPolynomial elliptic_reconstruct_reference(const Discretization& disc, const SlabPolynomial& u, const FeSpace& ref)
{
  if (!ref.refines(u.space())) throw std::invalid_argument("reference space must refine slab space");
  SlabPolynomial out;
  out.t0 = u.t0;
  out.t1 = u.t1;
  for (const auto& m : u.modes) out.modes.push_back(elliptic_reconstruct_reference(disc, m, ref));
  return out;
}

}  // namespace dgcg
