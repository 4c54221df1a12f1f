// Acceptance suite: one PASS/FAIL line per criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dgcg/dgcg.hpp"

using namespace dgcg;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

FeFunction random_function(const FeSpace& s, std::mt19937& rng)
{
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FeFunction f(s);
  for (auto& v : f.values) v = d(rng);
  return f;
}

// Regression runs shared by criteria 4, 6, 7, 9, 10 and 11.
struct Regression {
  std::string label;
  Problem problem;
  DgSolution sol;
  IndicatorBreakdown breakdown;
};

const std::vector<Regression>& regression_runs()
{
  static const std::vector<Regression> runs = [] {
    std::vector<Regression> out;
    const auto plain = make_problem(PiecewiseConstant(), catalog::sinpi_expdecay(), 1.0);
    for (int r : {0, 1, 2})
      for (int N : {4, 8, 16})
        for (int level : {4, 5}) {
          const Discretization disc(plain.coefficient);
          auto sol = solve_all(disc, plain, TimePartition::uniform(1.0, N, r), FeSpace::uniform(level));
          auto b = compute_breakdown(disc, constants_for(plain), plain, sol);
          out.push_back({"r=" + std::to_string(r) + " N=" + std::to_string(N) + " h=1/" + std::to_string(1 << level), plain, std::move(sol),
                         std::move(b)});
        }
    // alternating refine / coarsen with a coefficient jump, horizon beyond 1
    const auto jumpy = make_problem(PiecewiseConstant({0.5}, {1.0, 4.0}), catalog::sinpi_expdecay(), 2.0);
    const Discretization disc(jumpy.coefficient);
    std::vector<FeSpace> spaces;
    for (int n = 0; n <= 8; ++n) spaces.push_back(FeSpace::uniform(n % 2 ? 5 : 4));
    auto sol = solve_all(disc, jumpy, TimePartition::uniform(2.0, 8, 1), spaces);
    auto b = compute_breakdown(disc, constants_for(jumpy), jumpy, sol);
    out.push_back({"alternating", jumpy, std::move(sol), std::move(b)});
    return out;
  }();
  return runs;
}

Outcome criterion1()
{
  std::mt19937 rng(11);
  const PiecewiseConstant a;
  const Discretization disc(a);
  const auto s = FeSpace::uniform(3);
  double worst = 0.0;
  for (int r = 0; r <= 6; ++r)
    for (double tau : {0.125, 0.5, 3.0}) {
      SpaceTimeFunction w;
      w.initial = random_function(s, rng);
      SlabPolynomial slab(0.0, tau, s, r);
      for (auto& m : slab.modes) m = random_function(s, rng);
      w.slabs.push_back(slab);
      const auto rec = time_reconstruct(w);
      const double gap = reconstruction_gap_norms(disc, w, rec, TimeNorm::L2, SpaceNorm::H)[0];
      const double want = reconstruction_constant(tau, r) * l2_norm(disc, w.jump(0));
      worst = std::max(worst, std::abs(gap - want) / want);
    }
  const double spot = std::max(std::abs(reconstruction_constant(3.0, 0) - 1.0), std::abs(reconstruction_constant(1.0, 1) - std::sqrt(2.0 / 15.0)));
  return {worst <= 1e-9 && spot <= 1e-15, "max rel err " + fmt(worst) + ", spot C(3,0), C(1,1) err " + fmt(spot)};
}

Outcome criterion2()
{
  std::mt19937 rng(12);
  const PiecewiseConstant a;
  const Discretization disc(a);
  const auto s = FeSpace::uniform(3);
  double worst = 0.0;
  bool at_left = true;
  for (int r = 0; r <= 6; ++r)
    for (double tau : {0.125, 0.5, 3.0}) {
      SpaceTimeFunction w;
      w.initial = random_function(s, rng);
      SlabPolynomial slab(0.0, tau, s, r);
      for (auto& m : slab.modes) m = random_function(s, rng);
      w.slabs.push_back(slab);
      const auto rec = time_reconstruct(w);
      const double sup = reconstruction_gap_norms(disc, w, rec, TimeNorm::Linf, SpaceNorm::H, 400)[0];
      const double jn = l2_norm(disc, w.jump(0));
      const double left = l2_norm(disc, rec.slab(1).value(0.0) - slab.value(0.0));
      worst = std::max(worst, std::abs(sup - jn) / jn);
      at_left = at_left && std::abs(left - sup) <= 1e-12 * sup;
    }
  return {worst <= 1e-6 && at_left, "max rel err " + fmt(worst) + (at_left ? ", max at left endpoint" : ", max not at left endpoint")};
}

Outcome criterion3()
{
  double worst = 0.0;
  for (int r = 0; r <= 10; ++r)
    for (double tau : {0.1, 1.0, 7.0}) {
      const auto& kappa = LiftingKernel::of(r);
      const auto& rule = gauss_rule(r + 2);
      for (int k = 0; k <= r; ++k) {
        // int_I chi(1) L_k dt - L_k(t0+) for the scalar lifting chi(1) = kappa / tau
        double s = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          s += 0.5 * tau * rule.weights[q] * kappa(0.5 * (1 + rule.nodes[q])) / tau * legendre::value(k, rule.nodes[q]);
        worst = std::max(worst, std::abs(s - legendre::at_left(k)));
      }
    }
  std::mt19937 rng(13);
  const auto s = FeSpace::from_cuts(std::vector<double>{0.25, 0.375, 0.5});
  const auto w = random_function(s, rng);
  bool invariant = true;
  for (int r = 0; r <= 10; ++r) {
    const auto chi = lift(w, 0.0, 0.5, r);
    invariant = invariant && chi.space() == s;
    for (int i = 0; i <= r; ++i)
      for (std::size_t j = 0; j < w.values.size(); ++j)
        invariant = invariant && chi.modes[i].values[j] == (LiftingKernel::of(r).coefficients()[i] / 0.5) * w.values[j];
  }
  return {worst <= 1e-11 && invariant, "max residual " + fmt(worst) + (invariant ? ", lifted functions stay in V_n" : ", space invariance broken")};
}

Outcome criterion4()
{
  // one interior dof; source with time dependence, dG(0) against backward Euler with the slab-averaged source
  auto p = make_problem(PiecewiseConstant(2.0), [](double x, double t) { return (1 + t * t) * std::sin(pi * x) + x; },
                        [](double x) { return x * (1 - x); }, 0.75);
  const Discretization disc(p.coefficient);
  const auto s = FeSpace::uniform(1);
  const auto part = TimePartition::uniform(0.75, 3, 0);
  const auto sol = solve_all(disc, p, part, s);
  const auto& ops = disc.ops(s);
  const double m = ops.mass.diag(0), k = ops.stiffness.diag(0);
  double u = l2_project(disc, s, p.initial).values[0];
  double worst = 0.0;
  for (std::size_t n = 1; n <= 3; ++n) {
    const double t0 = part.node(n - 1), t1 = part.node(n), tau = t1 - t0;
    const double avg_load = integrate([&](double t) { return load_vector(s, [&](double x) { return p.source(x, t); }, 12)[0]; }, t0, t1, 8);
    u = (m * u + avg_load) / (m + tau * k);
    worst = std::max(worst, std::abs(sol.slab(n).modes[0].values[0] - u));
  }
  double galerkin = 0.0;
  for (const auto& run : regression_runs()) {
    const Discretization d(run.problem.coefficient);
    for (std::size_t n = 1; n <= run.sol.num_slabs(); ++n) galerkin = std::max(galerkin, slab_residual(d, run.problem, run.sol, n));
  }
  return {worst <= 1e-12 && galerkin <= 1e-10, "backward Euler diff " + fmt(worst) + ", max Galerkin residual " + fmt(galerkin)};
}

Outcome criterion5()
{
  std::mt19937 rng(15);
  const PiecewiseConstant a;
  const Discretization disc(a);
  const auto s = FeSpace::uniform(4);
  double worst = 0.0;
  for (int r = 0; r <= 6; ++r)
    for (double tau : {0.125, 0.5, 3.0}) {
      const auto w = random_function(s, rng);
      const auto chi = lift(w, 1.0, 1.0 + tau, r);
      const double q = integrate(
          [&](double t) {
            const double v = l2_norm(disc, chi.value(t));
            return v * v;
          },
          1.0, 1.0 + tau, r + 2);
      const double want = (r + 1.0) * (r + 1.0) / tau * std::pow(l2_norm(disc, w), 2);
      worst = std::max(worst, std::abs(q - want) / want);
    }
  return {worst <= 1e-10, "max rel err " + fmt(worst)};
}

Outcome criterion6()
{
  double worst = 0.0;
  for (const auto& run : regression_runs()) {
    const Discretization disc(run.problem.coefficient);
    for (std::size_t n = 1; n <= run.sol.num_slabs(); n += 3) {
      const auto& u = run.sol.slab(n);
      const auto ref = refine(u.space(), 4);
      const auto& K = disc.ops(ref).stiffness;
      for (const auto& mode : u.modes) {
        const auto omega = elliptic_reconstruct_reference(disc, mode, ref);
        const auto d = omega - prolong(mode, ref);
        const auto kd = K.apply(d.values);
        const auto coarse = restrict_load(u.space(), ref, kd);
        const auto ku = disc.ops(ref).stiffness_apply(prolong(mode, ref).values);
        double scale = 1.0;
        for (double v : ku) scale = std::max(scale, std::abs(v));
        for (double v : coarse) worst = std::max(worst, std::abs(v) / scale);
      }
    }
  }
  return {worst <= 1e-9, "max |a(omega - U, phi)| (relative) " + fmt(worst)};
}

Outcome criterion7()
{
  bool pass = true;
  double lo = 1e300, hi = 0.0;
  std::string worst;
  for (const auto& run : regression_runs()) {
    const Discretization disc(run.problem.coefficient);
    const auto c = constants_for(run.problem);
    const auto e = error_report(disc, c, run.problem, run.sol, run.breakdown, run.sol.num_slabs());
    for (double eff : {e.effectivity_l2x(), e.effectivity_linfh()}) {
      if (eff < 1.0 || eff > 200.0) {
        pass = false;
        worst = run.label;
      }
      lo = std::min(lo, eff);
      hi = std::max(hi, eff);
    }
  }
  std::string d = std::to_string(regression_runs().size()) + " runs, effectivities in [" + fmt(lo) + ", " + fmt(hi) + "]";
  if (!pass) d += ", violated by " + worst;
  return {pass, d};
}

// least-squares slope of log2(e) against the halving index
double fitted_order(const std::vector<double>& e)
{
  const double n = e.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double x = i, y = -std::log2(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome criterion8()
{
  // hat_cosine lies in V_h, so the error is purely temporal
  const auto p = make_problem(PiecewiseConstant(), catalog::hat_cosine(), 1.0);
  const Discretization disc(p.coefficient);
  const auto c = constants_for(p);
  const auto s = FeSpace::uniform(3);
  bool pass = true;
  std::string d;
  for (int r : {0, 1, 2}) {
    std::vector<double> err, theta;
    for (int N : {8, 16, 32, 64}) {
      const auto sol = solve_all(disc, p, TimePartition::uniform(1.0, N, r), s);
      err.push_back(true_error_l2x(sol, p, N));
      double t2 = 0.0;
      for (std::size_t n = 1; n <= sol.num_slabs(); ++n) t2 += std::pow(theta_indicator(disc, c, sol, n, ThetaMode::Super), 2);
      theta.push_back(std::sqrt(t2));
    }
    const double oe = fitted_order(err), ot = fitted_order(theta);
    pass = pass && std::abs(oe - (r + 1)) <= 0.3 && std::abs(ot - (r + 1)) <= 0.3;
    d += (d.empty() ? "" : "; ") + std::string("r=") + std::to_string(r) + " error " + fmt(oe) + " theta " + fmt(ot);
  }
  return {pass, d};
}

Outcome criterion9()
{
  double worst = 1e300;
  std::size_t slabs = 0;
  for (const auto& run : regression_runs()) {
    const Discretization disc(run.problem.coefficient);
    for (std::size_t n = 1; n <= run.sol.num_slabs(); ++n) {
      const double o = theta_oracle(disc, run.sol, n, 4);
      const auto& s = run.breakdown.slabs[n - 1];
      if (o > 0) worst = std::min({worst, s.theta_super / o, s.theta_pf / o});
      else if (s.theta_super < 0 || s.theta_pf < 0) worst = -1;
      ++slabs;
    }
  }
  return {worst >= 1.0, std::to_string(slabs) + " slabs, min theta / oracle " + fmt(worst)};
}

Outcome criterion10()
{
  double worst = 0.0;
  for (const auto& run : regression_runs()) {
    const Discretization disc(run.problem.coefficient);
    for (std::size_t n = 1; n <= run.sol.num_slabs(); ++n) {
      const auto chk = pointwise_form_check(disc, run.sol, n, 4);
      worst = std::max({worst, chk.form_gap, chk.identity_gap});
    }
  }
  // single slab, r = 0, one spatial dof
  const auto p = make_problem(PiecewiseConstant(3.0), [](double x, double t) { return std::exp(t) * x; }, [](double x) { return std::sin(pi * x); }, 0.5);
  const Discretization disc(p.coefficient);
  const auto sol = solve_all(disc, p, TimePartition::uniform(0.5, 1, 0), FeSpace::uniform(1));
  const auto mini = pointwise_form_check(disc, sol, 1, 4);
  const double m = std::max(mini.form_gap, mini.identity_gap);
  return {worst <= 1e-6 && m <= 1e-12, "max regression gap " + fmt(worst) + ", 1-dof gap " + fmt(m)};
}

Outcome criterion11()
{
  bool exact = choose_lambda(0.5) == 1.0 && choose_lambda(1.0) == 1.0 && choose_lambda(4.0) == 0.25 && choose_lambda(2.0) == 0.5;
  std::size_t checked = 0;
  bool holds = true;
  for (const auto& run : regression_runs())
    for (std::size_t n = 1; n <= run.sol.num_slabs(); ++n)
      if (run.sol.partition.node(n) >= 1.0) {
        ++checked;
        holds = holds && lambda_inequality_holds(run.breakdown, n);
      }
  return {exact && holds && checked > 0, std::to_string(checked) + " horizons with t_n >= 1 checked"};
}

Outcome criterion12()
{
  const auto p = make_problem(PiecewiseConstant(), catalog::rough_ic(1.0, 16), 1.0);
  const Discretization disc(p.coefficient);
  const auto c = constants_for(p);
  const auto s = FeSpace::uniform(6);
  auto l2x_bound = [&](const TimePartition& part) {
    const auto sol = solve_all(disc, p, part, s);
    const auto b = compute_breakdown(disc, c, p, sol);
    return assemble_l2x_bound(b, c, choose_lambda(1.0), sol.num_slabs()).value;
  };
  const auto graded = TimePartition::geometric(1.0, 0.25, 8, 0.5);
  std::size_t per_dof = 0;  // sum (r_n + 1); the spatial space is shared
  for (std::size_t n = 1; n <= graded.num_slabs(); ++n) per_dof += graded.degree(n) + 1;
  const double hp = l2x_bound(graded);
  std::string d = "geometric sigma=0.25 N=8 sum(r+1)=" + std::to_string(per_dof) + " bound " + fmt(hp);
  bool pass = true;
  for (int r : {0, 1, 2}) {
    if (per_dof % (r + 1) != 0) continue;
    const int N = static_cast<int>(per_dof / (r + 1));
    const double u = l2x_bound(TimePartition::uniform(1.0, N, r));
    d += "; uniform r=" + std::to_string(r) + " N=" + std::to_string(N) + " bound " + fmt(u);
    pass = pass && hp < u;
  }
  return {pass, d};
}

}  // namespace

int main()
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"time-reconstruction L2 identity", criterion1},
      {"time-reconstruction Linf identity", criterion2},
      {"lifting Riesz property and space invariance", criterion3},
      {"dG(0) is backward Euler; Galerkin orthogonality", criterion4},
      {"mesh-change identity", criterion5},
      {"elliptic-reconstruction orthogonality", criterion6},
      {"reliability of the L2(X) and Linf(H) bounds", criterion7},
      {"temporal convergence rates", criterion8},
      {"theta reliability against the dual-norm oracle", criterion9},
      {"pointwise form check", criterion10},
      {"lambda policy", criterion11},
      {"hp geometric grading versus uniform steps", criterion12},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("[%s] %2zu %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures;
}
