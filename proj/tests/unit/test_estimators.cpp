#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dgcg/estimators.hpp"

using namespace dgcg;

namespace {

constexpr double pi = std::numbers::pi;

// ||v||_{X'} from below by a Riesz solve with the unit-coefficient Gram matrix on a refined mesh.
double riesz_dual_norm(const Discretization& disc, const FeFunction& v, int depth)
{
  const auto fine = refine(v.space, depth);
  const auto b = load_vector(disc, fine, v);
  const auto psi = disc.ops(fine).laplace_solve(b);
  double s = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) s += b[j] * psi[j];
  return std::sqrt(s);
}

// Errors of the P1 Galerkin solution for -(a w')' = 1 against a fine-mesh solve (nodally exact in 1D
// when the coefficient breakpoints are fine vertices).
struct ErrorPair {
  double x, h;
};

ErrorPair galerkin_errors(const Discretization& disc, const FeFunction& wh, const FeFunction& g, int depth)
{
  const auto fine = refine(wh.space, depth);
  const FeFunction w(fine, disc.ops(fine).stiffness_solve(load_vector(disc, fine, g)));
  const auto e = w - prolong(wh, fine);
  return {x_norm(disc, e), l2_norm(disc, e)};
}

FeFunction galerkin(const Discretization& disc, const FeSpace& s, const FeFunction& g)
{
  return FeFunction(s, disc.ops(s).stiffness_solve(load_vector(disc, s, g)));
}

}  // namespace

TEST(EllipticEstimate, ZeroResidualGivesZero)
{
  const auto s = FeSpace::uniform(3);
  const EllipticConstants c;
  EXPECT_EQ(elliptic_estimate(NormTag::X, c, PiecewiseConstant(), FeFunction(s), Load(FeFunction(s))), 0.0);
  try {
    elliptic_estimate(NormTag::X, c, PiecewiseConstant(), FeFunction(s), Load());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "load not representable");
  }
  EXPECT_THROW(elliptic_estimate(NormTag::X, c, PiecewiseConstant(), FeFunction(s), Load(FeFunction(FeSpace::uniform(2, 12)))),
               std::invalid_argument);
}

TEST(EllipticEstimate, PoissonWithUnitLoad)
{
  // w = x(1-x)/2; the Galerkin solution is its interpolant; ||(w - I w)'||_K = h^{3/2}/sqrt(12)
  Discretization disc(PiecewiseConstant(1.0));
  const EllipticConstants c;
  std::vector<double> est;
  for (int level = 2; level <= 5; ++level) {
    const auto s = FeSpace::uniform(level);
    const auto wh = nodal_interpolant(s, [](double x) { return 0.5 * x * (1 - x); });
    const Load one(Function1([](double) { return 1.0; }));
    const double ex = elliptic_estimate(NormTag::X, c, disc.coefficient(), wh, one);
    const double h = s.h(0);
    const double true_x = h / std::sqrt(12.0);
    EXPECT_GE(ex / true_x, 1.0);
    EXPECT_LE(ex / true_x, 10.0);
    // ||w - I w|| = h^2/sqrt(120)
    const double eh = elliptic_estimate(NormTag::H, c, disc.coefficient(), wh, one);
    EXPECT_GE(eh, h * h / std::sqrt(120.0));
    EXPECT_NEAR(elliptic_estimate(NormTag::XDual, c, disc.coefficient(), wh, one), eh / pi, 1e-15);
    est.push_back(ex);
  }
  for (std::size_t i = 1; i < est.size(); ++i) EXPECT_NEAR(std::log2(est[i - 1] / est[i]), 1.0, 0.15);
}

TEST(EllipticEstimate, ReliableAcrossCoefficientJumps)
{
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  // breakpoints inside coarse elements, on vertices of the reference mesh
  PiecewiseConstant a({0.3125, 0.6875}, {1.0, 20.0, 0.25});
  Discretization disc(a);
  const auto c = constants_for(a);
  for (int level : {1, 2, 3}) {
    const auto s = FeSpace::uniform(level);
    FeFunction g(refine(s, 2));
    for (double& v : g.values) v = d(gen);
    const auto wh = galerkin(disc, s, g);
    const auto err = galerkin_errors(disc, wh, g, 8);
    EXPECT_GE(elliptic_estimate(NormTag::X, c, a, wh, Load(g)), err.x) << level;
    EXPECT_GE(elliptic_estimate(NormTag::H, c, a, wh, Load(g)), err.h) << level;
    EXPECT_GE(elliptic_estimate(NormTag::XDual, c, a, wh, Load(g)), riesz_dual_norm(disc, galerkin(disc, refine(s, 8), g) - prolong(wh, refine(s, 8)), 0));
  }
}

TEST(DualNormBound, BoundsFineRieszNorm)
{
  PiecewiseConstant a({0.5}, {1.0, 2.0});
  Discretization disc(a);
  const auto c = constants_for(a);
  const auto s = FeSpace::uniform(4);
  EXPECT_EQ(dual_norm_bound(disc, c, s, FeFunction(s)).value, 0.0);
  auto v = nodal_interpolant(s, [](double x) { return std::sin(3 * pi * x) + x; });
  const auto b = dual_norm_bound(disc, c, s, v);
  const double oracle = riesz_dual_norm(disc, v, 6);
  EXPECT_GE(b.value / oracle, 1.0);
  EXPECT_LE(b.value / oracle, 3.0);
  EXPECT_NEAR(dual_norm_bound(disc, c, s, -2.5 * v).value, 2.5 * b.value, 1e-12 * b.value);
}

TEST(ExactDualNorm, ConstantLoadAndPointLoad)
{
  EXPECT_NEAR(exact_dual_norm([](double) { return 1.0; }, {}, {}), 1.0 / std::sqrt(12.0), 1e-14);
  EXPECT_NEAR(exact_dual_norm([](double) { return 0.0; }, {{0.5, 1.0}}, {}), 0.5, 1e-14);
  // the Riesz representer of the unit load is x(1-x)/2 with ||psi'|| = 1/sqrt(12); a fine P1 solve
  // sees a load that is 1 away from the boundary elements
  Discretization disc(PiecewiseConstant(1.0));
  const auto s = FeSpace::uniform(10);
  FeFunction one(s, std::vector<double>(s.dim(), 1.0));
  EXPECT_NEAR(riesz_dual_norm(disc, one, 0), 1.0 / std::sqrt(12.0), 2e-3);
}

TEST(MeshChange, IdentityAgainstQuadrature)
{
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Discretization disc(PiecewiseConstant(1.0));
  const auto s = FeSpace::uniform(3);
  for (int r = 0; r <= 6; ++r) {
    FeFunction w(s);
    for (double& v : w.values) v = d(gen);
    const double tau = 0.37;
    const auto chi = lift(w, 1.0, 1.0 + tau, r);
    const double quad = integrate(
        [&](double t) {
          const double n = l2_norm(disc, chi.value(t));
          return n * n;
        },
        1.0, 1.0 + tau, r + 2);
    const double wn = l2_norm(disc, w);
    EXPECT_NEAR(quad / ((r + 1.0) * (r + 1.0) / tau * wn * wn), 1.0, 1e-10);
    // |kappa| has kinks; resolve them with a composite rule
    double l1 = 0.0;
    const int cells = 4000;
    for (int k = 0; k < cells; ++k)
      l1 += integrate([&](double t) { return l2_norm(disc, chi.value(t)); }, 1.0 + tau * k / cells, 1.0 + tau * (k + 1) / cells, 2);
    EXPECT_NEAR(l1, wn * LiftingKernel::of(r).abs_integral(), 1e-6 * l1);
  }
}

TEST(MeshChange, VanishesWithoutCoarsening)
{
  auto prob = make_problem(PiecewiseConstant(1.0), catalog::sinpi_expdecay(), 1.0);
  Discretization disc(prob.coefficient);
  const auto part = TimePartition::uniform(1.0, 3, 1);
  const auto refining = solve_all(disc, prob, part, {FeSpace::uniform(2), FeSpace::uniform(3), FeSpace::uniform(4), FeSpace::uniform(5)});
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_LT(mesh_change_indicator(disc, refining, n).l2t, 1e-28);
  const auto coarsening = solve_all(disc, prob, part, {FeSpace::uniform(4), FeSpace::uniform(4), FeSpace::uniform(2), FeSpace::uniform(3)});
  const auto m = mesh_change_indicator(disc, coarsening, 2);
  EXPECT_GT(m.l2t, 0.0);
  // r = 1: int eta^2 = 4/tau ||w||^2
  EXPECT_NEAR(m.l2t, 4.0 / part.tau(2) * std::pow(l2_norm(disc, m.jump), 2), 1e-14);
}

TEST(MeshChange, HandValue)
{
  // r = 0, tau = 0.5, ||w|| = 2 -> 8
  Discretization disc(PiecewiseConstant(1.0));
  const auto s = FeSpace::uniform(1);
  FeFunction w(s, {2.0 * std::sqrt(3.0)});
  EXPECT_NEAR(l2_norm(disc, w), 2.0, 1e-14);
  MeshChangeIndicator m;
  m.jump = w;
  m.degree = 0;
  m.tau = 0.5;
  EXPECT_NEAR(m.profile(disc, 0.3), 4.0, 1e-14);
  const auto chi = lift(w, 0.0, 0.5, 0);
  EXPECT_NEAR(0.5 * std::pow(l2_norm(disc, chi.value(0.2)), 2), 8.0, 1e-13);
}

TEST(Theta, ZeroWithoutJumps)
{
  // stationary data with U0 the Ritz solution keeps U constant: no jumps at all
  PiecewiseConstant a(1.0);
  Discretization disc(a);
  const auto s = FeSpace::uniform(3);
  const auto ritz = ritz_project(disc, s, [](double x) { return pi * std::cos(pi * x); });
  const auto aw = discrete_elliptic_apply(disc, ritz);
  Problem p = make_problem(a, [](double, double) { return 0.0; }, [](double) { return 0.0; }, 1.0);
  // f = A_h U as a time-constant FE source, initial datum U
  p.source = [aw](double x, double) { return aw(x); };
  p.initial = [ritz](double x) { return ritz(x); };
  const auto sol = solve_all(disc, p, TimePartition::uniform(1.0, 2, 1), s);
  const auto c = constants_for(a);
  for (std::size_t n = 1; n <= 2; ++n) {
    EXPECT_LT(theta_indicator(disc, c, sol, n, ThetaMode::Super), 1e-9);
    EXPECT_LT(theta_indicator(disc, c, sol, n, ThetaMode::Pf), 1e-9);
    EXPECT_LT(space_indicator_l2(disc, c, sol, n), 1e-16);
  }
}

TEST(Theta, OneDofDenseArithmetic)
{
  // one interior dof: m = 1/3, k = 4 (a = 1, h = 1/2), A = k/m = 12
  PiecewiseConstant a(1.0);
  Discretization disc(a);
  const auto s = FeSpace::uniform(1);
  Problem p = make_problem(a, [](double, double) { return 0.0; }, [](double x) { return 1.0 - std::abs(2 * x - 1); }, 1.0);
  const auto sol = solve_all(disc, p, TimePartition::uniform(0.5, 1, 0), s);
  const double u0 = 1.0;
  const double u1 = (1.0 / 3.0) / (1.0 / 3.0 + 0.5 * 4.0);  // backward Euler
  EXPECT_NEAR(sol.slab(1).modes[0].values[0], u1, 1e-14);
  const double jump_u = u1 - u0, jump_au = 12.0 * jump_u;
  const double C2 = 0.5 / 3.0;
  // (v, Psi) = jump_au * jump_u * m; E_X term: eta = (h/pi)||v||_K per element, ||v||_K^2 = jump_au^2 h/3
  const double energy = jump_au * jump_u / 3.0;
  const double eta2 = 2 * std::pow(0.5 / pi, 2) * jump_au * jump_au * 0.5 / 3.0;
  const auto c = constants_for(a);
  EXPECT_NEAR(theta_indicator(disc, c, sol, 1, ThetaMode::Super), std::sqrt(C2 * energy + C2 * eta2), 1e-13);
  EXPECT_NEAR(theta_indicator(disc, c, sol, 1, ThetaMode::Pf), std::sqrt(C2) / pi * std::abs(jump_au) / std::sqrt(3.0), 1e-13);
}

TEST(Theta, ReliableAgainstRieszOracle)
{
  std::mt19937 gen(21);
  std::uniform_int_distribution<int> lvl(2, 5);
  PiecewiseConstant a({0.5}, {1.0, 3.0});
  Discretization disc(a);
  const auto c = constants_for(a);
  auto prob = make_problem(a, catalog::sinpi_expdecay(), 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FeSpace> spaces{FeSpace::uniform(lvl(gen)), FeSpace::uniform(lvl(gen)), FeSpace::uniform(lvl(gen))};
    const auto sol = solve_all(disc, prob, TimePartition::uniform(1.0, 2, trial % 3), spaces);
    for (std::size_t n = 1; n <= 2; ++n) {
      const double C = reconstruction_constant(sol.partition.tau(n), sol.partition.degree(n));
      const double oracle = C * riesz_dual_norm(disc, discrete_elliptic_jump(disc, sol, n), 4);
      EXPECT_GE(theta_indicator(disc, c, sol, n, ThetaMode::Super), oracle);
      EXPECT_GE(theta_indicator(disc, c, sol, n, ThetaMode::Pf), oracle);
    }
  }
}

TEST(SpaceIndicator, RefinementOnlyIsNotSmallerThanFixedMesh)
{
  std::mt19937 gen(4);
  PiecewiseConstant a(1.0);
  Discretization disc(a);
  const auto c = constants_for(a);
  auto prob = make_problem(a, catalog::sinpi_expdecay(), 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int l = 2 + trial % 3;
    const auto part = TimePartition::uniform(1.0, 2, trial % 3);
    const auto changed = solve_all(disc, prob, part, {FeSpace::uniform(l), FeSpace::uniform(l), FeSpace::uniform(l + 1)});
    // same discrete states, estimator evaluated on V_2 instead of V- = V_1
    auto d = space_indicator_data(disc, changed, 2);
    auto fixed = d;
    const FeSpace v2 = changed.space(2);
    const auto du = changed.slab(2).derivative_poly();
    const auto chi_u = lift(jump(changed, 1), 0.5, 1.0, part.degree(2));
    for (int i = 0; i <= d.ritz.degree(); ++i) {
      const FeFunction dui = i <= du.degree() ? du.modes[i] : FeFunction(v2);
      fixed.ritz.modes[i] = ritz_project(disc, v2, dui + prolong(chi_u.modes[i], v2));
    }
    for (double t : {0.55, 0.7, 0.95})
      EXPECT_GE(space_indicator(disc, c, d, t), space_indicator(disc, c, fixed, t) * (1 - 1e-12) - 1e-14);
  }
}

TEST(Oscillation, VanishesForDiscreteSourceAndDecaysAtThirdOrder)
{
  PiecewiseConstant a(1.0);
  Discretization disc(a);
  const auto c = constants_for(a);
  auto zero = make_problem(a, [](double, double) { return 0.0; }, [](double) { return 0.0; }, 1.0);
  const auto s = FeSpace::uniform(3);
  const auto sol0 = solve_all(disc, zero, TimePartition::uniform(1.0, 1, 1), s);
  EXPECT_EQ(oscillation_indicator(disc, c, zero, sol0, 1), 0.0);

  // f = (1 + t) * hat-interpolant lies in P_1(V)
  auto in_space = zero;
  const auto phi = nodal_interpolant(s, [](double x) { return x * (1 - x); });
  in_space.source = [phi](double x, double t) { return (1 + t) * phi(x); };
  EXPECT_LT(oscillation_indicator(disc, c, in_space, solve_all(disc, in_space, TimePartition::uniform(1.0, 1, 1), s), 1), 1e-24);

  auto smooth = zero;
  smooth.source = [](double x, double) { return std::sin(pi * x); };
  std::vector<double> v;
  for (int l = 3; l <= 6; ++l)
    v.push_back(std::sqrt(oscillation_indicator(disc, c, smooth, solve_all(disc, smooth, TimePartition::uniform(1.0, 1, 0), FeSpace::uniform(l)), 1)));
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_NEAR(std::log2(v[i - 1] / v[i]), 3.0, 0.2);
}
