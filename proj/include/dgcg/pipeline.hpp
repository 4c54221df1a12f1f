#pragma once

/// \file pipeline.hpp
/// Experiment driver: JSON run configs, solve -> estimate -> certify -> verify over a sweep, and
/// CSV / text reports.

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgcg/bounds.hpp"
#include "dgcg/estimators.hpp"
#include "dgcg/problem.hpp"
#include "dgcg/spatial_fem.hpp"
#include "dgcg/time_dg.hpp"
#include "dgcg/verify.hpp"

namespace dgcg {

/// Malformed or inconsistent configuration; `field` is a JSON pointer or "line N".
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& field, const std::string& what) : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class ThetaSelection { Super, Pf, Both };

struct ProblemSpec {
  std::string solution = "sinpi_expdecay";
  std::vector<double> breakpoints;
  std::vector<double> values{1.0};
  double final_time = 1.0;
  int terms = 16;  // rough_ic series length
};

struct PartitionSpec {
  std::string type = "uniform";  // uniform | geometric | explicit
  int slabs = 4;
  int degree = 1;
  double sigma = 0.25;
  double slope = 1.0;
  std::vector<double> nodes;
  std::vector<int> degrees;
};

struct MeshSpec {
  std::string type = "uniform";  // uniform | alternating | per_slab | cuts
  int level = 4;
  std::vector<int> levels;
  std::vector<std::vector<double>> cuts;
  int max_depth = FeSpace::default_max_depth;
};

struct SweepSpec {
  int tau_points = 1;  // successive halvings of every slab
  int h_points = 1;    // successive uniform refinements of every mesh
  std::vector<int> degrees;
};

struct RunConfig {
  std::string name = "run";
  ProblemSpec problem;
  PartitionSpec partition;
  MeshSpec mesh;
  ThetaSelection theta = ThetaSelection::Super;
  std::string elliptic_variant = "residual";
  std::optional<double> lambda;  // empty: min(1, 1/t_n)
  SweepSpec sweep;
  OracleSettings oracle;
  std::string out_dir = "out";
};

namespace detail {

inline std::string pointer(const std::string& base, const std::string& key) { return base + "/" + key; }

template <class T>
T get_or(const nlohmann::json& j, const std::string& base, const std::string& key, T fallback)
{
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(pointer(base, key), "wrong type");
  }
}

inline const nlohmann::json& object_or_empty(const nlohmann::json& j, const std::string& key, const std::string& base)
{
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(pointer(base, key), "expected an object");
  return j.at(key);
}

inline void reject_unknown(const nlohmann::json& j, const std::string& base, std::initializer_list<const char*> known)
{
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(pointer(base, it.key()), "unknown field");
  }
}

inline int line_of(const std::string& text, std::size_t byte)
{
  int line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("line " + std::to_string(detail::line_of(text, e.byte)), "invalid JSON");
  }
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  detail::reject_unknown(j, "", {"name", "problem", "partition", "mesh", "estimator", "lambda", "sweep", "oracle", "output"});

  RunConfig c;
  c.name = detail::get_or<std::string>(j, "", "name", c.name);

  const auto& p = detail::object_or_empty(j, "problem", "");
  detail::reject_unknown(p, "/problem", {"solution", "coefficient", "final_time", "terms"});
  c.problem.solution = detail::get_or<std::string>(p, "/problem", "solution", c.problem.solution);
  c.problem.final_time = detail::get_or<double>(p, "/problem", "final_time", c.problem.final_time);
  c.problem.terms = detail::get_or<int>(p, "/problem", "terms", c.problem.terms);
  if (!(c.problem.final_time > 0)) throw ConfigError("/problem/final_time", "must be positive");
  if (c.problem.terms < 1) throw ConfigError("/problem/terms", "must be at least 1");
  const auto& coef = detail::object_or_empty(p, "coefficient", "/problem");
  detail::reject_unknown(coef, "/problem/coefficient", {"breakpoints", "values"});
  c.problem.breakpoints = detail::get_or<std::vector<double>>(coef, "/problem/coefficient", "breakpoints", {});
  c.problem.values = detail::get_or<std::vector<double>>(coef, "/problem/coefficient", "values", c.problem.values);
  if (c.problem.values.size() != c.problem.breakpoints.size() + 1)
    throw ConfigError("/problem/coefficient/values", "need one value per piece");
  for (double v : c.problem.values)
    if (!(v > 0)) throw ConfigError("/problem/coefficient/values", "coercivity violated");

  const auto& t = detail::object_or_empty(j, "partition", "");
  detail::reject_unknown(t, "/partition", {"type", "slabs", "degree", "sigma", "slope", "nodes", "degrees"});
  auto& ps = c.partition;
  ps.type = detail::get_or<std::string>(t, "/partition", "type", ps.type);
  ps.slabs = detail::get_or<int>(t, "/partition", "slabs", ps.slabs);
  ps.degree = detail::get_or<int>(t, "/partition", "degree", ps.degree);
  ps.sigma = detail::get_or<double>(t, "/partition", "sigma", ps.sigma);
  ps.slope = detail::get_or<double>(t, "/partition", "slope", ps.slope);
  ps.nodes = detail::get_or<std::vector<double>>(t, "/partition", "nodes", {});
  ps.degrees = detail::get_or<std::vector<int>>(t, "/partition", "degrees", {});
  if (ps.type != "uniform" && ps.type != "geometric" && ps.type != "explicit")
    throw ConfigError("/partition/type", "expected uniform, geometric or explicit");
  if (ps.type != "explicit" && ps.slabs < 1) throw ConfigError("/partition/slabs", "must be at least 1");
  if (ps.degree < 0 || ps.degree > max_time_degree) throw ConfigError("/partition/degree", "out of range");
  if (ps.type == "geometric" && !(ps.sigma > 0 && ps.sigma < 1)) throw ConfigError("/partition/sigma", "must lie in (0,1)");
  if (ps.type == "explicit" && (ps.nodes.size() < 2 || ps.degrees.size() + 1 != ps.nodes.size()))
    throw ConfigError("/partition/nodes", "need N+1 nodes and N degrees");

  const auto& m = detail::object_or_empty(j, "mesh", "");
  detail::reject_unknown(m, "/mesh", {"type", "level", "levels", "cuts", "max_depth"});
  c.mesh.type = detail::get_or<std::string>(m, "/mesh", "type", c.mesh.type);
  c.mesh.level = detail::get_or<int>(m, "/mesh", "level", c.mesh.level);
  c.mesh.levels = detail::get_or<std::vector<int>>(m, "/mesh", "levels", {});
  c.mesh.cuts = detail::get_or<std::vector<std::vector<double>>>(m, "/mesh", "cuts", {});
  c.mesh.max_depth = detail::get_or<int>(m, "/mesh", "max_depth", c.mesh.max_depth);
  if (c.mesh.type != "uniform" && c.mesh.type != "alternating" && c.mesh.type != "per_slab" && c.mesh.type != "cuts")
    throw ConfigError("/mesh/type", "expected uniform, alternating, per_slab or cuts");
  if (c.mesh.max_depth < 1 || c.mesh.max_depth > 30) throw ConfigError("/mesh/max_depth", "out of range");
  if (c.mesh.type == "uniform" && (c.mesh.level < 0 || c.mesh.level > c.mesh.max_depth)) throw ConfigError("/mesh/level", "out of range");
  if ((c.mesh.type == "alternating" && c.mesh.levels.size() != 2) || (c.mesh.type == "per_slab" && c.mesh.levels.empty()))
    throw ConfigError("/mesh/levels", "wrong length");
  for (int l : c.mesh.levels)
    if (l < 0 || l > c.mesh.max_depth) throw ConfigError("/mesh/levels", "out of range");
  if (c.mesh.type == "cuts" && c.mesh.cuts.empty()) throw ConfigError("/mesh/cuts", "missing");

  const auto& e = detail::object_or_empty(j, "estimator", "");
  detail::reject_unknown(e, "/estimator", {"theta_mode", "elliptic_variant"});
  const auto mode = detail::get_or<std::string>(e, "/estimator", "theta_mode", "super");
  if (mode == "super") c.theta = ThetaSelection::Super;
  else if (mode == "pf") c.theta = ThetaSelection::Pf;
  else if (mode == "both") c.theta = ThetaSelection::Both;
  else throw ConfigError("/estimator/theta_mode", "expected super, pf or both");
  c.elliptic_variant = detail::get_or<std::string>(e, "/estimator", "elliptic_variant", c.elliptic_variant);
  if (c.elliptic_variant != "residual") throw ConfigError("/estimator/elliptic_variant", "only 'residual' is available");

  if (j.contains("lambda")) {
    const auto& l = j.at("lambda");
    if (l.is_string() && l.get<std::string>() == "auto") c.lambda.reset();
    else if (l.is_number()) c.lambda = l.get<double>();
    else throw ConfigError("/lambda", "expected \"auto\" or a number");
    if (c.lambda && !(*c.lambda >= 0 && *c.lambda <= 1)) throw ConfigError("/lambda", "must lie in [0,1]");
  }

  const auto& s = detail::object_or_empty(j, "sweep", "");
  detail::reject_unknown(s, "/sweep", {"halve_tau", "halve_h", "degrees"});
  c.sweep.tau_points = detail::get_or<int>(s, "/sweep", "halve_tau", 1);
  c.sweep.h_points = detail::get_or<int>(s, "/sweep", "halve_h", 1);
  c.sweep.degrees = detail::get_or<std::vector<int>>(s, "/sweep", "degrees", {});
  if (c.sweep.tau_points < 1) throw ConfigError("/sweep/halve_tau", "sweep size must be at least 1");
  if (c.sweep.h_points < 1) throw ConfigError("/sweep/halve_h", "sweep size must be at least 1");
  for (int d : c.sweep.degrees)
    if (d < 0 || d > max_time_degree) throw ConfigError("/sweep/degrees", "out of range");
  if (!c.sweep.degrees.empty() && ps.type == "explicit") throw ConfigError("/sweep/degrees", "not available for explicit partitions");

  const auto& o = detail::object_or_empty(j, "oracle", "");
  detail::reject_unknown(o, "/oracle", {"depth", "space_points", "extra_time_points", "linf_samples"});
  c.oracle.reference_depth = detail::get_or<int>(o, "/oracle", "depth", c.oracle.reference_depth);
  c.oracle.space_points = detail::get_or<int>(o, "/oracle", "space_points", c.oracle.space_points);
  c.oracle.extra_time_points = detail::get_or<int>(o, "/oracle", "extra_time_points", c.oracle.extra_time_points);
  c.oracle.linf_samples = detail::get_or<int>(o, "/oracle", "linf_samples", c.oracle.linf_samples);
  if (c.oracle.reference_depth < 0 || c.oracle.space_points < 1 || c.oracle.extra_time_points < 0 || c.oracle.linf_samples < 0)
    throw ConfigError("/oracle", "out of range");

  const auto& out = detail::object_or_empty(j, "output", "");
  detail::reject_unknown(out, "/output", {"dir"});
  c.out_dir = detail::get_or<std::string>(out, "/output", "dir", c.out_dir);
  return c;
}

inline RunConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// One point of a sweep.
struct SweepPoint {
  std::size_t index = 0;
  int degree = 0;  // swept degree, or the configured one
  int tau_step = 0, h_step = 0;
};

inline std::vector<SweepPoint> sweep_points(const RunConfig& c)
{
  std::vector<int> degrees = c.sweep.degrees;
  if (degrees.empty()) degrees.push_back(c.partition.degree);
  std::vector<SweepPoint> out;
  for (int d : degrees)
    for (int i = 0; i < c.sweep.tau_points; ++i)
      for (int k = 0; k < c.sweep.h_points; ++k) out.push_back({out.size(), d, i, k});
  return out;
}

inline Problem build_problem(const ProblemSpec& s)
{
  PiecewiseConstant a(s.breakpoints, s.values);
  return make_problem(a, catalog::by_name(s.solution, a, s.terms), s.final_time);
}

/// Partition and slab spaces V_0..V_N of a sweep point.
struct Layout {
  TimePartition partition;
  std::vector<FeSpace> spaces;
};

inline Layout build_layout(const RunConfig& c, const SweepPoint& pt)
{
  const auto& ps = c.partition;
  const double T = c.problem.final_time;
  TimePartition base;
  if (ps.type == "uniform") base = TimePartition::uniform(T, ps.slabs, pt.degree);
  else if (ps.type == "geometric") base = TimePartition::geometric(T, ps.sigma, ps.slabs, ps.slope, pt.degree);
  else {
    if (std::abs(ps.nodes.back() - T) > 1e-14 * T) throw ConfigError("/partition/nodes", "last node must equal final_time");
    base = TimePartition(ps.nodes, ps.degrees);
  }
  const std::size_t N = base.num_slabs();

  std::vector<FeSpace> spaces;
  const auto& m = c.mesh;
  if (m.type == "uniform") spaces.assign(N + 1, FeSpace::uniform(m.level, m.max_depth));
  else if (m.type == "alternating")
    for (std::size_t n = 0; n <= N; ++n) spaces.push_back(FeSpace::uniform(m.levels[n % 2], m.max_depth));
  else if (m.type == "per_slab") {
    if (m.levels.size() != N && m.levels.size() != N + 1) throw ConfigError("/mesh/levels", "need N or N+1 entries");
    for (int l : m.levels) spaces.push_back(FeSpace::uniform(l, m.max_depth));
  } else {
    if (m.cuts.size() != N && m.cuts.size() != N + 1) throw ConfigError("/mesh/cuts", "need N or N+1 entries");
    try {
      for (const auto& cut : m.cuts) spaces.push_back(FeSpace::from_cuts(cut, m.max_depth));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/mesh/cuts", e.what());
    }
  }
  if (spaces.size() == N) spaces.insert(spaces.begin(), spaces.front());

  try {
    for (auto& s : spaces) s = refine(s, pt.h_step);
  } catch (const std::invalid_argument&) {
    throw ConfigError("/sweep/halve_h", "exceeds the hierarchy depth");
  }

  // split every slab 2^tau_step times; children inherit the parent's space and degree
  std::vector<double> nodes{0.0};
  std::vector<int> degrees;
  std::vector<FeSpace> fine{spaces[0]};
  const std::size_t parts = std::size_t{1} << pt.tau_step;
  for (std::size_t n = 1; n <= N; ++n) {
    const double t0 = base.node(n - 1), t1 = base.node(n);
    for (std::size_t k = 1; k <= parts; ++k) {
      nodes.push_back(k == parts ? t1 : t0 + (t1 - t0) * double(k) / double(parts));
      degrees.push_back(base.degree(n));
      fine.push_back(spaces[n]);
    }
  }
  return {TimePartition(nodes, degrees), fine};
}

/// Results of one sweep point.
struct PointResult {
  SweepPoint point;
  Layout layout;
  IndicatorBreakdown breakdown;
  std::vector<ErrorReport> reports;  // one per horizon t_n
  std::vector<double> theta_oracle;  // per slab, filled for theta mode "both" and for checks
  std::vector<std::string> failed_checks;
  bool manufactured = false;

  const ErrorReport& final_report() const { return reports.back(); }
  std::size_t dofs() const
  {
    std::size_t s = 0;
    for (std::size_t n = 1; n <= layout.partition.num_slabs(); ++n) s += (layout.partition.degree(n) + 1) * layout.spaces[n].dim();
    return s;
  }
  double min_h() const
  {
    double h = 1.0;
    for (const auto& s : layout.spaces)
      for (std::size_t k = 0; k < s.num_elements(); ++k) h = std::min(h, s.h(k));
    return h;
  }
  double max_tau() const
  {
    double t = 0.0;
    for (std::size_t n = 1; n <= layout.partition.num_slabs(); ++n) t = std::max(t, layout.partition.tau(n));
    return t;
  }
  double theta_accumulated() const
  {
    double s = 0.0;
    for (const auto& sl : breakdown.slabs) s += sl.theta * sl.theta;
    return std::sqrt(s);
  }
};

struct CheckTolerances {
  double effectivity_slack = 1e-6;
  double effectivity_cap = 200.0;
  double galerkin = 1e-10;
  double pointwise = 1e-6;
  double theta_slack = 1e-12;
};

inline PointResult run_point(const RunConfig& c, const Problem& problem, const SweepPoint& pt, bool check,
                             const CheckTolerances& tol = {})
{
  PointResult r;
  r.point = pt;
  try {
    r.layout = build_layout(c, pt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/partition", e.what());
  }
  r.manufactured = problem.manufactured.has_value();
  const Discretization disc(problem.coefficient);
  const auto consts = constants_for(problem);
  DgSolution sol;
  try {
    sol = solve_all(disc, problem, r.layout.partition, r.layout.spaces);
  } catch (const std::exception& e) {
    throw SolverError(e.what());
  }
  const ThetaMode mode = c.theta == ThetaSelection::Pf ? ThetaMode::Pf : ThetaMode::Super;
  r.breakdown = compute_breakdown(disc, consts, problem, sol, mode);

  const std::size_t N = sol.num_slabs();
  double sq_l2x = 0.0, sq_h1 = 0.0, linf = 0.0;
  if (problem.manufactured) linf = h_error_at(problem, sol.u0_projection(), 0.0, c.oracle.space_points);
  for (std::size_t n = 1; n <= N; ++n) {
    ErrorReport e;
    e.horizon_index = n;
    e.horizon = sol.partition.node(n);
    const double lam = c.lambda ? *c.lambda : choose_lambda(e.horizon);
    e.l2x = assemble_l2x_bound(r.breakdown, consts, lam, n);
    e.linfh = assemble_linfh_bound(r.breakdown, consts, lam, n);
    e.h1xdual = assemble_h1xdual_bound(r.breakdown, consts, rho_l2x_bound(r.breakdown, consts, lam, n), n);
    if (problem.manufactured) {
      sq_l2x += true_error_l2x_slab(sol, problem, n, c.oracle);
      sq_h1 += true_error_h1xdual_slab(sol, problem, n, c.oracle);
      linf = std::max(linf, true_error_linfh_slab(sol, problem, n, c.oracle));
      e.true_l2x = std::sqrt(sq_l2x);
      e.true_h1xdual = std::sqrt(sq_h1);
      e.true_linfh = linf;
    }
    r.reports.push_back(e);
  }

  if (c.theta == ThetaSelection::Both || check)
    for (std::size_t n = 1; n <= N; ++n) r.theta_oracle.push_back(theta_oracle(disc, sol, n, c.oracle.reference_depth));

  if (check) {
    auto fail = [&](const std::string& name) {
      if (std::find(r.failed_checks.begin(), r.failed_checks.end(), name) == r.failed_checks.end()) r.failed_checks.push_back(name);
    };
    for (const auto& e : r.reports) {
      if (!problem.manufactured) break;
      for (const auto& [bound, truth] : {std::pair{e.l2x.value, e.true_l2x}, std::pair{e.linfh.value, e.true_linfh}}) {
        if (bound < (1 - tol.effectivity_slack) * truth) fail("reliability");
        if (truth > 0 && bound > tol.effectivity_cap * truth) fail("effectivity_cap");
      }
      if (e.h1xdual.value < (1 - tol.effectivity_slack) * e.true_h1xdual) fail("reliability_h1xdual");
    }
    for (std::size_t n = 1; n <= N; ++n) {
      if (sol.partition.node(n) >= 1.0 && !lambda_inequality_holds(r.breakdown, n)) fail("lambda_inequality");
      if (slab_residual(disc, problem, sol, n) > tol.galerkin) fail("galerkin_orthogonality");
      const auto pw = pointwise_form_check(disc, sol, n, c.oracle.reference_depth);
      if (pw.form_gap > tol.pointwise || pw.identity_gap > tol.pointwise) fail("pointwise_form");
      const auto& s = r.breakdown.slabs[n - 1];
      const double o = r.theta_oracle[n - 1];
      if (s.theta_super < o * (1 - tol.theta_slack) || s.theta_pf < o * (1 - tol.theta_slack)) fail("theta_oracle");
    }
  }
  return r;
}

struct RunResult {
  RunConfig config;
  std::vector<PointResult> points;

  std::vector<std::string> failed_checks() const
  {
    std::vector<std::string> out;
    for (const auto& p : points)
      for (const auto& f : p.failed_checks)
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    return out;
  }
};

inline RunResult run(const RunConfig& c, bool check = false)
{
  const Problem problem = [&] {
    try {
      return build_problem(c.problem);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/problem", e.what());
    }
  }();
  RunResult out{c, {}};
  for (const auto& pt : sweep_points(c)) out.points.push_back(run_point(c, problem, pt, check));
  return out;
}

namespace detail {

inline std::string num(double v)
{
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class... T>
std::string row(const T&... v)
{
  std::ostringstream os;
  bool first = true;
  auto put = [&](const auto& x) {
    if (!first) os << ',';
    first = false;
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(x)>>) os << num(x);
    else os << x;
  };
  (put(v), ...);
  os << '\n';
  return os.str();
}

/// log2(prev / cur) when both are positive, otherwise empty.
inline std::string order(double prev, double cur)
{
  if (!(prev > 0 && cur > 0)) return "";
  return num(std::log2(prev / cur));
}

}  // namespace detail

inline const char* const bound_term_names[] = {"initial", "elliptic", "mesh_l1", "time", "space", "osc", "mesh_l2",
                                               "linf_jump_max", "linf_elliptic_max", "residual", "rho", "space_seminorm"};

inline std::string indicators_csv(const RunResult& r)
{
  std::string s =
      "sweep,n,t,tau,r,theta,theta_super,theta_pf,space_l2t,mesh_change_l2t,mesh_change_l1t,osc_l2t,elliptic_x_l2t,"
      "linf_jump,linf_elliptic,dim,dim_plus,dim_minus\n";
  for (const auto& p : r.points)
    for (const auto& x : p.breakdown.slabs)
      s += detail::row(p.point.index, x.n, x.t, x.tau, x.degree, x.theta, x.theta_super, x.theta_pf, x.space_l2t, x.mesh_change_l2t,
                       x.mesh_change_l1t, x.osc_l2t, x.elliptic_x_l2t, x.linf_jump, x.linf_elliptic, x.dim, x.dim_plus, x.dim_minus);
  return s;
}

inline std::string bounds_csv(const RunResult& r)
{
  std::string s = "sweep,n,t,norm,lambda,bound,true_error,effectivity";
  for (const char* t : bound_term_names) s += std::string(",") + t;
  s += '\n';
  for (const auto& p : r.points)
    for (const auto& e : p.reports) {
      const std::pair<const CertifiedBound*, double> rows[] = {{&e.l2x, e.true_l2x}, {&e.linfh, e.true_linfh}, {&e.h1xdual, e.true_h1xdual}};
      for (const auto& [b, truth] : rows) {
        std::string line = detail::row(p.point.index, e.horizon_index, e.horizon, to_string(b->kind), b->lambda, b->value,
                                       p.manufactured ? detail::num(truth) : "",
                                       p.manufactured && truth > 0 ? detail::num(b->value / truth) : "");
        line.pop_back();
        for (const char* name : bound_term_names) {
          line += ',';
          for (const auto& t : b->terms)
            if (t.name == name) line += detail::num(t.value);
        }
        s += line + '\n';
      }
    }
  return s;
}

inline std::string theta_compare_csv(const RunResult& r)
{
  std::string s = "sweep,n,theta_super,theta_pf,ratio_pf_over_super,oracle\n";
  for (const auto& p : r.points)
    for (std::size_t k = 0; k < p.breakdown.slabs.size(); ++k) {
      const auto& x = p.breakdown.slabs[k];
      s += detail::row(p.point.index, x.n, x.theta_super, x.theta_pf, x.theta_super > 0 ? detail::num(x.theta_pf / x.theta_super) : "",
                       k < p.theta_oracle.size() ? detail::num(p.theta_oracle[k]) : "");
    }
  return s;
}

/// One row per sweep point at the final horizon; orders against the previous point along the
/// tau and h axes (same degree).
inline std::string rates_csv(const RunResult& r)
{
  std::string s =
      "sweep,degree,tau_step,h_step,slabs,max_tau,min_h,dofs,true_l2x,true_linfh,bound_l2x,bound_linfh,theta_acc,"
      "order_tau_true_l2x,order_tau_theta,order_h_true_l2x,order_h_bound_l2x\n";
  auto find = [&](int degree, int ti, int hi) -> const PointResult* {
    for (const auto& p : r.points)
      if (p.point.degree == degree && p.point.tau_step == ti && p.point.h_step == hi) return &p;
    return nullptr;
  };
  for (const auto& p : r.points) {
    const auto& e = p.final_report();
    const auto* pt = p.point.tau_step > 0 ? find(p.point.degree, p.point.tau_step - 1, p.point.h_step) : nullptr;
    const auto* ph = p.point.h_step > 0 ? find(p.point.degree, p.point.tau_step, p.point.h_step - 1) : nullptr;
    s += detail::row(p.point.index, p.point.degree, p.point.tau_step, p.point.h_step, p.layout.partition.num_slabs(), p.max_tau(), p.min_h(),
                     p.dofs(), e.true_l2x, e.true_linfh, e.l2x.value, e.linfh.value, p.theta_accumulated(),
                     pt ? detail::order(pt->final_report().true_l2x, e.true_l2x) : "",
                     pt ? detail::order(pt->theta_accumulated(), p.theta_accumulated()) : "",
                     ph ? detail::order(ph->final_report().true_l2x, e.true_l2x) : "",
                     ph ? detail::order(ph->final_report().l2x.value, e.l2x.value) : "");
  }
  return s;
}

inline std::string summary_text(const RunResult& r, bool checked)
{
  std::ostringstream os;
  os << std::setprecision(6);
  const auto& c = r.config;
  os << "run: " << c.name << "\nproblem: " << c.problem.solution << ", T = " << c.problem.final_time << "\n";
  os << "theta mode: " << (c.theta == ThetaSelection::Pf ? "pf" : c.theta == ThetaSelection::Both ? "both (bounds use super)" : "super")
     << ", lambda: " << (c.lambda ? detail::num(*c.lambda) : std::string("auto")) << "\n";
  os << "H1(X') bound: derived bound (assembled from the residual and L2(X) bounds)\n\n";
  for (const auto& p : r.points) {
    const auto& e = p.final_report();
    os << "point " << p.point.index << ": r = " << p.point.degree << ", N = " << p.layout.partition.num_slabs() << ", min h = " << p.min_h()
       << ", dofs = " << p.dofs() << "\n";
    auto line = [&](const char* name, const CertifiedBound& b, double truth) {
      os << "  " << name << " bound " << b.value;
      if (p.manufactured) os << "  true " << truth << "  effectivity " << (truth > 0 ? b.value / truth : 0.0);
      os << "\n";
    };
    line("L2(X)  ", e.l2x, e.true_l2x);
    line("Linf(H)", e.linfh, e.true_linfh);
    line("H1(X') ", e.h1xdual, e.true_h1xdual);
  }
  if (checked) {
    const auto failed = r.failed_checks();
    os << "\nchecks: " << (failed.empty() ? "all passed" : "FAILED");
    for (const auto& f : failed) os << " " << f;
    os << "\n";
  }
  return os.str();
}

inline void write_reports(const RunResult& r, const std::string& dir, bool checked)
{
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error(std::string("cannot write ") + name);
    f << text;
  };
  put("indicators.csv", indicators_csv(r));
  put("bounds.csv", bounds_csv(r));
  put("rates.csv", rates_csv(r));
  if (r.config.theta == ThetaSelection::Both) put("theta_compare.csv", theta_compare_csv(r));
  put("summary.txt", summary_text(r, checked));
}

}  // namespace dgcg
