// Command-line driver: dgcg run <config> [--out DIR] [--theta-mode super|pf|both] [--lambda auto|VALUE] [--check]

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "dgcg/pipeline.hpp"

namespace {

enum Exit { ok = 0, usage = 1, config = 2, solver = 3, tripwire = 4 };

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"hp dG-in-time / P1-in-space heat solver with a posteriori error bounds"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "solve, estimate and certify as described by a JSON config");
  std::string config_path, out_dir, theta_mode, lambda;
  bool check = false;
  run->add_option("config", config_path, "run configuration (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides output.dir)");
  run->add_option("--theta-mode", theta_mode, "time indicator mode")->check(CLI::IsMember({"super", "pf", "both"}));
  run->add_option("--lambda", lambda, "'auto' for min(1, 1/t_n) or a fixed value in [0,1]");
  run->add_flag("--check", check, "run the invariant checks and fail on any tripwire");
  CLI11_PARSE(app, argc, argv);

  dgcg::RunConfig cfg;
  try {
    cfg = dgcg::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (theta_mode == "super") cfg.theta = dgcg::ThetaSelection::Super;
    if (theta_mode == "pf") cfg.theta = dgcg::ThetaSelection::Pf;
    if (theta_mode == "both") cfg.theta = dgcg::ThetaSelection::Both;
    if (lambda == "auto") cfg.lambda.reset();
    else if (!lambda.empty()) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(lambda, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != lambda.size() || !(v >= 0.0 && v <= 1.0)) throw dgcg::ConfigError("--lambda", "expected auto or a value in [0,1]");
      cfg.lambda = v;
    }
  } catch (const dgcg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  }

  dgcg::RunResult result;
  try {
    result = dgcg::run(cfg, check);
  } catch (const dgcg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config;
  } catch (const dgcg::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return solver;
  }

  try {
    dgcg::write_reports(result, cfg.out_dir, check);
  } catch (const std::exception& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return usage;
  }
  std::cout << dgcg::summary_text(result, check);

  if (check) {
    const auto failed = result.failed_checks();
    if (!failed.empty()) {
      for (const auto& f : failed) std::cerr << "tripwire: " << f << "\n";
      return tripwire;
    }
  }
  return ok;
}
