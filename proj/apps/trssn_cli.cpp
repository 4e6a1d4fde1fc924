// Command line front end: `trssn solve` runs one solver on one problem,
// `trssn bench` runs the configured grid. Both write per-iteration CSV
// traces plus summary.csv / summary.md into the output directory.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trssn/bench.hpp"

namespace {

struct CommonOpts {
  std::string config, out_dir, problem, data;
  double mu = 0.0, tol = 0.0, time_budget = 0.0;
  long max_iters = 0, n = 0;
  std::uint64_t seed = 0;
  int adaptive = -1;
  CLI::Option* o_config = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_problem = nullptr;
  CLI::Option* o_data = nullptr;
  CLI::Option* o_mu = nullptr;
  CLI::Option* o_tol = nullptr;
  CLI::Option* o_budget = nullptr;
  CLI::Option* o_iters = nullptr;
  CLI::Option* o_n = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_adaptive = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  o.o_config = sub->add_option("--config", o.config, "key=value config file");
  o.o_out = sub->add_option("--out-dir", o.out_dir, "directory for traces and summaries");
  o.o_problem =
      sub->add_option("--problem", o.problem, "problem type: quadl1 | logistic | compression");
  o.o_data = sub->add_option("--data", o.data, "dataset path (libsvm or pgm)");
  o.o_mu = sub->add_option("--mu", o.mu, "l1 weight; omit for the problem default");
  o.o_tol = sub->add_option("--tol", o.tol, "termination tolerance");
  o.o_budget = sub->add_option("--time-budget", o.time_budget, "wall clock budget in seconds");
  o.o_iters = sub->add_option("--max-iters", o.max_iters, "iteration cap");
  o.o_n = sub->add_option("--n", o.n, "synthetic quadl1 dimension");
  o.o_seed = sub->add_option("--seed", o.seed, "instance seed");
  o.o_adaptive = sub->add_option("--adaptive-lambda", o.adaptive,
                                 "0/1 override of the per-problem default")
                     ->check(CLI::Range(0, 1));
}

trssn::BenchConfig build_config(const CommonOpts& o) {
  trssn::BenchConfig cfg;
  if (*o.o_config) cfg = trssn::parse_bench_config_file(o.config);
  if (*o.o_out) cfg.out_dir = o.out_dir;
  if (*o.o_problem) cfg.problem = o.problem;
  if (*o.o_data) cfg.data = o.data;
  if (*o.o_mu) cfg.mu = o.mu;
  if (*o.o_tol) cfg.tol = o.tol;
  if (*o.o_budget) cfg.time_budget = o.time_budget;
  if (*o.o_iters) cfg.max_iters = o.max_iters;
  if (*o.o_n) cfg.n = o.n;
  if (*o.o_seed) cfg.seed = o.seed;
  if (*o.o_adaptive) cfg.adaptive_lambda = o.adaptive;
  return cfg;
}

void print_summary(const trssn::BenchSummary& sum, const trssn::BenchConfig& cfg) {
  std::printf("psi* = %.17g\n", sum.psi_star);
  std::printf("%-14s %-14s %7s %10s %12s %12s\n", "solver", "status", "iters", "seconds",
              "rel_err", "it@1e-10");
  for (const trssn::SummaryRow& r : sum.rows) {
    if (r.failed) {
      std::printf("%-14s failed: %s\n", r.solver_id.c_str(), r.error.c_str());
      continue;
    }
    std::printf("%-14s %-14s %7ld %10.4f %12.3e %12ld\n", r.solver_id.c_str(), r.status.c_str(),
                r.iters, r.seconds, r.final_rel_err, r.iters_to[2]);
    if (!std::isnan(r.mask_density))
      std::printf("%-14s mask density %.2f%%\n", "", r.mask_density);
  }
  std::printf("traces and summary written to %s\n", cfg.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trust-region semismooth Newton solver and first-order baselines"};
  app.require_subcommand(1);

  CommonOpts so, bo;
  std::string solver_id;
  std::vector<std::string> solver_list;

  CLI::App* solve = app.add_subcommand("solve", "run one solver on one problem");
  add_common(solve, so);
  solve->add_option("--solver", solver_id, "trssn | trssn-lbfgs | fista | sparsa")->required();

  CLI::App* bench = app.add_subcommand("bench", "run the configured solver grid");
  add_common(bench, bo);
  CLI::Option* o_solvers =
      bench->add_option("--solvers", solver_list, "comma separated solver list")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    trssn::BenchConfig cfg = build_config(solve->parsed() ? so : bo);
    if (solve->parsed())
      cfg.solvers = {solver_id};
    else if (*o_solvers)
      cfg.solvers = solver_list;
    trssn::BenchSummary sum = trssn::run_benchmark(cfg);
    print_summary(sum, cfg);
    for (const trssn::SummaryRow& r : sum.rows)
      if (r.failed || r.status != "converged") return 2;
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
