#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trssn/bench.hpp"

using trssn::BenchConfig;
using trssn::Vec;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::string fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("mask density counts strictly positive entries") {
  REQUIRE(trssn::mask_density(Vec::Zero(4)) == 0.0);
  REQUIRE(trssn::mask_density(Vec::Ones(4)) == 100.0);
  Vec c(4);
  c << 0.5, 0.0, 0.0, 1.0;
  REQUIRE(trssn::mask_density(c) == 50.0);
  Vec d(2);
  d << -1.0, 1.0;
  REQUIRE(trssn::mask_density(d) == 50.0);
  REQUIRE(trssn::mask_density(Vec()) == 0.0);
}

TEST_CASE("rel_err uses the guarded denominator") {
  REQUIRE(trssn::rel_err_of(3.0, 2.0) == 0.5);
  REQUIRE(trssn::rel_err_of(1.0, 0.5) == 0.5);
  REQUIRE(trssn::rel_err_of(-2.0, -3.0) == 1.0);
}

TEST_CASE("config parser fills every field") {
  std::istringstream in(
      "# benchmark setup\n"
      "problem = quadl1\n"
      "n = 30\n"
      "mu = 0.2   # trailing comment\n"
      "solvers = trssn, fista ,sparsa\n"
      "tol = 1e-8\n"
      "max_iters = 250\n"
      "time_budget = 1.5\n"
      "out_dir = /tmp/somewhere\n"
      "seed = 99\n"
      "adaptive_lambda = true\n"
      "\n"
      "data = foo.txt\n");
  BenchConfig cfg = trssn::parse_bench_config(in);
  REQUIRE(cfg.problem == "quadl1");
  REQUIRE(cfg.n == 30);
  REQUIRE(cfg.mu == 0.2);
  REQUIRE(cfg.solvers == std::vector<std::string>{"trssn", "fista", "sparsa"});
  REQUIRE(cfg.tol == 1e-8);
  REQUIRE(cfg.max_iters == 250);
  REQUIRE(cfg.time_budget == 1.5);
  REQUIRE(cfg.out_dir == "/tmp/somewhere");
  REQUIRE(cfg.seed == 99);
  REQUIRE(cfg.adaptive_lambda == 1);
  REQUIRE(cfg.data == "foo.txt");
}

TEST_CASE("config parser rejects unknown keys and bad values") {
  std::istringstream bad_key("problem = quadl1\nmaxiters = 3\n");
  REQUIRE_THROWS_WITH(trssn::parse_bench_config(bad_key),
                      Catch::Matchers::ContainsSubstring("line 2") &&
                          Catch::Matchers::ContainsSubstring("unknown key 'maxiters'"));
  std::istringstream bad_num("tol = fast\n");
  REQUIRE_THROWS_WITH(trssn::parse_bench_config(bad_num),
                      Catch::Matchers::ContainsSubstring("bad numeric value"));
  std::istringstream no_eq("problem quadl1\n");
  REQUIRE_THROWS_WITH(trssn::parse_bench_config(no_eq),
                      Catch::Matchers::ContainsSubstring("expected key=value"));
  std::istringstream empty_solver("solvers = trssn,,fista\n");
  REQUIRE_THROWS_WITH(trssn::parse_bench_config(empty_solver),
                      Catch::Matchers::ContainsSubstring("empty solver name"));
  std::istringstream bad_bool("adaptive_lambda = maybe\n");
  REQUIRE_THROWS(trssn::parse_bench_config(bad_bool));
}

TEST_CASE("benchmark rejects empty solver lists and unknown problems") {
  BenchConfig cfg;
  cfg.problem = "quadl1";
  REQUIRE_THROWS_WITH(trssn::run_benchmark(cfg),
                      Catch::Matchers::ContainsSubstring("empty solver list"));
  cfg.solvers = {"trssn"};
  cfg.problem = "sudoku";
  cfg.out_dir = fresh_dir("bench_badprob");
  REQUIRE_THROWS_WITH(trssn::run_benchmark(cfg),
                      Catch::Matchers::ContainsSubstring("unknown problem 'sudoku'"));
}

TEST_CASE("single solver run produces trace and summary") {
  BenchConfig cfg;
  cfg.problem = "quadl1";
  cfg.n = 20;
  cfg.seed = 7;
  cfg.solvers = {"trssn"};
  cfg.max_iters = 100;
  cfg.out_dir = fresh_dir("bench_single");

  auto sum = trssn::run_benchmark(cfg);
  REQUIRE(sum.rows.size() == 1);
  const auto& row = sum.rows[0];
  REQUIRE_FALSE(row.failed);
  REQUIRE(row.status == "converged");
  REQUIRE(row.final_f_nor <= 1e-10);
  REQUIRE(row.iters_to[2] >= 0);
  REQUIRE(row.iters_to[0] <= row.iters_to[1]);
  REQUIRE(row.iters_to[1] <= row.iters_to[2]);

  // the benchmark rebuilt the same seeded instance; check against its oracle
  auto prob = trssn::make_random_quad_l1(7, 20, 0.1);
  REQUIRE((sum.results[0].x - prob.solution()).lpNorm<Eigen::Infinity>() <= 1e-8);

  auto lines = split_lines(slurp(cfg.out_dir + "/trssn.csv"));
  REQUIRE(lines.size() == sum.traces[0].rows.size() + 2);
  REQUIRE(lines[0].rfind("# schema=trssn-trace-1 solver=trssn problem=quadl1", 0) == 0);
  REQUIRE(lines[1] ==
          "k,wall_seconds,psi,f_nor_norm,f_nat_norm,chi,delta,rho,accepted,"
          "cg_iters,cg_status,L_current,nu_k,rel_err");
  long prev_k = -1;
  double prev_wall = 0.0;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    auto f = split_csv(lines[i]);
    REQUIRE(f.size() == 14);
    long k = std::stol(f[0]);
    double wall = std::stod(f[1]);
    double rel = std::stod(f[13]);
    REQUIRE(k > prev_k);
    REQUIRE(wall >= prev_wall);
    REQUIRE(rel >= 0.0);
    prev_k = k;
    prev_wall = wall;
  }

  auto summary = split_lines(slurp(cfg.out_dir + "/summary.csv"));
  REQUIRE(summary.size() == 2);
  REQUIRE(summary[0].rfind("solver,problem,status", 0) == 0);
  REQUIRE(summary[1].rfind("trssn,quadl1,converged", 0) == 0);
  REQUIRE(std::filesystem::exists(cfg.out_dir + "/summary.md"));
}

TEST_CASE("a failing solver never aborts its siblings") {
  BenchConfig cfg;
  cfg.problem = "quadl1";
  cfg.n = 10;
  cfg.seed = 5;
  cfg.solvers = {"bogus", "fista"};
  cfg.max_iters = 30;
  cfg.out_dir = fresh_dir("bench_isolate");

  auto sum = trssn::run_benchmark(cfg);
  REQUIRE(sum.rows.size() == 2);
  REQUIRE(sum.rows[0].failed);
  REQUIRE(sum.rows[0].error.find("unknown solver 'bogus'") != std::string::npos);
  REQUIRE_FALSE(sum.rows[1].failed);
  REQUIRE(sum.rows[1].iters == 30);
  REQUIRE(sum.traces[1].rows.size() == 31);
  // summary.csv keeps both rows, the failure message quoted in the last column
  auto summary = split_lines(slurp(cfg.out_dir + "/summary.csv"));
  REQUIRE(summary.size() == 3);
  REQUIRE(summary[1].rfind("bogus,quadl1,failed", 0) == 0);
  REQUIRE(summary[1].find("unknown solver") != std::string::npos);
  REQUIRE(summary[2].rfind("fista,quadl1,max_iters", 0) == 0);
}

TEST_CASE("reruns are bit-identical apart from wall clock") {
  BenchConfig cfg;
  cfg.problem = "quadl1";
  cfg.n = 15;
  cfg.seed = 3;
  cfg.solvers = {"trssn", "sparsa"};
  cfg.max_iters = 60;
  cfg.out_dir = fresh_dir("bench_rerun_a");
  auto a = trssn::run_benchmark(cfg);
  cfg.out_dir = fresh_dir("bench_rerun_b");
  auto b = trssn::run_benchmark(cfg);

  REQUIRE(a.psi_star == b.psi_star);
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t t = 0; t < a.traces.size(); ++t) {
    const auto& ra = a.traces[t].rows;
    const auto& rb = b.traces[t].rows;
    REQUIRE(ra.size() == rb.size());
    REQUIRE(a.traces[t].params_hash == b.traces[t].params_hash);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      REQUIRE(ra[i].k == rb[i].k);
      REQUIRE(ra[i].psi == rb[i].psi);
      REQUIRE(ra[i].f_nor_norm == rb[i].f_nor_norm);
      REQUIRE(ra[i].f_nat_norm == rb[i].f_nat_norm);
      REQUIRE(ra[i].chi == rb[i].chi);
      REQUIRE(ra[i].delta == rb[i].delta);
      REQUIRE(ra[i].rho == rb[i].rho);
      REQUIRE(ra[i].accepted == rb[i].accepted);
      REQUIRE(ra[i].cg_iters == rb[i].cg_iters);
      REQUIRE(ra[i].cg_status == rb[i].cg_status);
      REQUIRE(ra[i].L_current == rb[i].L_current);
      REQUIRE(ra[i].nu_k == rb[i].nu_k);
    }
  }
}

TEST_CASE("compression runs emit masks and densities") {
  auto img_dir = fresh_dir("bench_compress");
  std::string img_path = img_dir + "/tiny.pgm";
  int h = 8, w = 8;
  Vec pixels(h * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      pixels(r * w + c) = 0.5 + 0.5 * std::sin(0.7 * r) * std::cos(0.9 * c);
  trssn::write_pgm_file(img_path, pixels, h, w);

  BenchConfig cfg;
  cfg.problem = "compression";
  cfg.data = img_path;
  cfg.mu = 0.005;
  cfg.solvers = {"trssn-lbfgs"};
  cfg.max_iters = 5;
  cfg.tol = 1e-8;
  cfg.out_dir = img_dir + "/out";

  auto sum = trssn::run_benchmark(cfg);
  REQUIRE(sum.rows.size() == 1);
  REQUIRE_FALSE(sum.rows[0].failed);
  REQUIRE(std::isfinite(sum.rows[0].mask_density));
  REQUIRE(sum.rows[0].mask_density >= 0.0);
  REQUIRE(sum.rows[0].mask_density <= 100.0);
  REQUIRE(std::filesystem::exists(cfg.out_dir + "/trssn-lbfgs_mask.pgm"));
  REQUIRE(std::filesystem::exists(cfg.out_dir + "/trssn-lbfgs_recon.pgm"));
  auto mask = trssn::read_pgm_file(cfg.out_dir + "/trssn-lbfgs_mask.pgm");
  REQUIRE(mask.width == w);
  REQUIRE(mask.height == h);
  // exact trssn needs second derivatives the problem does not have
  cfg.solvers = {"trssn"};
  cfg.out_dir = img_dir + "/out2";
  auto sum2 = trssn::run_benchmark(cfg);
  REQUIRE(sum2.rows[0].failed);
  REQUIRE(sum2.rows[0].error.find("second derivatives") != std::string::npos);
}
