// Benchmark harness: runs a configured list of solvers on one problem,
// streams per-iteration CSV traces, and writes a summary table with
// iterations/seconds to fixed rel_err thresholds.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trssn/baselines.hpp"
#include "trssn/driver.hpp"
#include "trssn/io.hpp"
#include "trssn/problems/compression.hpp"
#include "trssn/problems/logistic.hpp"
#include "trssn/problems/quad_l1.hpp"

namespace trssn {

struct TraceRecord {
  long k = 0;
  double wall_seconds = 0.0;
  double psi = 0.0;
  double f_nor_norm = 0.0;
  double f_nat_norm = 0.0;
  double chi = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  bool accepted = false;
  int cg_iters = 0;
  CgStatus cg_status = CgStatus::early_exit_small_g;
  double L_current = 0.0;
  double nu_k = 0.0;
};

struct RunTrace {
  std::string solver_id;
  std::string problem_id;
  std::uint64_t params_hash = 0;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> rows;
};

struct BenchConfig {
  std::string problem;  // quadl1 | logistic | compression
  std::string data;     // dataset path; libsvm for logistic, pgm for compression
  double mu = -1.0;     // negative selects the problem default
  std::vector<std::string> solvers;
  double tol = 1e-10;
  long max_iters = 1000;
  double time_budget = 0.0;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  long n = 50;              // synthetic quadl1 dimension
  int adaptive_lambda = -1; // -1 selects the per-problem default
};

struct SummaryRow {
  std::string solver_id;
  std::string problem_id;
  bool failed = false;
  std::string error;
  std::string status = "failed";
  long iters = 0;
  double seconds = 0.0;
  double final_psi = std::numeric_limits<double>::quiet_NaN();
  double final_f_nor = std::numeric_limits<double>::quiet_NaN();
  double final_f_nat = std::numeric_limits<double>::quiet_NaN();
  double final_rel_err = std::numeric_limits<double>::quiet_NaN();
  long iters_to[3] = {-1, -1, -1};
  double seconds_to[3] = {std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN()};
  double mask_density = std::numeric_limits<double>::quiet_NaN();
};

struct BenchSummary {
  double psi_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<SummaryRow> rows;
  std::vector<RunTrace> traces;       // parallel to rows
  std::vector<SolveResult> results;   // parallel to rows; empty x when failed
  std::vector<std::string> trace_paths;
};

inline constexpr double kRelErrThresholds[3] = {1e-4, 1e-8, 1e-10};
inline constexpr const char* kTraceSchema = "trssn-trace-1";

inline double mask_density(const Vec& c) {
  if (c.size() == 0) return 0.0;
  return 100.0 * double((c.array() > 0.0).count()) / double(c.size());
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trace_header(const RunTrace& t) {
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(t.params_hash));
  std::string h = "# schema=";
  h += kTraceSchema;
  h += " solver=" + t.solver_id + " problem=" + t.problem_id;
  h += " params_hash=";
  h += hash;
  h += " seed=" + std::to_string(t.seed) + "\n";
  h +=
      "k,wall_seconds,psi,f_nor_norm,f_nat_norm,chi,delta,rho,accepted,"
      "cg_iters,cg_status,L_current,nu_k,rel_err\n";
  return h;
}

inline void trace_row(std::ostream& out, const TraceRecord& r, double rel_err) {
  out << r.k << ',' << fmt_g(r.wall_seconds) << ',' << fmt_g(r.psi) << ','
      << fmt_g(r.f_nor_norm) << ',' << fmt_g(r.f_nat_norm) << ',' << fmt_g(r.chi) << ','
      << fmt_g(r.delta) << ',' << fmt_g(r.rho) << ',' << (r.accepted ? 1 : 0) << ','
      << r.cg_iters << ',' << to_string(r.cg_status) << ',' << fmt_g(r.L_current) << ','
      << fmt_g(r.nu_k) << ',' << fmt_g(rel_err) << '\n';
}

}  // namespace detail

inline double rel_err_of(double psi, double psi_star) {
  return (psi - psi_star) / std::max(1.0, psi_star);
}

// Streams rows as they arrive so an aborted run still leaves a parseable
// file; rel_err is nan until the post-run rewrite fills it in.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const RunTrace& meta) : out_(path) {
    if (!out_) throw std::runtime_error("trace: cannot open " + path + " for writing");
    out_ << detail::trace_header(meta);
    out_.flush();
  }

  void row(const TraceRecord& r) {
    detail::trace_row(out_, r, std::numeric_limits<double>::quiet_NaN());
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline void write_trace_csv(const std::string& path, const RunTrace& t, double psi_star) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");
  out << detail::trace_header(t);
  for (const TraceRecord& r : t.rows) detail::trace_row(out, r, rel_err_of(r.psi, psi_star));
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  std::string line;
  long lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error("config line " + std::to_string(lineno) + ": " + msg);
  };
  auto to_double = [&](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return d;
    } catch (const std::exception&) {
      fail("bad numeric value '" + v + "' for " + key);
      return 0.0;
    }
  };
  auto to_long = [&](const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long d = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return d;
    } catch (const std::exception&) {
      fail("bad integer value '" + v + "' for " + key);
      return 0L;
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key=value, got '" + line + "'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (key == "problem") {
      cfg.problem = val;
    } else if (key == "data") {
      cfg.data = val;
    } else if (key == "mu") {
      cfg.mu = to_double(key, val);
    } else if (key == "solvers") {
      cfg.solvers.clear();
      std::size_t start = 0;
      while (start <= val.size()) {
        auto comma = val.find(',', start);
        std::string tok =
            detail::trim(comma == std::string::npos ? val.substr(start)
                                                    : val.substr(start, comma - start));
        if (tok.empty()) fail("empty solver name in '" + val + "'");
        cfg.solvers.push_back(tok);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    } else if (key == "tol") {
      cfg.tol = to_double(key, val);
    } else if (key == "max_iters") {
      cfg.max_iters = to_long(key, val);
    } else if (key == "time_budget") {
      cfg.time_budget = to_double(key, val);
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else if (key == "seed") {
      try {
        std::size_t pos = 0;
        cfg.seed = std::stoull(val, &pos);
        if (pos != val.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail("bad seed '" + val + "'");
      }
    } else if (key == "n") {
      cfg.n = to_long(key, val);
    } else if (key == "adaptive_lambda") {
      if (val == "1" || val == "true")
        cfg.adaptive_lambda = 1;
      else if (val == "0" || val == "false")
        cfg.adaptive_lambda = 0;
      else
        fail("adaptive_lambda must be 0/1/true/false, got '" + val + "'");
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline BenchConfig parse_bench_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  return parse_bench_config(f);
}

namespace detail {

inline std::uint64_t config_hash(const BenchConfig& cfg) {
  std::string s = cfg.problem + "|" + cfg.data + "|" + fmt_g(cfg.mu) + "|" + fmt_g(cfg.tol) +
                  "|" + std::to_string(cfg.max_iters) + "|" + fmt_g(cfg.time_budget) + "|" +
                  std::to_string(cfg.seed) + "|" + std::to_string(cfg.n) + "|" +
                  std::to_string(cfg.adaptive_lambda);
  return fnv1a(s);
}

inline TraceRecord to_record(const IterationInfo& ii, double wall) {
  TraceRecord r;
  r.k = ii.k;
  r.wall_seconds = wall;
  r.psi = ii.psi;
  r.f_nor_norm = ii.f_nor_norm;
  r.f_nat_norm = ii.f_nat_norm;
  r.chi = ii.chi;
  r.delta = ii.delta;
  r.rho = ii.rho;
  r.accepted = ii.accepted;
  r.cg_iters = ii.cg_iters;
  r.cg_status = ii.cg_status;
  r.L_current = ii.L;
  r.nu_k = ii.nu_k;
  return r;
}

template <class Problem>
SolveResult dispatch_solver(const Problem& prob, const std::string& id, const TrssnParams& tp,
                            const BaselineParams& bp, const Vec& x0, const Observer& obs) {
  if (id == "trssn") {
    if constexpr (HasHessian<Problem>) {
      return solve_exact(prob, tp, x0, obs);
    } else {
      throw std::invalid_argument(
          "solver 'trssn' needs second derivatives; this problem type has none "
          "(use trssn-lbfgs)");
    }
  }
  if (id == "trssn-lbfgs") return solve_lbfgs(prob, tp, x0, obs);
  if (id == "fista") return solve_fista(prob, bp, x0, obs);
  if (id == "sparsa") return solve_sparsa(prob, bp, x0, obs);
  throw std::invalid_argument("unknown solver '" + id + "'");
}

template <class Problem>
void run_grid(const Problem& prob, const std::string& problem_id, const BenchConfig& cfg,
              bool adaptive, const Vec& x0, BenchSummary& sum) {
  TrssnParams tp;
  tp.tol = cfg.tol;
  tp.max_iters = cfg.max_iters;
  tp.time_budget = cfg.time_budget;
  tp.adaptive_lambda = adaptive;
  BaselineParams bp;
  bp.tol = cfg.tol;
  bp.max_iters = cfg.max_iters;
  bp.time_budget = cfg.time_budget;
  std::uint64_t phash = config_hash(cfg);

  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    const std::string& id = cfg.solvers[i];
    std::string fname = id;
    for (std::size_t j = 0; j < i; ++j)
      if (cfg.solvers[j] == id) {
        fname += "_" + std::to_string(i);
        break;
      }
    std::string path = (std::filesystem::path(cfg.out_dir) / (fname + ".csv")).string();

    RunTrace trace;
    trace.solver_id = id;
    trace.problem_id = problem_id;
    trace.params_hash = phash;
    trace.seed = cfg.seed;

    SummaryRow row;
    row.solver_id = id;
    row.problem_id = problem_id;
    SolveResult res;

    try {
      TraceWriter writer(path, trace);
      auto t0 = std::chrono::steady_clock::now();
      Observer obs = [&](const IterationInfo& ii) {
        std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
        TraceRecord r = to_record(ii, el.count());
        trace.rows.push_back(r);
        writer.row(r);
      };
      res = dispatch_solver(prob, id, tp, bp, x0, obs);
      row.status = to_string(res.status);
      row.iters = res.iters;
      row.final_psi = res.psi;
      row.final_f_nor = res.f_nor_norm;
      row.final_f_nat = res.f_nat_norm;
      if (!trace.rows.empty()) row.seconds = trace.rows.back().wall_seconds;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
      row.status = "failed";
      res = SolveResult{};
    }
    sum.rows.push_back(std::move(row));
    sum.traces.push_back(std::move(trace));
    sum.results.push_back(std::move(res));
    sum.trace_paths.push_back(std::move(path));
  }
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

inline void write_summary(const BenchSummary& sum, const BenchConfig& cfg) {
  std::string csv_path = (std::filesystem::path(cfg.out_dir) / "summary.csv").string();
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("summary: cannot open " + csv_path + " for writing");
  csv << "solver,problem,status,iters,seconds,final_psi,final_f_nor_norm,final_f_nat_norm,"
         "final_rel_err,iters_to_1e-4,iters_to_1e-8,iters_to_1e-10,"
         "seconds_to_1e-4,seconds_to_1e-8,seconds_to_1e-10,mask_density,error\n";
  for (const SummaryRow& r : sum.rows) {
    csv << r.solver_id << ',' << r.problem_id << ',' << r.status << ',' << r.iters << ','
        << fmt_g(r.seconds) << ',' << fmt_g(r.final_psi) << ',' << fmt_g(r.final_f_nor) << ','
        << fmt_g(r.final_f_nat) << ',' << fmt_g(r.final_rel_err);
    for (int t = 0; t < 3; ++t) csv << ',' << r.iters_to[t];
    for (int t = 0; t < 3; ++t) csv << ',' << fmt_g(r.seconds_to[t]);
    csv << ',' << fmt_g(r.mask_density) << ',' << csv_quote(r.error) << '\n';
  }
  if (!csv) throw std::runtime_error("summary: write failed for " + csv_path);

  std::string md_path = (std::filesystem::path(cfg.out_dir) / "summary.md").string();
  std::ofstream md(md_path);
  if (!md) throw std::runtime_error("summary: cannot open " + md_path + " for writing");
  md << "# benchmark summary\n\n";
  md << "problem: " << cfg.problem << (cfg.data.empty() ? "" : " (" + cfg.data + ")") << "\n\n";
  md << "best objective psi* = " << fmt_g(sum.psi_star) << "\n\n";
  md << "| solver | status | iters | seconds | final rel_err | it 1e-4 | it 1e-8 | it 1e-10 |"
        " s 1e-4 | s 1e-8 | s 1e-10 |\n";
  md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const SummaryRow& r : sum.rows) {
    md << "| " << r.solver_id << " | " << (r.failed ? "failed: " + r.error : r.status) << " | "
       << r.iters << " | " << fmt_g(r.seconds) << " | " << fmt_g(r.final_rel_err);
    for (int t = 0; t < 3; ++t)
      md << " | " << (r.iters_to[t] < 0 ? std::string("-") : std::to_string(r.iters_to[t]));
    for (int t = 0; t < 3; ++t)
      md << " | " << (std::isnan(r.seconds_to[t]) ? std::string("-") : fmt_g(r.seconds_to[t]));
    md << " |\n";
  }
  for (const SummaryRow& r : sum.rows)
    if (!std::isnan(r.mask_density))
      md << "\nmask density (" << r.solver_id << "): " << fmt_g(r.mask_density) << "%\n";
  if (!md) throw std::runtime_error("summary: write failed for " + md_path);
}

inline void finalize(BenchSummary& sum, const BenchConfig& cfg) {
  double psi_star = std::numeric_limits<double>::infinity();
  bool seen = false;
  for (const RunTrace& t : sum.traces)
    for (const TraceRecord& r : t.rows)
      if (std::isfinite(r.psi) && r.psi < psi_star) {
        psi_star = r.psi;
        seen = true;
      }
  sum.psi_star = seen ? psi_star : std::numeric_limits<double>::quiet_NaN();

  for (std::size_t i = 0; i < sum.traces.size(); ++i) {
    const RunTrace& t = sum.traces[i];
    SummaryRow& row = sum.rows[i];
    write_trace_csv(sum.trace_paths[i], t, sum.psi_star);
    if (t.rows.empty() || !seen) continue;
    row.final_rel_err = rel_err_of(t.rows.back().psi, sum.psi_star);
    for (int th = 0; th < 3; ++th) {
      for (const TraceRecord& r : t.rows) {
        if (rel_err_of(r.psi, sum.psi_star) <= kRelErrThresholds[th]) {
          row.iters_to[th] = r.k;
          row.seconds_to[th] = r.wall_seconds;
          break;
        }
      }
    }
  }
  write_summary(sum, cfg);
}

}  // namespace detail

inline BenchSummary run_benchmark(const BenchConfig& cfg) {
  if (cfg.solvers.empty()) throw std::invalid_argument("config error: empty solver list");
  if (cfg.out_dir.empty()) throw std::invalid_argument("config error: empty out_dir");
  std::filesystem::create_directories(cfg.out_dir);

  BenchSummary sum;
  if (cfg.problem == "quadl1") {
    double mu = cfg.mu < 0.0 ? 0.1 : cfg.mu;
    auto prob = make_random_quad_l1(cfg.seed, cfg.n, mu);
    detail::run_grid(prob, "quadl1", cfg, cfg.adaptive_lambda == 1, Vec::Zero(cfg.n), sum);
  } else if (cfg.problem == "logistic") {
    if (cfg.data.empty())
      throw std::invalid_argument("config error: problem=logistic needs data=<libsvm path>");
    LibsvmData ds = read_libsvm_file(cfg.data);
    double mu = cfg.mu < 0.0 ? default_l1_weight(ds.A, ds.b) : cfg.mu;
    auto prob = LogisticProblem::create(std::move(ds.A), std::move(ds.b), mu);
    std::string pid = "logistic:" + std::filesystem::path(cfg.data).filename().string();
    detail::run_grid(prob, pid, cfg, cfg.adaptive_lambda == 1, Vec::Zero(prob.dim()), sum);
  } else if (cfg.problem == "compression") {
    if (cfg.data.empty())
      throw std::invalid_argument("config error: problem=compression needs data=<pgm path>");
    PgmImage img = read_pgm_file(cfg.data);
    double mu = cfg.mu < 0.0 ? 0.01 : cfg.mu;
    auto prob = CompressionProblem::create(img.pixels, img.height, img.width, mu);
    std::string pid = "compression:" + std::filesystem::path(cfg.data).filename().string();
    bool adaptive = cfg.adaptive_lambda != 0;  // on unless explicitly disabled
    detail::run_grid(prob, pid, cfg, adaptive, Vec::Ones(prob.dim()), sum);
    for (std::size_t i = 0; i < sum.rows.size(); ++i) {
      if (sum.rows[i].failed) continue;
      const Vec& c = sum.results[i].x;
      sum.rows[i].mask_density = mask_density(c);
      auto base = std::filesystem::path(cfg.out_dir) / sum.rows[i].solver_id;
      write_pgm_file(base.string() + "_mask.pgm", c, img.height, img.width);
      write_pgm_file(base.string() + "_recon.pgm", prob.reconstruction(c), img.height, img.width);
    }
  } else {
    throw std::invalid_argument("config error: unknown problem '" + cfg.problem + "'");
  }
  detail::finalize(sum, cfg);
  return sum;
}

}  // namespace trssn
