#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "transolve/bench.hpp"
#include "transolve/config_io.hpp"
#include "transolve/error.hpp"
#include "transolve/ipd.hpp"
#include "transolve/matrix_market.hpp"
#include "transolve/oracle.hpp"
#include "transolve/problem.hpp"
#include "transolve/problem_io.hpp"
#include "transolve/report.hpp"

namespace {

using namespace transolve;

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitSolver = 4;

std::size_t thread_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TRANSOLVE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v < 1) throw InvalidInput("");
      cap = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw InvalidInput(std::string("TRANSOLVE_THREADS must be a positive integer, got '") + env +
                         "'");
    }
  }
  return cap;
}

std::string with_extension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return path.substr(0, dot) + ext;
  }
  return path + ext;
}

struct GenArgs {
  std::string kind;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const GeneralizedTransportProblem p = generate_instance(parse_instance_kind(a.kind), a.n, a.seed);
  save_problem(a.out, p);
  std::cout << "wrote " << a.kind << " m=" << p.m << " n=" << p.n << " r=" << p.r << " to "
            << a.out << "\n";
  return kExitOk;
}

struct SolveArgs {
  std::string problem;
  std::string config;
  std::string out;
  std::string trace;
  std::string backend;
  std::string schedule;
  double tol = 0.0;
  std::size_t max_outer = 0;
  bool dense = false;
  bool quiet = false;
};

int cmd_solve(const SolveArgs& a) {
  const GeneralizedTransportProblem p = load_problem(a.problem);
  IpdConfig config = a.config.empty() ? IpdConfig{} : load_config(a.config);
  if (!a.backend.empty()) config.linear.backend = parse_backend(a.backend);
  if (!a.schedule.empty()) config.schedule = parse_schedule(a.schedule);
  if (a.tol > 0.0) config.kkt_tol = a.tol;
  if (a.max_outer > 0) config.max_outer = a.max_outer;
  if (a.dense) config.dense_linear = true;
  config.validate();

  IpdObserver observer;
  if (!a.quiet) {
    observer = [](const IterateState&, const TraceRow* row) {
      if (!row) return;
      std::cerr << "k=" << row->k << " alpha=" << row->alpha << " res=" << row->kkt.relative
                << " itSsN=" << row->it_ssn << " itlin_max=" << row->it_lin_max << "\n";
    };
  }
  const auto start = std::chrono::steady_clock::now();
  const IpdResult result = ipd_solve(p, config, observer);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const RunReport report = make_report(describe_problem(p, a.problem), config, result, wall);
  if (!a.out.empty()) {
    save_report(a.out, report);
    save_trace_csv(a.trace.empty() ? with_extension(a.out, ".csv") : a.trace, report.trace);
  } else if (!a.trace.empty()) {
    save_trace_csv(a.trace, report.trace);
  }
  std::cout.precision(12);
  std::cout << "status=" << report.status << " itIPD=" << report.totals.it_ipd
            << " itSsN=" << report.totals.it_ssn << " res=" << report.final_res
            << " objective=" << report.objective << " time=" << wall << "s\n";
  return result.status == IpdStatus::Converged ? kExitOk : kExitNoConvergence;
}

struct BenchArgs {
  std::vector<std::size_t> grid_k{4, 6};
  std::vector<double> eps{1e-4, 1e-6, 1e-8, 1e-10, 0.0};
  double tol = 1e-11;
  std::uint64_t seed = 2024;
  std::string out;
  std::string export_dir;
  bool no_pcg = false;
};

int cmd_bench_amg(const BenchArgs& a) {
  BenchConfig config;
  config.grid_k = a.grid_k;
  config.eps = a.eps;
  config.tol = a.tol;
  config.seed = a.seed;
  config.run_pcg = !a.no_pcg;
  config.threads = thread_cap();
  for (std::size_t k : config.grid_k) {
    if (k > 8) throw InvalidInput("bench-amg: grid_k above 8 is outside the supported range");
  }
  if (!a.export_dir.empty()) {
    for (std::size_t k : config.grid_k) {
      const std::string path = a.export_dir + "/grid" + std::to_string(k) + ".mtx";
      write_matrix_market(path, grid_graph_laplacian(k), true);
    }
  }
  const std::vector<BenchRow> rows = run_amg_bench(config);
  if (a.out.empty()) {
    write_bench_csv(std::cout, rows);
  } else {
    std::ofstream out(a.out);
    if (!out) throw InvalidInput("cannot open " + a.out + " for writing");
    write_bench_csv(out, rows);
  }
  for (const BenchRow& r : rows) {
    if (!r.amg_converged || (config.run_pcg && !r.pcg_converged)) return kExitNoConvergence;
  }
  return kExitOk;
}

struct OracleArgs {
  std::string problem;
  std::string out;
};

int cmd_oracle(const OracleArgs& a) {
  const GeneralizedTransportProblem p = load_problem(a.problem);
  const OracleResult r = solve_oracle(p);
  nlohmann::json doc;
  doc["oracle"] = oracle_kind_name(r.kind);
  doc["objective"] = r.objective;
  doc["candidates"] = r.candidates;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < p.m; ++i) {
    std::vector<double> row(p.n);
    for (std::size_t j = 0; j < p.n; ++j) row[j] = r.plan[p.vec_index(i, j)];
    rows.push_back(row);
  }
  doc["plan"] = rows;
  if (a.out.empty()) {
    std::cout << doc.dump(1) << "\n";
  } else {
    std::ofstream out(a.out);
    if (!out) throw InvalidInput("cannot open " + a.out + " for writing");
    out << doc.dump(1) << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  std::vector<RunReport> reports;
  for (const std::string& path : a.reports) reports.push_back(load_report(path));
  if (a.out.empty()) {
    write_summary_csv(std::cout, reports);
  } else {
    std::ofstream out(a.out);
    if (!out) throw InvalidInput("cannot open " + a.out + " for writing");
    write_summary_csv(out, reports);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized transport solver"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a seeded problem instance");
  gen_cmd
      ->add_option("--kind", gen.kind,
                   "ot-random, ot-quadratic, birkhoff, birkhoff-fixed, partial-random, "
                   "partial-quadratic")
      ->required();
  gen_cmd->add_option("-n,--n", gen.n, "Plan size (n x n)")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output problem JSON")->required();

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file");
  solve_cmd->add_option("problem", solve.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--config", solve.config, "Solver config JSON")->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve.out, "Report JSON (trace CSV written alongside)");
  solve_cmd->add_option("--trace", solve.trace, "Trace CSV path");
  solve_cmd->add_option("--backend", solve.backend, "Large-component linear solver: amg or pcg");
  solve_cmd->add_option("--schedule", solve.schedule,
                        "constant:A, warmup:HI,STEPS,LO or vanishing:P[,CAP]");
  solve_cmd->add_option("--tol", solve.tol, "Relative KKT tolerance");
  solve_cmd->add_option("--max-outer", solve.max_outer, "Outer iteration cap");
  solve_cmd->add_flag("--dense", solve.dense, "Dense factorization of every Newton system");
  solve_cmd->add_flag("-q,--quiet", solve.quiet, "No per-iteration log");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-amg", "AMG vs PCG on grid graph Laplacians");
  bench_cmd->add_option("--grid-k", bench.grid_k, "Grid exponents k (1/h = 2^k)");
  bench_cmd->add_option("--eps", bench.eps, "Diagonal shifts");
  bench_cmd->add_option("--tol", bench.tol, "Relative residual tolerance");
  bench_cmd->add_option("--seed", bench.seed, "Right-hand side seed");
  bench_cmd->add_option("--out", bench.out, "CSV output (default stdout)");
  bench_cmd->add_option("--export-mtx", bench.export_dir,
                        "Directory for the unshifted grid Laplacians in Matrix Market form")
      ->check(CLI::ExistingDirectory);
  bench_cmd->add_flag("--no-pcg", bench.no_pcg, "Skip the PCG runs");

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force solution of a tiny problem");
  oracle_cmd->add_option("problem", oracle.problem, "Problem JSON")->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--out", oracle.out, "Output JSON (default stdout)");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summary CSV from report JSON files");
  report_cmd->add_option("reports", report.reports, "Report JSON files")->required();
  report_cmd->add_option("--out", report.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*solve_cmd) return cmd_solve(solve);
    if (*bench_cmd) return cmd_bench_amg(bench);
    if (*oracle_cmd) return cmd_oracle(oracle);
    if (*report_cmd) return cmd_report(report);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitInvalid;
}
