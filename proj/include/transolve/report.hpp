#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "transolve/ipd.hpp"

namespace transolve {

struct ProblemMeta {
  std::string name;  // instance kind or source file
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t r = 0;
  double sigma = 0.0;
};

ProblemMeta describe_problem(const GeneralizedTransportProblem& problem, std::string name);

struct ReportTotals {
  std::size_t it_ipd = 0;
  std::size_t it_ssn = 0;
  std::size_t it_lin_max = 0;
  // Mean linear iterations per Newton step over the whole run.
  double it_lin_avg = 0.0;
};

// Aggregates trace rows 1..K (row 0 holds the initial residuals).
ReportTotals compute_totals(const std::vector<TraceRow>& trace);

struct RunReport {
  ProblemMeta problem;
  IpdConfig config;
  std::vector<TraceRow> trace;
  ReportTotals totals;
  std::string status;
  double objective = 0.0;
  double final_res = 0.0;
  double wall_seconds = 0.0;
  std::string timestamp;
  std::size_t ssn_warnings = 0;

  // "amg", "pcg" or "dense"; selects the itamg_/itpcg_ column prefix.
  std::string linear_name() const;
};

RunReport make_report(const ProblemMeta& problem, const IpdConfig& config, const IpdResult& result,
                      double wall_seconds);

void write_report_json(std::ostream& out, const RunReport& report);
RunReport read_report_json(std::istream& in);
void save_report(const std::string& path, const RunReport& report);
RunReport load_report(const std::string& path);

// Columns k,alpha,beta,res_x,res_y,res_z,res_lambda,res,it_ssn,it_lin_max,it_lin_avg,ssn_status.
// Values are printed with 17 significant digits, so identical runs produce
// identical files.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);
void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

// One row per report: name,n,status,itIPD,itSsN,<lin>_max,<lin>_aver,res,objective,time
// where <lin> is itamg or itpcg; all reports must share the linear solver.
void write_summary_csv(std::ostream& out, const std::vector<RunReport>& reports);

}  // namespace transolve
