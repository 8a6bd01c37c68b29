#include "transolve/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>

#include "config_json.hpp"
#include "transolve/error.hpp"

namespace transolve {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SsnStatus parse_ssn_status(const std::string& s) {
  if (s == "converged") return SsnStatus::Converged;
  if (s == "max_iterations") return SsnStatus::MaxIterations;
  if (s == "line_search_stall") return SsnStatus::LineSearchStall;
  throw InvalidInput("report: unknown inner status '" + s + "'");
}

json row_to_json(const TraceRow& row) {
  return json{{"k", row.k},
              {"alpha", row.alpha},
              {"beta", row.beta},
              {"res_x", row.kkt.res_x},
              {"res_y", row.kkt.res_y},
              {"res_z", row.kkt.res_z},
              {"res_lambda", row.kkt.res_lambda},
              {"res", row.kkt.relative},
              {"it_ssn", row.it_ssn},
              {"it_lin_max", row.it_lin_max},
              {"it_lin_avg", row.it_lin_avg},
              {"inner_residual", row.inner_residual},
              {"ssn_status", status_name(row.ssn_status)}};
}

TraceRow row_from_json(const json& j) {
  TraceRow row;
  row.k = j.at("k").get<std::size_t>();
  row.alpha = j.at("alpha").get<double>();
  row.beta = j.at("beta").get<double>();
  row.kkt.res_x = j.at("res_x").get<double>();
  row.kkt.res_y = j.at("res_y").get<double>();
  row.kkt.res_z = j.at("res_z").get<double>();
  row.kkt.res_lambda = j.at("res_lambda").get<double>();
  row.kkt.relative = j.at("res").get<double>();
  row.it_ssn = j.at("it_ssn").get<std::size_t>();
  row.it_lin_max = j.at("it_lin_max").get<std::size_t>();
  row.it_lin_avg = j.at("it_lin_avg").get<double>();
  row.inner_residual = j.value("inner_residual", 0.0);
  row.ssn_status = parse_ssn_status(j.at("ssn_status").get<std::string>());
  return row;
}

}  // namespace

ProblemMeta describe_problem(const GeneralizedTransportProblem& problem, std::string name) {
  ProblemMeta meta;
  meta.name = std::move(name);
  meta.m = problem.m;
  meta.n = problem.n;
  meta.r = problem.r;
  meta.sigma = problem.sigma;
  return meta;
}

ReportTotals compute_totals(const std::vector<TraceRow>& trace) {
  ReportTotals t;
  double weighted = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const TraceRow& row = trace[k];
    ++t.it_ipd;
    t.it_ssn += row.it_ssn;
    t.it_lin_max = std::max(t.it_lin_max, row.it_lin_max);
    weighted += row.it_lin_avg * static_cast<double>(row.it_ssn);
  }
  if (t.it_ssn > 0) t.it_lin_avg = weighted / static_cast<double>(t.it_ssn);
  return t;
}

std::string RunReport::linear_name() const {
  if (config.dense_linear) return "dense";
  return config.linear.backend == LinearBackend::Amg ? "amg" : "pcg";
}

RunReport make_report(const ProblemMeta& problem, const IpdConfig& config, const IpdResult& result,
                      double wall_seconds) {
  RunReport r;
  r.problem = problem;
  r.config = config;
  r.trace = result.trace;
  r.totals = compute_totals(result.trace);
  r.status = status_name(result.status);
  r.objective = result.objective;
  r.final_res = result.kkt.relative;
  r.wall_seconds = wall_seconds;
  r.timestamp = utc_timestamp();
  r.ssn_warnings = result.ssn_warnings;
  return r;
}

void write_report_json(std::ostream& out, const RunReport& report) {
  json doc;
  doc["problem"] = {{"name", report.problem.name},
                    {"m", report.problem.m},
                    {"n", report.problem.n},
                    {"r", report.problem.r},
                    {"sigma", report.problem.sigma}};
  doc["config"] = detail::config_to_json(report.config);
  const std::string lin = report.linear_name() == "pcg" ? "itpcg" : "itamg";
  doc["totals"] = {{"itIPD", report.totals.it_ipd},
                   {"itSsN", report.totals.it_ssn},
                   {lin + "_max", report.totals.it_lin_max},
                   {lin + "_aver", report.totals.it_lin_avg}};
  doc["linear"] = report.linear_name();
  doc["status"] = report.status;
  doc["objective"] = report.objective;
  doc["res"] = report.final_res;
  doc["wall_seconds"] = report.wall_seconds;
  doc["timestamp"] = report.timestamp;
  doc["ssn_warnings"] = report.ssn_warnings;
  json rows = json::array();
  for (const TraceRow& row : report.trace) rows.push_back(row_to_json(row));
  doc["trace"] = std::move(rows);
  out << doc.dump(1) << "\n";
}

RunReport read_report_json(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("report json: ") + e.what());
  }
  try {
    RunReport r;
    const json& p = doc.at("problem");
    r.problem.name = p.at("name").get<std::string>();
    r.problem.m = p.at("m").get<std::size_t>();
    r.problem.n = p.at("n").get<std::size_t>();
    r.problem.r = p.at("r").get<std::size_t>();
    r.problem.sigma = p.at("sigma").get<double>();
    r.config = detail::config_from_json(doc.at("config"));
    for (const json& row : doc.at("trace")) r.trace.push_back(row_from_json(row));
    r.totals = compute_totals(r.trace);
    r.status = doc.at("status").get<std::string>();
    r.objective = doc.at("objective").get<double>();
    r.final_res = doc.at("res").get<double>();
    r.wall_seconds = doc.at("wall_seconds").get<double>();
    r.timestamp = doc.value("timestamp", std::string());
    r.ssn_warnings = doc.value("ssn_warnings", std::size_t{0});
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("report json: ") + e.what());
  }
}

void save_report(const std::string& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_report_json(out, report);
}

RunReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_report_json(in);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "k,alpha,beta,res_x,res_y,res_z,res_lambda,res,it_ssn,it_lin_max,it_lin_avg,ssn_status\n";
  for (const TraceRow& row : trace) {
    out << row.k << ',' << fmt(row.alpha) << ',' << fmt(row.beta) << ',' << fmt(row.kkt.res_x)
        << ',' << fmt(row.kkt.res_y) << ',' << fmt(row.kkt.res_z) << ','
        << fmt(row.kkt.res_lambda) << ',' << fmt(row.kkt.relative) << ',' << row.it_ssn << ','
        << row.it_lin_max << ',' << fmt(row.it_lin_avg) << ',' << status_name(row.ssn_status)
        << '\n';
  }
}

void save_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
}

void write_summary_csv(std::ostream& out, const std::vector<RunReport>& reports) {
  const std::string lin =
      !reports.empty() && reports.front().linear_name() == "pcg" ? "itpcg" : "itamg";
  for (const RunReport& r : reports) {
    const std::string other = r.linear_name() == "pcg" ? "itpcg" : "itamg";
    if (other != lin) throw InvalidInput("summary: reports mix amg and pcg runs");
  }
  out << "name,n,status,itIPD,itSsN," << lin << "_max," << lin << "_aver,res,objective,time\n";
  for (const RunReport& r : reports) {
    out << r.problem.name << ',' << r.problem.n << ',' << r.status << ',' << r.totals.it_ipd << ','
        << r.totals.it_ssn << ',' << r.totals.it_lin_max << ',' << fmt(r.totals.it_lin_avg) << ','
        << fmt(r.final_res) << ',' << fmt(r.objective) << ',' << fmt(r.wall_seconds) << '\n';
  }
}

}  // namespace transolve
