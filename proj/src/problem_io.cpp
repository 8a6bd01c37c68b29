#include "transolve/problem_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "transolve/error.hpp"

namespace transolve {

namespace {

using nlohmann::json;

json matrix_rows(const GeneralizedTransportProblem& p, const std::vector<double>& v,
                 bool allow_unbounded) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.m; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < p.n; ++j) {
      const double x = v[p.vec_index(i, j)];
      if (allow_unbounded && is_unbounded(x)) {
        row.push_back(nullptr);
      } else {
        row.push_back(x);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> read_rows(const json& doc, const char* key, std::size_t m, std::size_t n,
                              bool allow_unbounded) {
  const json& rows = doc.at(key);
  if (!rows.is_array() || rows.size() != m) {
    throw InvalidInput(std::string("problem json: '") + key + "' must have m rows");
  }
  std::vector<double> v(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || row.size() != n) {
      throw InvalidInput(std::string("problem json: '") + key + "' rows must have n entries");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (row[j].is_null()) {
        if (!allow_unbounded) {
          throw InvalidInput(std::string("problem json: null not allowed in '") + key + "'");
        }
        v[i + j * m] = kUnbounded;
      } else {
        v[i + j * m] = row[j].get<double>();
      }
    }
  }
  return v;
}

std::string cone_name(ConeKind k) { return k == ConeKind::Zero ? "zero" : "nonnegative"; }

ConeKind parse_cone(const std::string& s) {
  if (s == "zero") return ConeKind::Zero;
  if (s == "nonnegative") return ConeKind::NonNegative;
  throw InvalidInput("problem json: unknown cone kind '" + s + "'");
}

}  // namespace

void write_problem_json(std::ostream& out, const GeneralizedTransportProblem& p) {
  json doc;
  doc["m"] = p.m;
  doc["n"] = p.n;
  doc["r"] = p.r;
  doc["sigma"] = p.sigma;
  doc["cost"] = matrix_rows(p, p.c, false);
  doc["phi"] = matrix_rows(p, p.phi, false);
  doc["lower"] = matrix_rows(p, p.lower, false);
  doc["upper"] = matrix_rows(p, p.upper, true);
  doc["mu"] = p.mu;
  doc["nu"] = p.nu;
  if (p.r == 1) {
    doc["a"] = p.a;
  } else {
    doc["a"] = nullptr;
  }
  doc["cone_y"] = cone_name(p.cone_y);
  doc["cone_z"] = cone_name(p.cone_z);
  out << doc.dump(1) << "\n";
}

GeneralizedTransportProblem read_problem_json(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem json: ") + e.what());
  }
  try {
    GeneralizedTransportProblem p;
    p.m = doc.at("m").get<std::size_t>();
    p.n = doc.at("n").get<std::size_t>();
    p.r = doc.value("r", std::size_t{0});
    p.sigma = doc.value("sigma", 0.0);
    p.c = read_rows(doc, "cost", p.m, p.n, false);
    p.phi = doc.contains("phi") ? read_rows(doc, "phi", p.m, p.n, false)
                                : std::vector<double>(p.plan_size(), 0.0);
    p.lower = doc.contains("lower") ? read_rows(doc, "lower", p.m, p.n, false)
                                    : std::vector<double>(p.plan_size(), 0.0);
    p.upper = doc.contains("upper") ? read_rows(doc, "upper", p.m, p.n, true)
                                    : std::vector<double>(p.plan_size(), kUnbounded);
    p.mu = doc.at("mu").get<std::vector<double>>();
    p.nu = doc.at("nu").get<std::vector<double>>();
    if (p.r == 1) p.a = doc.at("a").get<double>();
    p.cone_y = parse_cone(doc.value("cone_y", std::string("zero")));
    p.cone_z = parse_cone(doc.value("cone_z", std::string("zero")));
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("problem json: ") + e.what());
  }
}

void save_problem(const std::string& path, const GeneralizedTransportProblem& p) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_problem_json(out, p);
}

GeneralizedTransportProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_problem_json(in);
}

}  // namespace transolve
