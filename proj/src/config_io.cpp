#include "transolve/config_io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "config_json.hpp"
#include "transolve/error.hpp"

namespace transolve {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const char* where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw InvalidInput(std::string("config: ") + where + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw InvalidInput(std::string("config: unknown key '") + item.key() + "' in " + where);
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

std::string smoother_name(SmootherKind k) {
  return k == SmootherKind::GaussSeidel ? "gauss_seidel" : "jacobi";
}

SmootherKind parse_smoother(const std::string& s) {
  if (s == "gauss_seidel") return SmootherKind::GaussSeidel;
  if (s == "jacobi") return SmootherKind::WeightedJacobi;
  throw InvalidInput("config: unknown smoother '" + s + "'");
}

std::string interpolation_name(InterpolationKind k) {
  switch (k) {
    case InterpolationKind::Ideal:
      return "ideal";
    case InterpolationKind::Standard:
      return "standard";
    case InterpolationKind::BipartiteShortcutThenStandard:
      return "bipartite";
  }
  return "standard";
}

InterpolationKind parse_interpolation(const std::string& s) {
  if (s == "ideal") return InterpolationKind::Ideal;
  if (s == "standard") return InterpolationKind::Standard;
  if (s == "bipartite") return InterpolationKind::BipartiteShortcutThenStandard;
  throw InvalidInput("config: unknown interpolation '" + s + "'");
}

std::string schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Constant:
      return "constant";
    case ScheduleKind::Warmup:
      return "warmup";
    case ScheduleKind::Vanishing:
      return "vanishing";
  }
  return "warmup";
}

json schedule_to_json(const StepSchedule& s) {
  json out;
  out["kind"] = schedule_kind_name(s.kind);
  switch (s.kind) {
    case ScheduleKind::Constant:
      out["alpha"] = s.alpha;
      break;
    case ScheduleKind::Warmup:
      out["alpha_hi"] = s.alpha_hi;
      out["warmup_steps"] = s.warmup_steps;
      out["alpha_lo"] = s.alpha_lo;
      break;
    case ScheduleKind::Vanishing:
      out["power"] = s.power;
      out["alpha_cap"] = s.alpha_cap;
      break;
  }
  return out;
}

StepSchedule schedule_from_json(const json& obj) {
  reject_unknown(obj, "schedule",
                 {"kind", "alpha", "alpha_hi", "warmup_steps", "alpha_lo", "power", "alpha_cap"});
  StepSchedule s;
  const std::string kind = obj.value("kind", std::string("warmup"));
  if (kind == "constant") {
    s.kind = ScheduleKind::Constant;
  } else if (kind == "warmup") {
    s.kind = ScheduleKind::Warmup;
  } else if (kind == "vanishing") {
    s.kind = ScheduleKind::Vanishing;
  } else {
    throw InvalidInput("config: unknown schedule kind '" + kind + "'");
  }
  read_opt(obj, "alpha", s.alpha);
  read_opt(obj, "alpha_hi", s.alpha_hi);
  read_opt(obj, "warmup_steps", s.warmup_steps);
  read_opt(obj, "alpha_lo", s.alpha_lo);
  read_opt(obj, "power", s.power);
  read_opt(obj, "alpha_cap", s.alpha_cap);
  return s;
}

json amg_to_json(const AmgConfig& c) {
  json out;
  out["theta"] = c.theta;
  out["omega"] = c.omega;
  out["strength_delta"] = c.strength_delta;
  out["coarsest_max"] = c.coarsest_max;
  out["max_levels"] = c.max_levels;
  out["direct_coarse_max"] = c.direct_coarse_max;
  out["stall_ratio"] = c.stall_ratio;
  out["smoother_fine"] = smoother_name(c.smoother_fine);
  out["smoother_coarse"] = smoother_name(c.smoother_coarse);
  out["interpolation"] = interpolation_name(c.interpolation);
  out["ideal_dense_max"] = c.ideal_dense_max;
  return out;
}

AmgConfig amg_from_json(const json& obj, AmgConfig c) {
  reject_unknown(obj, "linear.amg",
                 {"theta", "omega", "strength_delta", "coarsest_max", "max_levels",
                  "direct_coarse_max", "stall_ratio", "smoother_fine", "smoother_coarse",
                  "interpolation", "ideal_dense_max"});
  read_opt(obj, "theta", c.theta);
  read_opt(obj, "omega", c.omega);
  read_opt(obj, "strength_delta", c.strength_delta);
  read_opt(obj, "coarsest_max", c.coarsest_max);
  read_opt(obj, "max_levels", c.max_levels);
  read_opt(obj, "direct_coarse_max", c.direct_coarse_max);
  read_opt(obj, "stall_ratio", c.stall_ratio);
  read_opt(obj, "ideal_dense_max", c.ideal_dense_max);
  if (obj.contains("smoother_fine")) {
    c.smoother_fine = parse_smoother(obj.at("smoother_fine").get<std::string>());
  }
  if (obj.contains("smoother_coarse")) {
    c.smoother_coarse = parse_smoother(obj.at("smoother_coarse").get<std::string>());
  }
  if (obj.contains("interpolation")) {
    c.interpolation = parse_interpolation(obj.at("interpolation").get<std::string>());
  }
  return c;
}

double parse_number(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw InvalidInput("");
    return v;
  } catch (const std::exception&) {
    throw InvalidInput("schedule: bad number '" + text + "' in '" + context + "'");
  }
}

}  // namespace

namespace detail {

json config_to_json(const IpdConfig& config) {
  json doc;
  doc["schedule"] = schedule_to_json(config.schedule);
  doc["kkt_tol"] = config.kkt_tol;
  doc["max_outer"] = config.max_outer;
  doc["adaptive_inner_tol"] = config.adaptive_inner_tol;
  doc["ssn"] = {{"tau", config.ssn.tau_ls},         {"delta", config.ssn.delta_ls},
                {"j_max", config.ssn.j_max},        {"l_max", config.ssn.l_max},
                {"tol_floor", config.ssn.tol_floor}};
  const HybridPolicy& lin = config.linear;
  doc["linear"] = {{"backend", backend_name(lin.backend)},
                   {"dense", config.dense_linear},
                   {"direct_threshold", lin.direct_threshold},
                   {"tol", lin.tol},
                   {"max_iter", lin.max_iter},
                   {"pcg_max_iter", lin.pcg_max_iter},
                   {"dense_fallback_max", lin.dense_fallback_max},
                   {"amg", amg_to_json(lin.amg)}};
  return doc;
}

IpdConfig config_from_json(const json& doc) {
  reject_unknown(doc, "config",
                 {"schedule", "kkt_tol", "max_outer", "adaptive_inner_tol", "ssn", "linear"});
  IpdConfig config;
  try {
    if (doc.contains("schedule")) config.schedule = schedule_from_json(doc.at("schedule"));
    read_opt(doc, "kkt_tol", config.kkt_tol);
    read_opt(doc, "max_outer", config.max_outer);
    read_opt(doc, "adaptive_inner_tol", config.adaptive_inner_tol);
    if (doc.contains("ssn")) {
      const json& s = doc.at("ssn");
      reject_unknown(s, "ssn", {"tau", "delta", "j_max", "l_max", "tol_floor"});
      read_opt(s, "tau", config.ssn.tau_ls);
      read_opt(s, "delta", config.ssn.delta_ls);
      read_opt(s, "j_max", config.ssn.j_max);
      read_opt(s, "l_max", config.ssn.l_max);
      read_opt(s, "tol_floor", config.ssn.tol_floor);
    }
    if (doc.contains("linear")) {
      const json& l = doc.at("linear");
      reject_unknown(l, "linear",
                     {"backend", "dense", "direct_threshold", "tol", "max_iter", "pcg_max_iter",
                      "dense_fallback_max", "amg"});
      HybridPolicy& lin = config.linear;
      if (l.contains("backend")) lin.backend = parse_backend(l.at("backend").get<std::string>());
      read_opt(l, "dense", config.dense_linear);
      read_opt(l, "direct_threshold", lin.direct_threshold);
      read_opt(l, "tol", lin.tol);
      read_opt(l, "max_iter", lin.max_iter);
      read_opt(l, "pcg_max_iter", lin.pcg_max_iter);
      read_opt(l, "dense_fallback_max", lin.dense_fallback_max);
      if (l.contains("amg")) lin.amg = amg_from_json(l.at("amg"), lin.amg);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

}  // namespace detail

void write_config_json(std::ostream& out, const IpdConfig& config) {
  out << detail::config_to_json(config).dump(1) << "\n";
}

IpdConfig read_config_json(std::istream& in) {
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config json: ") + e.what());
  }
  return detail::config_from_json(doc);
}

IpdConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_config_json(in);
}

std::string config_to_string(const IpdConfig& config) {
  std::ostringstream os;
  write_config_json(os, config);
  return os.str();
}

StepSchedule parse_schedule(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) args.push_back(parse_number(item, text));
  }
  StepSchedule s;
  if (kind == "constant") {
    if (args.size() != 1) throw InvalidInput("schedule: constant takes one value");
    s = StepSchedule::constant(args[0]);
  } else if (kind == "warmup") {
    if (args.empty()) {
      s = StepSchedule::warmup(10.0, 10, 0.5);
    } else if (args.size() == 3 && args[1] >= 0.0 && args[1] == static_cast<double>(static_cast<std::size_t>(args[1]))) {
      s = StepSchedule::warmup(args[0], static_cast<std::size_t>(args[1]), args[2]);
    } else {
      throw InvalidInput("schedule: warmup takes alpha_hi,steps,alpha_lo");
    }
  } else if (kind == "vanishing") {
    if (args.empty() || args.size() > 2) throw InvalidInput("schedule: vanishing takes power[,cap]");
    s = StepSchedule::vanishing(args[0]);
    if (args.size() == 2) s.alpha_cap = args[1];
  } else {
    throw InvalidInput("schedule: unknown kind '" + kind + "'");
  }
  s.validate();
  return s;
}

LinearBackend parse_backend(const std::string& name) {
  if (name == "amg") return LinearBackend::Amg;
  if (name == "pcg") return LinearBackend::Pcg;
  throw InvalidInput("unknown backend '" + name + "'");
}

std::string backend_name(LinearBackend backend) {
  return backend == LinearBackend::Amg ? "amg" : "pcg";
}

}  // namespace transolve
