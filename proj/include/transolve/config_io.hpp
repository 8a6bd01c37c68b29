#pragma once

#include <iosfwd>
#include <string>

#include "transolve/ipd.hpp"

namespace transolve {

// JSON layout:
//   {"schedule": {"kind": "warmup", "alpha_hi": 10, "warmup_steps": 10, "alpha_lo": 0.5},
//    "kkt_tol": 1e-6, "max_outer": 500, "adaptive_inner_tol": true,
//    "ssn": {"tau": 0.2, "delta": 0.9, "j_max": 15, "l_max": 50, "tol_floor": 1e-11},
//    "linear": {"backend": "amg", "dense": false, "direct_threshold": 0, "tol": 1e-11,
//               "max_iter": 200, "pcg_max_iter": 100000, "dense_fallback_max": 3000,
//               "amg": {...AmgConfig fields...}}}
// Missing keys keep their defaults; unknown keys are rejected.
void write_config_json(std::ostream& out, const IpdConfig& config);
IpdConfig read_config_json(std::istream& in);
IpdConfig load_config(const std::string& path);
std::string config_to_string(const IpdConfig& config);

// "constant:0.5", "warmup:10,10,0.5", "vanishing:1" (or "vanishing:1,cap").
StepSchedule parse_schedule(const std::string& text);

LinearBackend parse_backend(const std::string& name);
std::string backend_name(LinearBackend backend);

}  // namespace transolve
