#pragma once

#include "json.hpp"
#include "transolve/ipd.hpp"

namespace transolve::detail {

nlohmann::json config_to_json(const IpdConfig& config);
IpdConfig config_from_json(const nlohmann::json& doc);

}  // namespace transolve::detail
