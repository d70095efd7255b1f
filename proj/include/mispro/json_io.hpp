#pragma once

#include <string>

#include "json.hpp"
#include "mispro/preprocess.hpp"
#include "mispro/threshold.hpp"

namespace mispro::json_io {

nlohmann::json to_json(const preprocess::PreprocessConfig& cfg);
/// Unknown keys and wrong types raise a usage error naming `where.key`.
preprocess::PreprocessConfig preprocess_config_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json to_json(const threshold::ThresholdModel& m);
threshold::ThresholdModel threshold_model_from_json(const nlohmann::json& j);

}  // namespace mispro::json_io
