#include "mispro/json_io.hpp"

#include <set>

#include "mispro/error.hpp"

namespace mispro::json_io {

using nlohmann::json;

json to_json(const preprocess::PreprocessConfig& c) {
  return {{"vad_threshold", c.vad_threshold},
          {"vad_frame_ms", c.vad_frame_ms},
          {"vad_percentile", c.vad_percentile},
          {"noise_suppression", c.noise_suppression},
          {"min_noise_ms", c.min_noise_ms},
          {"over_subtraction", c.over_subtraction},
          {"spectral_floor", c.spectral_floor},
          {"tsm_frame_ms", c.tsm_frame_ms},
          {"tsm_tolerance_ms", c.tsm_tolerance_ms},
          {"target_source", c.target_source == preprocess::TargetDurationSource::Explicit ? "explicit" : "training-mean"},
          {"target_ms", c.target_ms}};
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  bool ok = false;
  if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
  else if constexpr (std::is_arithmetic_v<T>) ok = v.is_number();
  else ok = v.is_string();
  if (!ok) throw_usage("config error: field '" + where + "." + key + "' has the wrong type");
  out = v.get<T>();
}

}  // namespace

preprocess::PreprocessConfig preprocess_config_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw_usage("config error: field '" + where + "' must be an object");
  static const std::set<std::string> known = {"vad_threshold", "vad_frame_ms",     "vad_percentile", "noise_suppression",
                                              "min_noise_ms",  "over_subtraction", "spectral_floor", "tsm_frame_ms",
                                              "tsm_tolerance_ms", "target_source", "target_ms"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw_usage("config error: unknown field '" + where + "." + key + "'");
  preprocess::PreprocessConfig c;
  read_field(j, "vad_threshold", c.vad_threshold, where);
  read_field(j, "vad_frame_ms", c.vad_frame_ms, where);
  read_field(j, "vad_percentile", c.vad_percentile, where);
  read_field(j, "noise_suppression", c.noise_suppression, where);
  read_field(j, "min_noise_ms", c.min_noise_ms, where);
  read_field(j, "over_subtraction", c.over_subtraction, where);
  read_field(j, "spectral_floor", c.spectral_floor, where);
  read_field(j, "tsm_frame_ms", c.tsm_frame_ms, where);
  read_field(j, "tsm_tolerance_ms", c.tsm_tolerance_ms, where);
  std::string source = "training-mean";
  read_field(j, "target_source", source, where);
  if (source == "explicit") c.target_source = preprocess::TargetDurationSource::Explicit;
  else if (source != "training-mean")
    throw_usage("config error: field '" + where + ".target_source' must be training-mean or explicit");
  read_field(j, "target_ms", c.target_ms, where);
  try {
    preprocess::validate(c);
  } catch (const Error& e) {
    throw_usage("config error: field '" + where + "': " + e.what());
  }
  return c;
}

json to_json(const threshold::ThresholdModel& m) {
  return {{"accept_mean", m.accept.mean},
          {"accept_stddev", m.accept.stddev},
          {"reject_mean", m.reject.mean},
          {"reject_stddev", m.reject.stddev},
          {"prior_accept", m.prior_accept},
          {"prior_reject", m.prior_reject},
          {"threshold", m.threshold},
          {"theoretical_error", m.theoretical_error},
          {"status", threshold::to_string(m.status)}};
}

threshold::ThresholdModel threshold_model_from_json(const json& j) {
  try {
    threshold::ThresholdModel m;
    m.accept = {j.at("accept_mean").get<double>(), j.at("accept_stddev").get<double>()};
    m.reject = {j.at("reject_mean").get<double>(), j.at("reject_stddev").get<double>()};
    m.prior_accept = j.at("prior_accept").get<double>();
    m.prior_reject = j.at("prior_reject").get<double>();
    m.threshold = j.at("threshold").get<double>();
    m.theoretical_error = j.at("theoretical_error").get<double>();
    m.status = threshold::threshold_status_from_string(j.at("status").get<std::string>());
    return m;
  } catch (const json::exception& e) {
    throw_data(std::string("corrupt threshold model: ") + e.what());
  }
}

}  // namespace mispro::json_io
