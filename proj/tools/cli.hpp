#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/detector.hpp"
#include "mispro/harness.hpp"
#include "mispro/report.hpp"

namespace mispro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Settings shared by every subcommand. Fields come from defaults, then the --config file,
/// then command-line flags.
struct RunConfig {
  std::filesystem::path manifest;
  features::FeatureKind feature = features::FeatureKind::Mfcc13;
  double variance_fraction = 0.8;
  bool mfcc_include_c0 = true;
  bool average_class2 = true;
  preprocess::PreprocessConfig preprocess;
  std::optional<std::filesystem::path> synth_spec;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  std::vector<int> steps = {1, 2, 3};
  std::vector<int> words;
  std::vector<report::Format> formats = {report::Format::Csv, report::Format::Json, report::Format::PlotData};
};

/// Parses a JSON config. Unknown keys and wrong types raise a usage error naming the field.
RunConfig parse_run_config(std::string_view json_text, RunConfig base = {});
void validate(const RunConfig& cfg);

detector::DetectorConfig detector_config(const RunConfig& cfg);

/// Runs the tool with `args` (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mispro::cli
