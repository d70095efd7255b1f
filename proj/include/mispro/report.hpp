#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/corpus.hpp"
#include "mispro/harness.hpp"

namespace mispro::report {

enum class Format { Csv, Json, PlotData };

std::string_view to_string(Format f);
Format format_from_string(std::string_view s);

inline constexpr int kReportVersion = 1;

/// Column order of metrics.csv; metrics.json uses the same keys.
inline constexpr const char* kMetricColumns[] = {
    "step", "word", "word_label", "syllable", "syllable_label", "n1", "n2", "ne1", "ne2", "pe", "fnr", "fpr",
    "folds", "non_separable_folds", "separable", "threshold_mean", "threshold_cv"};

inline constexpr const char* kSummaryColumns[] = {"step", "pe_max", "pe_min", "pe_avg"};

/// Column order of plot-data files.
inline constexpr const char* kPlotColumns[] = {"speaker", "class", "repetition", "word", "truth", "distance",
                                                "fold_threshold"};

/// Shortest round-trip decimal; empty for an absent value.
std::string format_number(double x);

std::string metrics_csv(const harness::MetricTable& table);
std::string summary_csv(const harness::MetricTable& table);
std::string metrics_json(const harness::MetricTable& table);

/// Writes the report into `out_dir` and returns the written paths, in order.
///  - csv: metrics.csv and summary.csv
///  - json: metrics.json
///  - plot-data: one plot_s<step>_w<word>[_k<syllable>].csv per (step, word, syllable) with a row
///    per tested sample
std::vector<std::filesystem::path> emit_report(const harness::LooResult& result, const corpus::CorpusManifest& manifest,
                                               Format format, const std::filesystem::path& out_dir);

}  // namespace mispro::report
