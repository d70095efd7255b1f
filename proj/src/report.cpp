#include "mispro/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mispro/error.hpp"

namespace mispro::report {

using nlohmann::json;

namespace {

std::string opt(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <std::size_t N>
std::string header(const char* const (&cols)[N]) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? "," : "") + std::string(cols[i]);
  return out + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write report file " + path.string());
  out << content;
  if (!out) throw_data("failed writing report file " + path.string());
}

}  // namespace

std::string_view to_string(Format f) {
  switch (f) {
    case Format::Csv: return "csv";
    case Format::Json: return "json";
    case Format::PlotData: return "plot-data";
  }
  return "csv";
}

Format format_from_string(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  if (s == "plot-data") return Format::PlotData;
  throw_usage("unknown report format '" + std::string(s) + "' (expected csv, json or plot-data)");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string metrics_csv(const harness::MetricTable& table) {
  std::string out = header(kMetricColumns);
  for (const auto& r : table.rows) {
    std::ostringstream line;
    line << static_cast<int>(r.step) << ',' << r.word << ',' << csv_field(r.word_label) << ','
         << (r.syllable ? std::to_string(*r.syllable + 1) : "") << ',' << csv_field(r.syllable_label) << ','
         << r.counts.n1 << ',' << r.counts.n2 << ',' << r.counts.e1 << ',' << r.counts.e2 << ',' << opt(r.pe) << ','
         << opt(r.fnr) << ',' << opt(r.fpr) << ',' << r.folds << ',' << r.non_separable_folds << ','
         << (r.separable() ? "true" : "false") << ',' << format_number(r.threshold_mean) << ','
         << format_number(r.threshold_cv) << '\n';
    out += line.str();
  }
  return out;
}

std::string summary_csv(const harness::MetricTable& table) {
  std::string out = header(kSummaryColumns);
  for (const auto& s : table.summaries)
    out += std::to_string(static_cast<int>(s.step)) + ',' + opt(s.pe_max) + ',' + opt(s.pe_min) + ',' + opt(s.pe_avg) + '\n';
  return out;
}

std::string metrics_json(const harness::MetricTable& table) {
  json j;
  j["schema"] = "mispro-report";
  j["version"] = kReportVersion;
  j["rows"] = json::array();
  for (const auto& r : table.rows)
    j["rows"].push_back({{"step", static_cast<int>(r.step)},
                         {"word", r.word},
                         {"word_label", r.word_label},
                         {"syllable", r.syllable ? json(*r.syllable + 1) : json(nullptr)},
                         {"syllable_label", r.syllable_label},
                         {"n1", r.counts.n1},
                         {"n2", r.counts.n2},
                         {"ne1", r.counts.e1},
                         {"ne2", r.counts.e2},
                         {"pe", opt_json(r.pe)},
                         {"fnr", opt_json(r.fnr)},
                         {"fpr", opt_json(r.fpr)},
                         {"folds", r.folds},
                         {"non_separable_folds", r.non_separable_folds},
                         {"separable", r.separable()},
                         {"threshold_mean", r.threshold_mean},
                         {"threshold_cv", r.threshold_cv}});
  j["summary"] = json::array();
  for (const auto& s : table.summaries)
    j["summary"].push_back(
        {{"step", static_cast<int>(s.step)}, {"pe_max", opt_json(s.pe_max)}, {"pe_min", opt_json(s.pe_min)}, {"pe_avg", opt_json(s.pe_avg)}});
  return j.dump(1) + "\n";
}

std::vector<std::filesystem::path> emit_report(const harness::LooResult& result, const corpus::CorpusManifest& manifest,
                                               Format format, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_data("cannot create report directory " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    written.push_back(out_dir / name);
    write_file(written.back(), content);
  };

  if (format == Format::PlotData) {
    std::map<std::tuple<int, int, std::size_t>, std::string> files;
    for (const auto& f : result.folds) {
      const std::size_t k = f.step == harness::Step::Syllable ? f.syllable + 1 : 0;
      auto& body = files[{static_cast<int>(f.step), f.word, k}];
      if (body.empty()) body = header(kPlotColumns);
      for (const auto& t : f.tests)
        body += std::to_string(t.speaker) + ',' + std::string(mispro::to_string(t.speaker_class)) + ',' +
                std::to_string(t.repetition) + ',' + std::to_string(t.word) + ',' + std::to_string(t.truth) + ',' +
                format_number(t.distance) + ',' + format_number(f.threshold.threshold) + '\n';
    }
    for (const auto& [key, body] : files) {
      const auto [step, word, k] = key;
      std::string name = "plot_s" + std::to_string(step) + "_w" + std::to_string(word);
      if (k) name += "_k" + std::to_string(k);
      emit(name + ".csv", body);
    }
    return written;
  }

  const auto table = harness::compute_metrics(result, manifest);
  if (format == Format::Csv) {
    emit("metrics.csv", metrics_csv(table));
    emit("summary.csv", summary_csv(table));
  } else {
    emit("metrics.json", metrics_json(table));
  }
  return written;
}

}  // namespace mispro::report
