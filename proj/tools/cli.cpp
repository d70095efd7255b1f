#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "mispro/error.hpp"
#include "mispro/json_io.hpp"
#include "mispro/synth.hpp"
#include "mispro/wav.hpp"

namespace mispro::cli {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw_usage("config error: field '" + field + "' " + what);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<int> int_list(const json& v, const std::string& field) {
  std::vector<int> out;
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) config_error(field, "must be an integer or a list of integers");
  for (const auto& x : v) {
    if (!x.is_number_integer()) config_error(field, "must contain integers only");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<report::Format> format_list(const std::vector<std::string>& names) {
  std::vector<report::Format> out;
  for (const auto& n : names) out.push_back(report::format_from_string(n));
  return out;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return kExitUsage;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Numerical: return kExitNumerical;
  }
  return kExitData;
}

Utterance read_wav_utterance(const std::filesystem::path& path) {
  const auto w = wav::read(path);
  if (w.channels != 1) throw_data("mono required: " + path.string() + " has " + std::to_string(w.channels) + " channels");
  if (w.samples.empty()) throw_data("empty audio: " + path.string());
  Utterance u;
  u.samples = w.samples;
  u.sample_rate = w.sample_rate;
  if (w.sample_rate != kCanonicalSampleRate) u = corpus::resample(u, kCanonicalSampleRate);
  return u;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_usage(std::string("config error: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw_usage("config error: top level must be an object");
  static const std::set<std::string> known = {"manifest", "feature", "variance_fraction", "mfcc_include_c0",
                                              "average_class2", "preprocess", "synth_spec", "out", "seed", "jobs",
                                              "steps", "words", "formats"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) config_error(key, "is not a known setting");
  auto str = [&](const char* key) {
    if (!j.at(key).is_string()) config_error(key, "must be a string");
    return j.at(key).get<std::string>();
  };
  if (j.contains("manifest")) c.manifest = str("manifest");
  if (j.contains("feature")) {
    try {
      c.feature = features::feature_kind_from_string(str("feature"));
    } catch (const Error&) {
      config_error("feature", "must be mfcc13 or spectrogram50");
    }
  }
  if (j.contains("variance_fraction")) {
    if (!j["variance_fraction"].is_number()) config_error("variance_fraction", "must be a number");
    c.variance_fraction = j["variance_fraction"].get<double>();
  }
  for (const char* key : {"mfcc_include_c0", "average_class2"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_boolean()) config_error(key, "must be true or false");
    (std::string_view(key) == "mfcc_include_c0" ? c.mfcc_include_c0 : c.average_class2) = j[key].get<bool>();
  }
  if (j.contains("preprocess")) c.preprocess = json_io::preprocess_config_from_json(j["preprocess"], "preprocess");
  if (j.contains("synth_spec")) c.synth_spec = str("synth_spec");
  if (j.contains("out")) c.out = str("out");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("seed", "must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("jobs")) {
    if (!j["jobs"].is_number_unsigned() || j["jobs"].get<unsigned>() == 0) config_error("jobs", "must be a positive integer");
    c.jobs = j["jobs"].get<unsigned>();
  }
  if (j.contains("steps")) c.steps = int_list(j["steps"], "steps");
  if (j.contains("words")) c.words = int_list(j["words"], "words");
  if (j.contains("formats")) {
    if (!j["formats"].is_array()) config_error("formats", "must be a list of strings");
    std::vector<std::string> names;
    for (const auto& f : j["formats"]) {
      if (!f.is_string()) config_error("formats", "must be a list of strings");
      names.push_back(f.get<std::string>());
    }
    try {
      c.formats = format_list(names);
    } catch (const Error& e) {
      config_error("formats", e.what());
    }
  }
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  if (!(c.variance_fraction > 0.0 && c.variance_fraction <= 1.0))
    config_error("variance_fraction", "must be in (0, 1]");
  for (int s : c.steps)
    if (s < 1 || s > 3) config_error("steps", "must contain only 1, 2 or 3");
  if (c.synth_spec && !c.seed) config_error("seed", "is required when synth_spec is set");
  preprocess::validate(c.preprocess);
}

detector::DetectorConfig detector_config(const RunConfig& c) {
  detector::DetectorConfig d;
  d.feature = c.feature;
  d.variance_fraction = c.variance_fraction;
  d.mfcc.include_c0 = c.mfcc_include_c0;
  d.average_class2 = c.average_class2;
  d.preprocess = c.preprocess;
  return d;
}

namespace {

struct Flags {
  std::string config;
  std::string manifest;
  std::string feature;
  double variance_fraction = 0.0;
  std::string out;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::vector<int> words;
  std::vector<int> steps;
  std::vector<std::string> formats;
  std::string spec;
  bool reference = false;
  std::string bundle;
  std::string wav;
  std::string result;
  std::vector<std::size_t> boundaries;
};

int cmd_synth(const RunConfig& c, bool reference, std::ostream& out) {
  if (!c.seed) throw_usage("synth requires --seed");
  if (c.out.empty()) throw_usage("synth requires --out");
  corpus::SynthSpec spec;
  if (c.synth_spec) spec = corpus::load_synth_spec(*c.synth_spec);
  else if (reference) spec = corpus::reference_synth_spec();
  else throw_usage("synth requires --spec <file> or --reference");
  const auto summary = corpus::write_corpus(corpus::synthesize_corpus(spec, *c.seed), c.out);
  if (summary.up_to_date()) out << "up to date: " << summary.manifest_path.string() << "\n";
  else out << summary.manifest_path.string() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  if (c.manifest.empty()) throw_usage("train requires --manifest");
  if (c.words.size() != 1) throw_usage("train requires exactly one --word");
  if (c.out.empty()) throw_usage("train requires --out <bundle file>");
  const auto manifest = corpus::load_manifest(c.manifest);
  if (!manifest.has_word(c.words.front())) throw_usage("unknown word id " + std::to_string(c.words.front()));
  const auto cfg = detector_config(c);
  const auto cleaned = harness::clean_corpus(manifest, cfg.preprocess, c.jobs);
  const auto bundle = detector::train_bundle(c.words.front(), manifest, cleaned, cfg);
  if (c.out.has_parent_path()) std::filesystem::create_directories(c.out.parent_path());
  detector::save_bundle(bundle, c.out);
  out << c.out.string() << "\n";
  return kExitOk;
}

// Syllable boundaries come from --boundaries, or from the manifest entry whose audio is the WAV.
Utterance detect_input(const RunConfig& c, const Flags& f) {
  if (!f.boundaries.empty()) {
    if (f.boundaries.size() % 2 != 0) throw_usage("--boundaries takes start,end pairs");
    auto u = read_wav_utterance(f.wav);
    std::vector<Boundary> b;
    for (std::size_t i = 0; i < f.boundaries.size(); i += 2) b.push_back({f.boundaries[i], f.boundaries[i + 1]});
    u.boundaries = b;
    return u;
  }
  if (!c.manifest.empty()) {
    const auto manifest = corpus::load_manifest(c.manifest);
    std::error_code ec;
    for (const auto& s : manifest.samples)
      if (std::filesystem::equivalent(manifest.audio_path(s), f.wav, ec)) return corpus::load_utterance(s, manifest);
  }
  return read_wav_utterance(f.wav);
}

int cmd_detect(const RunConfig& c, const Flags& f, std::ostream& out) {
  if (f.bundle.empty() || f.wav.empty()) throw_usage("detect requires --bundle and --wav");
  const auto bundle = detector::load_bundle(f.bundle);
  const auto outcome = detector::detect(bundle, detect_input(c, f));
  out << detector::outcome_to_json(outcome) << "\n";
  return kExitOk;
}

harness::StepSelector selector_of(const RunConfig& c) {
  harness::StepSelector sel;
  sel.steps.clear();
  for (int s : c.steps) sel.steps.push_back(harness::step_from_int(s));
  std::sort(sel.steps.begin(), sel.steps.end());
  sel.steps.erase(std::unique(sel.steps.begin(), sel.steps.end()), sel.steps.end());
  sel.words = c.words;
  return sel;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw_data("cannot write " + path.string());
  o << text << "\n";
}

int cmd_loo(const RunConfig& c, std::ostream& out) {
  if (c.manifest.empty()) throw_usage("loo requires --manifest");
  if (c.out.empty()) throw_usage("loo requires --out <directory>");
  const auto manifest = corpus::load_manifest(c.manifest);
  harness::HarnessConfig hc{detector_config(c), c.jobs};
  const auto result = harness::run_loo(manifest, selector_of(c), hc);
  std::filesystem::create_directories(c.out);
  harness::save_result(result, c.out / "result.json");
  write_text(c.out / "timing.json", harness::timing_to_json(result));
  for (auto fmt : c.formats)
    for (const auto& p : report::emit_report(result, manifest, fmt, c.out)) out << p.string() << "\n";
  return kExitOk;
}

int cmd_report(const RunConfig& c, const Flags& f, std::ostream& out) {
  if (f.result.empty()) throw_usage("report requires --result");
  if (c.manifest.empty()) throw_usage("report requires --manifest");
  if (c.out.empty()) throw_usage("report requires --out <directory>");
  const auto manifest = corpus::load_manifest(c.manifest);
  const auto result = harness::load_result(f.result);
  for (auto fmt : c.formats)
    for (const auto& p : report::emit_report(result, manifest, fmt, c.out)) out << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PCA-based hierarchical mispronunciation detection", "mispro"};
  app.require_subcommand(1, 1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--out", f.out, "output file or directory");
  };
  auto model = [&](CLI::App* sub) {
    sub->add_option("--manifest", f.manifest, "corpus manifest (JSON)");
    sub->add_option("--feature", f.feature, "mfcc13 or spectrogram50");
    sub->add_option("--variance-fraction", f.variance_fraction, "eigenspace variance fraction in (0, 1]");
    sub->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synth", "render a synthetic corpus");
  common(synth);
  synth->add_option("--spec", f.spec, "synthesis spec (JSON)");
  synth->add_flag("--reference", f.reference, "use the built-in reference spec");
  synth->add_option("--seed", f.seed, "random seed");

  auto* train = app.add_subcommand("train", "train a detector bundle for one word");
  common(train);
  model(train);
  train->add_option("--word", f.words, "word id");

  auto* detect = app.add_subcommand("detect", "run the three-step detector on a WAV file");
  detect->add_option("--bundle", f.bundle, "trained bundle")->required();
  detect->add_option("--wav", f.wav, "16-bit PCM mono WAV")->required();
  detect->add_option("--manifest", f.manifest, "manifest holding the WAV's syllable boundaries");
  detect->add_option("--boundaries", f.boundaries, "syllable boundaries as start,end sample pairs")->delimiter(',');

  auto* loo = app.add_subcommand("loo", "leave-one-speaker-out evaluation");
  common(loo);
  model(loo);
  loo->add_option("--word", f.words, "word ids (default: all)");
  loo->add_option("--step", f.steps, "steps 1-3 (default: all)");
  loo->add_option("--format", f.formats, "csv, json, plot-data (default: all)");

  auto* rep = app.add_subcommand("report", "render reports from a saved LOO result");
  common(rep);
  rep->add_option("--manifest", f.manifest, "corpus manifest (JSON)");
  rep->add_option("--result", f.result, "result.json written by loo");
  rep->add_option("--format", f.formats, "csv, json, plot-data (default: all)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto given = [&](const std::string& name) {
    for (auto* sub : app.get_subcommands())
      if (auto* o = sub->get_option_no_throw(name); o && o->count() > 0) return true;
    return false;
  };

  try {
    RunConfig c;
    if (!f.config.empty()) c = parse_run_config(read_text(f.config));
    if (given("--manifest")) c.manifest = f.manifest;
    if (given("--feature")) c.feature = features::feature_kind_from_string(f.feature);
    if (given("--variance-fraction")) c.variance_fraction = f.variance_fraction;
    if (given("--out")) c.out = f.out;
    if (given("--seed")) c.seed = f.seed;
    if (given("--jobs")) c.jobs = f.jobs;
    if (given("--word")) c.words = f.words;
    if (given("--step")) c.steps = f.steps;
    if (given("--format")) c.formats = format_list(f.formats);
    if (given("--spec")) c.synth_spec = f.spec;
    validate(c);

    if (synth->parsed()) return cmd_synth(c, f.reference, out);
    if (train->parsed()) return cmd_train(c, out);
    if (detect->parsed()) return cmd_detect(c, f, out);
    if (loo->parsed()) return cmd_loo(c, out);
    return cmd_report(c, f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace mispro::cli
