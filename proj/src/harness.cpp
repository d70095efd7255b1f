#include "mispro/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"
#include "mispro/error.hpp"
#include "mispro/json_io.hpp"

namespace mispro::harness {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Runs task(i) for i in [0, n) on up to `jobs` threads. The first failure by index is rethrown.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool has(const std::vector<int>& xs, int v) { return xs.empty() || std::find(xs.begin(), xs.end(), v) != xs.end(); }

bool wants(const StepSelector& sel, Step s) { return std::find(sel.steps.begin(), sel.steps.end(), s) != sel.steps.end(); }

bool accepted_by(const threshold::ThresholdModel& m, double d) {
  return std::isfinite(d) && threshold::classify(m, d) == threshold::Decision::Accept;
}

TestRecord record_for(const Utterance& u, int truth, double distance, const threshold::ThresholdModel& m) {
  TestRecord r;
  r.word = u.word;
  r.speaker = u.speaker;
  r.speaker_class = u.cls;
  r.repetition = u.repetition;
  r.truth = truth;
  r.distance = distance;
  r.accepted = accepted_by(m, distance);
  return r;
}

struct FoldTask {
  int word = 0;
  int speaker = 0;
};

std::vector<FoldRecord> run_fold(const corpus::CorpusManifest& manifest,
                                 std::span<const preprocess::CleanUtterance> cleaned, const FoldTask& task,
                                 const StepSelector& sel, const HarnessConfig& cfg) {
  std::vector<preprocess::CleanUtterance> train;
  std::vector<const Utterance*> target_tests, other_tests;
  for (const auto& c : cleaned) {
    if (c.utterance.speaker != task.speaker) {
      train.push_back(c);
    } else {
      (c.utterance.word == task.word ? target_tests : other_tests).push_back(&c.utterance);
    }
  }
  detector::StepSet steps{wants(sel, Step::Word), wants(sel, Step::Native), wants(sel, Step::Syllable)};

  const auto t0 = Clock::now();
  const auto bundle = detector::train_bundle(task.word, manifest, train, cfg.detector, steps);
  const double train_ms = ms_since(t0);

  std::vector<FoldRecord> out;
  auto fold = [&](Step step) {
    FoldRecord f;
    f.step = step;
    f.word = task.word;
    f.speaker = task.speaker;
    f.train_ms = train_ms;
    return f;
  };
  auto per_sample = [](Clock::time_point t, std::size_t n) { return n ? ms_since(t) / static_cast<double>(n) : 0.0; };

  if (steps.word) {
    auto f = fold(Step::Word);
    f.threshold = bundle.verification->threshold;
    const auto t = Clock::now();
    for (const auto* u : target_tests)
      f.tests.push_back(record_for(*u, 1, detector::verification_distance(bundle, *u), f.threshold));
    for (const auto* u : other_tests)
      f.tests.push_back(record_for(*u, 2, detector::verification_distance(bundle, *u), f.threshold));
    f.test_ms_per_sample = per_sample(t, f.tests.size());
    out.push_back(std::move(f));
  }
  if (steps.native) {
    auto f = fold(Step::Native);
    f.threshold = bundle.native->threshold;
    const auto t = Clock::now();
    for (const auto* u : target_tests)
      f.tests.push_back(record_for(*u, u->cls == SpeakerClass::Native ? 1 : 2, detector::native_distance(bundle, *u),
                                   f.threshold));
    f.test_ms_per_sample = per_sample(t, f.tests.size());
    out.push_back(std::move(f));
  }
  if (steps.syllables) {
    std::vector<FoldRecord> per_syllable;
    for (std::size_t k = 0; k < bundle.syllables.size(); ++k) {
      auto f = fold(Step::Syllable);
      f.syllable = k;
      f.syllable_label = bundle.syllables[k].label;
      f.threshold = bundle.syllables[k].model.threshold;
      per_syllable.push_back(std::move(f));
    }
    const auto t = Clock::now();
    for (const auto* u : target_tests) {
      const auto verdicts = detector::syllable_verdicts(bundle, *u);
      const int truth = u->cls == SpeakerClass::Native ? 1 : 2;
      for (std::size_t k = 0; k < verdicts.size(); ++k)
        per_syllable[k].tests.push_back(record_for(*u, truth, verdicts[k].distance, per_syllable[k].threshold));
    }
    const double each = per_sample(t, target_tests.size());
    for (auto& f : per_syllable) {
      f.test_ms_per_sample = each;
      out.push_back(std::move(f));
    }
  }
  return out;
}


json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string_view to_string(Step s) {
  switch (s) {
    case Step::Word: return "word";
    case Step::Native: return "native";
    case Step::Syllable: return "syllable";
  }
  return "word";
}

Step step_from_int(int n) {
  if (n < 1 || n > 3) throw_usage("step must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  return static_cast<Step>(n);
}

std::vector<preprocess::CleanUtterance> clean_corpus(const corpus::CorpusManifest& manifest,
                                                     const preprocess::PreprocessConfig& cfg, unsigned jobs) {
  corpus::validate(manifest);
  std::vector<preprocess::CleanUtterance> out(manifest.samples.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const auto& s = manifest.samples[i];
    try {
      out[i] = preprocess::clean(corpus::load_utterance(s, manifest), cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + s.audio + ": " + e.what());
    }
  });
  return out;
}

LooResult run_loo(const corpus::CorpusManifest& manifest, std::span<const preprocess::CleanUtterance> cleaned,
                  const StepSelector& selector, const HarnessConfig& cfg) {
  detector::validate(cfg.detector);
  for (int w : selector.words)
    if (!manifest.has_word(w)) throw_usage("unknown word id " + std::to_string(w));

  std::set<int> speakers;
  for (const auto& s : manifest.speakers) speakers.insert(s.id);
  std::vector<FoldTask> tasks;
  for (const auto& w : manifest.words) {
    if (!has(selector.words, w.id)) continue;
    for (int s : speakers)
      if (has(selector.speakers, s)) tasks.push_back({w.id, s});
  }
  std::sort(tasks.begin(), tasks.end(),
            [](const FoldTask& a, const FoldTask& b) { return std::tie(a.word, a.speaker) < std::tie(b.word, b.speaker); });

  LooResult result;
  result.feature = cfg.detector.feature;
  result.variance_fraction = cfg.detector.variance_fraction;
  if (selector.steps.empty()) return result;

  std::vector<std::vector<FoldRecord>> per_task(tasks.size());
  parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    try {
      per_task[i] = run_fold(manifest, cleaned, tasks[i], selector, cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), "fold (word " + std::to_string(tasks[i].word) + ", left-out speaker " +
                                std::to_string(tasks[i].speaker) + ") failed: " + e.what());
    }
  });
  for (auto& fs : per_task)
    for (auto& f : fs) result.folds.push_back(std::move(f));
  std::stable_sort(result.folds.begin(), result.folds.end(), [](const FoldRecord& a, const FoldRecord& b) {
    return std::tie(a.step, a.word, a.speaker, a.syllable) < std::tie(b.step, b.word, b.speaker, b.syllable);
  });
  return result;
}

LooResult run_loo(const corpus::CorpusManifest& manifest, const StepSelector& selector, const HarnessConfig& cfg) {
  const auto cleaned = clean_corpus(manifest, cfg.detector.preprocess, cfg.jobs);
  return run_loo(manifest, cleaned, selector, cfg);
}

std::optional<double> rate(std::size_t errors, std::size_t total) {
  if (total == 0) return std::nullopt;
  return static_cast<double>(errors) / static_cast<double>(total);
}

Counts count(std::span<const TestRecord> tests) {
  Counts c;
  for (const auto& t : tests) {
    if (t.truth == 1) {
      ++c.n1;
      c.e1 += t.error();
    } else {
      ++c.n2;
      c.e2 += t.error();
    }
  }
  return c;
}

MetricTable compute_metrics(const LooResult& result, const corpus::CorpusManifest& manifest) {
  MetricTable table;
  std::map<std::tuple<Step, int, std::size_t>, std::vector<const FoldRecord*>> groups;
  for (const auto& f : result.folds) groups[{f.step, f.word, f.step == Step::Syllable ? f.syllable : 0}].push_back(&f);

  for (const auto& [key, folds] : groups) {
    MetricRow row;
    row.step = std::get<0>(key);
    row.word = std::get<1>(key);
    row.word_label = manifest.has_word(row.word) ? manifest.word(row.word).label : "";
    if (row.step == Step::Syllable) {
      row.syllable = std::get<2>(key);
      row.syllable_label = folds.front()->syllable_label;
    }
    std::vector<double> ts;
    for (const auto* f : folds) {
      const auto c = count(f->tests);
      row.counts.n1 += c.n1;
      row.counts.n2 += c.n2;
      row.counts.e1 += c.e1;
      row.counts.e2 += c.e2;
      row.non_separable_folds += f->threshold.status != threshold::ThresholdStatus::Separable;
      ts.push_back(f->threshold.threshold);
    }
    row.folds = folds.size();
    row.pe = rate(row.counts.e1 + row.counts.e2, row.counts.n1 + row.counts.n2);
    row.fnr = rate(row.counts.e1, row.counts.n1);
    row.fpr = rate(row.counts.e2, row.counts.n2);
    double mean = 0.0;
    for (double t : ts) mean += t;
    mean /= static_cast<double>(ts.size());
    double var = 0.0;
    for (double t : ts) var += (t - mean) * (t - mean);
    var /= static_cast<double>(ts.size());
    row.threshold_mean = mean;
    row.threshold_cv = mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
    table.rows.push_back(std::move(row));
  }

  for (Step step : {Step::Word, Step::Native, Step::Syllable}) {
    std::vector<double> pes;
    bool any = false;
    for (const auto& r : table.rows)
      if (r.step == step) {
        any = true;
        if (r.pe) pes.push_back(*r.pe);
      }
    if (!any) continue;
    StepSummary s;
    s.step = step;
    if (!pes.empty()) {
      s.pe_max = *std::max_element(pes.begin(), pes.end());
      s.pe_min = *std::min_element(pes.begin(), pes.end());
      double sum = 0.0;
      for (double p : pes) sum += p;
      s.pe_avg = sum / static_cast<double>(pes.size());
    }
    table.summaries.push_back(s);
  }
  return table;
}

std::string result_to_json(const LooResult& r) {
  json j;
  j["schema"] = "mispro-loo-result";
  j["version"] = 1;
  j["feature"] = features::to_string(r.feature);
  j["variance_fraction"] = r.variance_fraction;
  j["folds"] = json::array();
  for (const auto& f : r.folds) {
    json jf = {{"step", static_cast<int>(f.step)},
               {"word", f.word},
               {"speaker", f.speaker},
               {"threshold", json_io::to_json(f.threshold)}};
    if (f.step == Step::Syllable) {
      jf["syllable"] = f.syllable;
      jf["syllable_label"] = f.syllable_label;
    }
    jf["tests"] = json::array();
    for (const auto& t : f.tests)
      jf["tests"].push_back({{"word", t.word},
                             {"speaker", t.speaker},
                             {"class", to_string(t.speaker_class)},
                             {"repetition", t.repetition},
                             {"truth", t.truth},
                             {"distance", number_or_null(t.distance)},
                             {"accepted", t.accepted}});
    j["folds"].push_back(std::move(jf));
  }
  return j.dump(1);
}

LooResult result_from_json(std::string_view text) {
  LooResult r;
  try {
    const auto j = json::parse(text);
    if (j.at("schema") != "mispro-loo-result") throw_data("not a LOO result file");
    if (j.at("version").get<int>() != 1) throw_data("unsupported LOO result version");
    r.feature = features::feature_kind_from_string(j.at("feature").get<std::string>());
    r.variance_fraction = j.at("variance_fraction").get<double>();
    for (const auto& jf : j.at("folds")) {
      FoldRecord f;
      f.step = step_from_int(jf.at("step").get<int>());
      f.word = jf.at("word").get<int>();
      f.speaker = jf.at("speaker").get<int>();
      f.threshold = json_io::threshold_model_from_json(jf.at("threshold"));
      if (f.step == Step::Syllable) {
        f.syllable = jf.at("syllable").get<std::size_t>();
        f.syllable_label = jf.at("syllable_label").get<std::string>();
      }
      for (const auto& jt : jf.at("tests")) {
        TestRecord t;
        t.word = jt.at("word").get<int>();
        t.speaker = jt.at("speaker").get<int>();
        t.speaker_class = speaker_class_from_string(jt.at("class").get<std::string>());
        t.repetition = jt.at("repetition").get<int>();
        t.truth = jt.at("truth").get<int>();
        t.distance = jt.at("distance").is_null() ? std::numeric_limits<double>::infinity() : jt.at("distance").get<double>();
        t.accepted = jt.at("accepted").get<bool>();
        f.tests.push_back(t);
      }
      r.folds.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw_data(std::string("corrupt LOO result: ") + e.what());
  }
  return r;
}

void save_result(const LooResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + path.string());
  out << result_to_json(result) << '\n';
  if (!out) throw_data("failed writing " + path.string());
}

LooResult load_result(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return result_from_json(text);
}

std::string timing_to_json(const LooResult& r) {
  json j = json::array();
  for (const auto& f : r.folds)
    j.push_back({{"step", static_cast<int>(f.step)},
                 {"word", f.word},
                 {"speaker", f.speaker},
                 {"syllable", f.syllable},
                 {"train_ms", f.train_ms},
                 {"test_ms_per_sample", f.test_ms_per_sample}});
  return j.dump(1);
}

}  // namespace mispro::harness
