#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/corpus.hpp"
#include "mispro/detector.hpp"
#include "mispro/preprocess.hpp"
#include "mispro/threshold.hpp"

namespace mispro::harness {

enum class Step { Word = 1, Native = 2, Syllable = 3 };

std::string_view to_string(Step s);
Step step_from_int(int n);

/// What a run evaluates. Empty word/speaker lists mean "all".
struct StepSelector {
  std::vector<Step> steps = {Step::Word, Step::Native, Step::Syllable};
  std::vector<int> words;
  std::vector<int> speakers;
};

struct HarnessConfig {
  detector::DetectorConfig detector;
  unsigned jobs = 1;
};

/// One tested sample. Class 1 is the accept side (target word / native / correct syllable).
struct TestRecord {
  int word = 0;  // word of the tested sample (differs from the fold word for step-1 impostors)
  int speaker = 0;
  SpeakerClass speaker_class = SpeakerClass::Native;
  int repetition = 0;
  int truth = 1;
  double distance = 0.0;  // +inf when the sample cannot be brought to the target duration
  bool accepted = false;

  bool error() const { return accepted != (truth == 1); }
};

struct FoldRecord {
  Step step = Step::Word;
  int word = 0;
  int speaker = 0;  // left-out speaker
  std::size_t syllable = 0;
  std::string syllable_label;
  threshold::ThresholdModel threshold;
  std::vector<TestRecord> tests;
  double train_ms = 0.0;
  double test_ms_per_sample = 0.0;
};

struct LooResult {
  features::FeatureKind feature = features::FeatureKind::Mfcc13;
  double variance_fraction = 0.8;
  std::vector<FoldRecord> folds;  // ordered by step, word, speaker, syllable
};

/// Cleans every sample once (trim + noise suppression); these stages do not depend on the fold.
std::vector<preprocess::CleanUtterance> clean_corpus(const corpus::CorpusManifest& manifest,
                                                     const preprocess::PreprocessConfig& cfg, unsigned jobs = 1);

/// Leave-one-speaker-out evaluation. For every selected word and speaker the detector is
/// trained on the other speakers and tested on the left-out speaker:
///  - step 1: the speaker's target-word samples (class 1) and other-word samples (class 2);
///  - step 2: the speaker's target-word samples, class by speaker class;
///  - step 3: as step 2, per syllable.
/// Folds run on `jobs` threads; the result order does not depend on it.
LooResult run_loo(const corpus::CorpusManifest& manifest, std::span<const preprocess::CleanUtterance> cleaned,
                  const StepSelector& selector, const HarnessConfig& cfg);
LooResult run_loo(const corpus::CorpusManifest& manifest, const StepSelector& selector, const HarnessConfig& cfg);

struct Counts {
  std::size_t n1 = 0, n2 = 0, e1 = 0, e2 = 0;
};

/// Aggregate for one (step, word, syllable). Rates are empty when their denominator is zero.
struct MetricRow {
  Step step = Step::Word;
  int word = 0;
  std::string word_label;
  std::optional<std::size_t> syllable;
  std::string syllable_label;
  Counts counts;
  std::optional<double> pe;
  std::optional<double> fnr;
  std::optional<double> fpr;
  std::size_t folds = 0;
  std::size_t non_separable_folds = 0;
  double threshold_mean = 0.0;
  double threshold_cv = 0.0;

  bool separable() const { return non_separable_folds == 0; }
};

struct StepSummary {
  Step step = Step::Word;
  std::optional<double> pe_max, pe_min, pe_avg;
};

struct MetricTable {
  std::vector<MetricRow> rows;
  std::vector<StepSummary> summaries;
};

std::optional<double> rate(std::size_t errors, std::size_t total);
Counts count(std::span<const TestRecord> tests);

/// P_e = (Ne1 + Ne2) / (N1 + N2), FNR = Ne1 / N1, FPR = Ne2 / N2, from the stored decisions.
MetricTable compute_metrics(const LooResult& result, const corpus::CorpusManifest& manifest);

std::string result_to_json(const LooResult& result);
LooResult result_from_json(std::string_view text);
void save_result(const LooResult& result, const std::filesystem::path& path);
LooResult load_result(const std::filesystem::path& path);

/// Per-fold timing, kept apart from the result so reports stay byte-identical across runs.
std::string timing_to_json(const LooResult& result);

}  // namespace mispro::harness
