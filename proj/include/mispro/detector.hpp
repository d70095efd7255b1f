#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/corpus.hpp"
#include "mispro/eigenspace.hpp"
#include "mispro/features.hpp"
#include "mispro/preprocess.hpp"
#include "mispro/threshold.hpp"

namespace mispro::detector {

struct DetectorConfig {
  features::FeatureKind feature = features::FeatureKind::Mfcc13;
  features::FrameGeometry geometry;
  features::MfccOptions mfcc;
  double variance_fraction = 0.8;
  preprocess::PreprocessConfig preprocess;
  /// Class-2 distances in steps 2 and 3: averaged across sub-fold eigenspaces (true) or one
  /// distance per (sample, sub-fold) pair (false).
  bool average_class2 = true;
};

void validate(const DetectorConfig& cfg);

/// Which detection steps to train. The harness trains only what a run evaluates.
struct StepSet {
  bool word = true;
  bool native = true;
  bool syllables = true;
};

struct StageModel {
  pca::Eigenspace space;
  threshold::ThresholdModel threshold;
};

struct SyllableModel {
  std::string label;
  double target_ms = 0.0;
  StageModel model;
};

/// Trained artifacts for one word: U_All/T_d (verification), U_N/T_c (native) and one
/// U_Nk/T_k per syllable.
struct DetectorBundle {
  int word = 0;
  std::string label;
  features::FeatureKind feature = features::FeatureKind::Mfcc13;
  features::FrameGeometry geometry;
  features::MfccOptions mfcc;
  double variance_fraction = 0.8;
  preprocess::PreprocessConfig preprocess;
  double target_ms = 0.0;
  std::size_t syllable_count = 0;
  std::optional<StageModel> verification;
  std::optional<StageModel> native;
  std::vector<SyllableModel> syllables;

  bool complete() const { return verification && native && syllables.size() == syllable_count; }
};

/// Sub-fold distances that produced each threshold.
struct StageDistances {
  std::vector<double> class1;
  std::vector<double> class2;
};

struct TrainingDiagnostics {
  StageDistances verification;
  StageDistances native;
  std::vector<StageDistances> syllables;
};

/// Trains the requested steps for `word` on already-cleaned utterances (preprocess::clean).
///
/// Every step fits its threshold from distances produced by leave-one-speaker-out sub-folds
/// over the class-1 speakers, then trains its final eigenspace on all class-1 data:
///  - verification: class 1 = target-word samples, class 2 = other words of the left-out
///    speaker; class 1 is prior-balanced by (number of words - 1).
///  - native: class 1 = native samples, class 2 = non-native samples scored against every
///    sub-fold eigenspace.
///  - syllables: as native, per syllable segment, each time-scaled to the mean native
///    syllable duration.
DetectorBundle train_bundle(int word, const corpus::CorpusManifest& manifest,
                            std::span<const preprocess::CleanUtterance> partition, const DetectorConfig& cfg,
                            StepSet steps = {}, TrainingDiagnostics* diagnostics = nullptr);

/// Loads and cleans every sample of the manifest, then trains all steps.
DetectorBundle train_bundle(int word, const corpus::CorpusManifest& manifest, const DetectorConfig& cfg);

enum class Stage { RejectedWord, Native, NonNative };

std::string_view to_string(Stage s);

struct SyllableVerdict {
  std::string label;
  bool mispronounced = false;
  double distance = 0.0;
  double threshold = 0.0;
};

struct DetectionOutcome {
  Stage stage = Stage::RejectedWord;
  double word_distance = 0.0;
  std::optional<double> native_distance;
  std::vector<SyllableVerdict> syllables;  // non-empty iff stage == NonNative
};

/// Runs the three-step hierarchy on a raw utterance.
DetectionOutcome detect(const DetectorBundle& bundle, const Utterance& utterance);

/// Distance of a cleaned utterance to U_All. Infinite when the utterance cannot be
/// time-scaled to the bundle's target duration (a different word far off in length).
double verification_distance(const DetectorBundle& bundle, const Utterance& cleaned);
/// Distance of a cleaned utterance to U_N.
double native_distance(const DetectorBundle& bundle, const Utterance& cleaned);
/// Step 3 on a cleaned utterance, regardless of how steps 1-2 decided.
std::vector<SyllableVerdict> syllable_verdicts(const DetectorBundle& bundle, const Utterance& cleaned);

/// Splits a cleaned utterance into its syllable segments.
std::vector<Utterance> split_syllables(const Utterance& cleaned, std::size_t expected);

std::string outcome_to_json(const DetectionOutcome& outcome);

inline constexpr std::uint32_t kBundleVersion = 1;

void save_bundle(const DetectorBundle& bundle, const std::filesystem::path& path);
DetectorBundle load_bundle(const std::filesystem::path& path);
std::string bundle_to_bytes(const DetectorBundle& bundle);
DetectorBundle bundle_from_bytes(std::string_view bytes);

}  // namespace mispro::detector
