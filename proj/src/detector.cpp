#include "mispro/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "mispro/error.hpp"

namespace mispro::detector {

namespace {

using features::FeatureVector;

struct Labeled {
  FeatureVector vec;
  int speaker = 0;
};

double ms_of(std::size_t samples, double rate) { return 1000.0 * static_cast<double>(samples) / rate; }

bool scalable(const Utterance& u, double target_ms) {
  const auto target = static_cast<double>(std::llround(target_ms * u.sample_rate / 1000.0));
  const double ratio = target / static_cast<double>(u.samples.size());
  return ratio >= 0.5 && ratio <= 2.0;
}

FeatureVector prepare(const Utterance& cleaned, double target_ms, const DetectorConfig& cfg) {
  return features::extract(preprocess::finish(cleaned, target_ms, cfg.preprocess), cfg.feature, cfg.geometry, cfg.mfcc);
}

FeatureVector prepare(const Utterance& cleaned, double target_ms, const DetectorBundle& b) {
  return features::extract(preprocess::finish(cleaned, target_ms, b.preprocess), b.feature, b.geometry, b.mfcc);
}

Eigen::MatrixXd stack(const std::vector<const FeatureVector*>& vs) {
  const std::size_t d = vs.front()->size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (vs[j]->size() != d) throw_data("feature vector length mismatch within a training set");
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(vs[j]->values.data(), static_cast<Eigen::Index>(d));
  }
  return m;
}

std::vector<int> speakers_of(const std::vector<Labeled>& xs) {
  std::set<int> s;
  for (const auto& x : xs) s.insert(x.speaker);
  return {s.begin(), s.end()};
}

pca::Eigenspace train_without(const std::vector<Labeled>& class1, int left_out, double fraction) {
  std::vector<const FeatureVector*> keep;
  for (const auto& x : class1)
    if (x.speaker != left_out) keep.push_back(&x.vec);
  if (keep.size() < 2) throw_data("insufficient speakers: a sub-fold eigenspace needs at least 2 training vectors");
  return pca::train_eigenspace(stack(keep), fraction);
}

pca::Eigenspace train_all(const std::vector<Labeled>& class1, double fraction) {
  std::vector<const FeatureVector*> all;
  for (const auto& x : class1) all.push_back(&x.vec);
  return pca::train_eigenspace(stack(all), fraction);
}

// Class-2 samples are scored only against the sub-fold that left out their own speaker.
StageModel train_verification(const std::vector<Labeled>& class1, const std::vector<Labeled>& class2,
                              int replication, double fraction, StageDistances& out) {
  const auto speakers = speakers_of(class1);
  if (speakers.size() < 2) throw_data("insufficient speakers for word verification (need >= 2)");
  if (class2.empty()) throw_data("word verification needs samples of at least one other word");
  for (int s : speakers) {
    const auto space = train_without(class1, s, fraction);
    for (const auto& x : class1)
      if (x.speaker == s) out.class1.push_back(pca::dfes(space, x.vec.values));
    for (const auto& x : class2)
      if (x.speaker == s) out.class2.push_back(pca::dfes(space, x.vec.values));
  }
  if (out.class2.size() < 2) throw_data("word verification needs at least 2 other-word samples from class-1 speakers");
  StageModel m;
  m.threshold = threshold::fit_threshold(out.class1, out.class2,
                                         threshold::replication_priors(out.class1.size(), out.class2.size(), replication));
  m.space = train_all(class1, fraction);
  return m;
}

// Class-2 samples are scored against every sub-fold eigenspace.
StageModel train_native_split(const std::vector<Labeled>& class1, const std::vector<Labeled>& class2, bool average,
                              double fraction, const char* what, StageDistances& out) {
  const auto speakers = speakers_of(class1);
  if (speakers.size() < 2) throw_data(std::string("insufficient speakers for ") + what + " (need >= 2 native speakers)");
  if (class2.empty()) throw_data(std::string("insufficient speakers for ") + what + " (need >= 1 non-native speaker)");
  std::vector<double> acc(class2.size(), 0.0);
  for (int s : speakers) {
    const auto space = train_without(class1, s, fraction);
    for (const auto& x : class1)
      if (x.speaker == s) out.class1.push_back(pca::dfes(space, x.vec.values));
    for (std::size_t j = 0; j < class2.size(); ++j) {
      const double d = pca::dfes(space, class2[j].vec.values);
      if (average) acc[j] += d;
      else out.class2.push_back(d);
    }
  }
  if (average)
    for (double a : acc) out.class2.push_back(a / static_cast<double>(speakers.size()));
  StageModel m;
  m.threshold = threshold::fit_threshold(out.class1, out.class2);
  m.space = train_all(class1, fraction);
  return m;
}

}  // namespace

void validate(const DetectorConfig& cfg) {
  if (!(cfg.variance_fraction > 0.0 && cfg.variance_fraction <= 1.0))
    throw_usage("variance fraction must be in (0, 1]");
  features::validate(cfg.geometry);
  preprocess::validate(cfg.preprocess);
}

std::vector<Utterance> split_syllables(const Utterance& cleaned, std::size_t expected) {
  if (!cleaned.boundaries) throw_data("missing syllable boundaries");
  const auto& b = *cleaned.boundaries;
  if (b.size() != expected)
    throw_data("syllable boundary count " + std::to_string(b.size()) + " does not match " + std::to_string(expected));
  std::vector<Utterance> out;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const std::size_t end = std::min(b[k].end, cleaned.samples.size());
    if (b[k].start >= end) throw_data("syllable " + std::to_string(k + 1) + " is empty after trimming");
    Utterance s = cleaned;
    s.boundaries.reset();
    s.samples.assign(cleaned.samples.begin() + static_cast<std::ptrdiff_t>(b[k].start),
                     cleaned.samples.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(s));
  }
  return out;
}

DetectorBundle train_bundle(int word, const corpus::CorpusManifest& manifest,
                            std::span<const preprocess::CleanUtterance> partition, const DetectorConfig& cfg,
                            StepSet steps, TrainingDiagnostics* diagnostics) {
  validate(cfg);
  const auto& entry = manifest.word(word);
  TrainingDiagnostics local;
  TrainingDiagnostics& diag = diagnostics ? *diagnostics : local;

  DetectorBundle b;
  b.word = word;
  b.label = entry.label;
  b.feature = cfg.feature;
  b.geometry = cfg.geometry;
  b.mfcc = cfg.mfcc;
  b.variance_fraction = cfg.variance_fraction;
  b.preprocess = cfg.preprocess;
  b.syllable_count = entry.syllables.size();

  std::vector<const Utterance*> target;
  std::vector<const Utterance*> others;
  for (const auto& c : partition) (c.utterance.word == word ? target : others).push_back(&c.utterance);
  if (target.empty()) throw_data("training partition has no samples of word " + std::to_string(word));

  if (cfg.preprocess.target_source == preprocess::TargetDurationSource::Explicit) {
    b.target_ms = cfg.preprocess.target_ms;
  } else {
    double sum = 0.0;
    for (const auto* u : target) sum += u->duration_ms();
    b.target_ms = sum / static_cast<double>(target.size());
  }

  const double fraction = cfg.variance_fraction;

  if (steps.word || steps.native) {
    std::vector<Labeled> all_target, natives, non_natives;
    for (const auto* u : target) {
      Labeled x{prepare(*u, b.target_ms, cfg), u->speaker};
      if (u->cls == SpeakerClass::Native) natives.push_back(x);
      else non_natives.push_back(x);
      all_target.push_back(std::move(x));
    }
    if (steps.word) {
      std::set<int> words;
      for (const auto& w : manifest.words) words.insert(w.id);
      std::vector<Labeled> impostors;
      for (const auto* u : others)
        if (scalable(*u, b.target_ms)) impostors.push_back({prepare(*u, b.target_ms, cfg), u->speaker});
      const int replication = std::max<int>(1, static_cast<int>(words.size()) - 1);
      b.verification = train_verification(all_target, impostors, replication, fraction, diag.verification);
    }
    if (steps.native)
      b.native = train_native_split(natives, non_natives, cfg.average_class2, fraction, "native/non-native classification",
                                    diag.native);
  }

  if (steps.syllables) {
    const std::size_t k_count = entry.syllables.size();
    std::vector<std::vector<Utterance>> segments;
    for (const auto* u : target) segments.push_back(split_syllables(*u, k_count));
    diag.syllables.assign(k_count, {});
    for (std::size_t k = 0; k < k_count; ++k) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < target.size(); ++i)
        if (target[i]->cls == SpeakerClass::Native) sum += segments[i][k].duration_ms(), ++n;
      if (n == 0) throw_data("insufficient speakers for syllable detection (no native samples)");
      SyllableModel sm;
      sm.label = entry.syllables[k];
      sm.target_ms = sum / static_cast<double>(n);
      std::vector<Labeled> natives, non_natives;
      for (std::size_t i = 0; i < target.size(); ++i) {
        Labeled x{prepare(segments[i][k], sm.target_ms, cfg), target[i]->speaker};
        (target[i]->cls == SpeakerClass::Native ? natives : non_natives).push_back(std::move(x));
      }
      sm.model = train_native_split(natives, non_natives, cfg.average_class2, fraction, "syllable detection",
                                    diag.syllables[k]);
      b.syllables.push_back(std::move(sm));
    }
  }
  return b;
}

DetectorBundle train_bundle(int word, const corpus::CorpusManifest& manifest, const DetectorConfig& cfg) {
  std::vector<preprocess::CleanUtterance> cleaned;
  cleaned.reserve(manifest.samples.size());
  for (const auto& s : manifest.samples)
    cleaned.push_back(preprocess::clean(corpus::load_utterance(s, manifest), cfg.preprocess));
  return train_bundle(word, manifest, cleaned, cfg);
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::RejectedWord: return "rejected-word";
    case Stage::Native: return "native";
    case Stage::NonNative: return "non-native";
  }
  return "rejected-word";
}

double verification_distance(const DetectorBundle& bundle, const Utterance& cleaned) {
  if (!bundle.verification) throw_usage("bundle has no word-verification model");
  if (!scalable(cleaned, bundle.target_ms)) return std::numeric_limits<double>::infinity();
  return pca::dfes(bundle.verification->space, prepare(cleaned, bundle.target_ms, bundle).values);
}

double native_distance(const DetectorBundle& bundle, const Utterance& cleaned) {
  if (!bundle.native) throw_usage("bundle has no native/non-native model");
  return pca::dfes(bundle.native->space, prepare(cleaned, bundle.target_ms, bundle).values);
}

std::vector<SyllableVerdict> syllable_verdicts(const DetectorBundle& bundle, const Utterance& cleaned) {
  if (bundle.syllables.size() != bundle.syllable_count || bundle.syllable_count == 0)
    throw_usage("bundle has no syllable models");
  const auto segments = split_syllables(cleaned, bundle.syllable_count);
  std::vector<SyllableVerdict> out;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& sm = bundle.syllables[k];
    SyllableVerdict v;
    v.label = sm.label;
    v.distance = pca::dfes(sm.model.space, prepare(segments[k], sm.target_ms, bundle).values);
    v.threshold = sm.model.threshold.threshold;
    v.mispronounced = threshold::classify(sm.model.threshold, v.distance) == threshold::Decision::Reject;
    out.push_back(std::move(v));
  }
  return out;
}

DetectionOutcome detect(const DetectorBundle& bundle, const Utterance& utterance) {
  if (!bundle.complete()) throw_usage("detect requires a bundle with all three steps trained");
  const auto cleaned = preprocess::clean(utterance, bundle.preprocess).utterance;
  DetectionOutcome out;
  out.word_distance = verification_distance(bundle, cleaned);
  if (!std::isfinite(out.word_distance) ||
      threshold::classify(bundle.verification->threshold, out.word_distance) == threshold::Decision::Reject) {
    out.stage = Stage::RejectedWord;
    return out;
  }
  out.native_distance = native_distance(bundle, cleaned);
  if (threshold::classify(bundle.native->threshold, *out.native_distance) == threshold::Decision::Accept) {
    out.stage = Stage::Native;
    return out;
  }
  out.stage = Stage::NonNative;
  out.syllables = syllable_verdicts(bundle, cleaned);
  return out;
}

std::string outcome_to_json(const DetectionOutcome& o) {
  nlohmann::json j;
  j["stage"] = to_string(o.stage);
  j["word_distance"] = std::isfinite(o.word_distance) ? nlohmann::json(o.word_distance) : nlohmann::json(nullptr);
  if (o.native_distance) j["native_distance"] = *o.native_distance;
  if (o.stage == Stage::NonNative) {
    j["syllables"] = nlohmann::json::array();
    for (const auto& s : o.syllables)
      j["syllables"].push_back({{"label", s.label},
                                {"verdict", s.mispronounced ? "mispronounced" : "correct"},
                                {"distance", s.distance},
                                {"threshold", s.threshold}});
  }
  return j.dump();
}

}  // namespace mispro::detector
