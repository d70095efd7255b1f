#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mispro {

/// Canonical analysis rate: 50 bands of 320 Hz tile 0-16 kHz exactly at this rate.
inline constexpr int kCanonicalSampleRate = 32000;

enum class SpeakerClass { Native, NonNative };

std::string_view to_string(SpeakerClass c);
SpeakerClass speaker_class_from_string(std::string_view s);

/// Half-open sample range [start, end).
struct Boundary {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Boundary&) const = default;
};

struct Utterance {
  std::vector<double> samples;
  double sample_rate = kCanonicalSampleRate;
  int word = 0;
  int speaker = 0;
  SpeakerClass cls = SpeakerClass::Native;
  int repetition = 0;
  std::optional<std::vector<Boundary>> boundaries;

  double duration_ms() const { return 1000.0 * static_cast<double>(samples.size()) / sample_rate; }
};

}  // namespace mispro

namespace mispro::corpus {

inline constexpr int kManifestVersion = 1;

struct WordEntry {
  int id = 0;
  std::string label;
  std::vector<std::string> syllables;
  bool operator==(const WordEntry&) const = default;
};

struct SpeakerEntry {
  int id = 0;
  SpeakerClass cls = SpeakerClass::Native;
  bool operator==(const SpeakerEntry&) const = default;
};

struct SampleEntry {
  int word = 0;
  int speaker = 0;
  int repetition = 0;
  std::string audio;  // relative to the manifest directory unless absolute
  std::optional<std::vector<Boundary>> boundaries;
  bool operator==(const SampleEntry&) const = default;
};

struct CorpusManifest {
  std::vector<WordEntry> words;
  std::vector<SpeakerEntry> speakers;
  std::vector<SampleEntry> samples;
  /// Directory relative audio paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  const WordEntry& word(int id) const;
  const SpeakerEntry& speaker(int id) const;
  bool has_word(int id) const;
  std::filesystem::path audio_path(const SampleEntry& s) const;

  bool operator==(const CorpusManifest& o) const {
    return words == o.words && speakers == o.speakers && samples == o.samples;
  }
};

/// Checks every manifest invariant; throws a data error naming the first violation.
void validate(const CorpusManifest& m);

CorpusManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
std::string manifest_to_json(const CorpusManifest& m);

CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CorpusManifest& m, const std::filesystem::path& path);

/// Linear-interpolation resampling. Boundaries scale with the rate ratio.
Utterance resample(const Utterance& u, double target_rate);

/// Reads the sample's WAV, checks it is mono and non-empty, scales to [-1, 1) and resamples
/// to the canonical rate when needed.
Utterance load_utterance(const SampleEntry& entry, const CorpusManifest& manifest);

/// Checks the Utterance invariants (positive rate, non-empty, finite samples).
void validate(const Utterance& u);

}  // namespace mispro::corpus
