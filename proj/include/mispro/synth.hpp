#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/corpus.hpp"

namespace mispro::corpus {

/// One synthetic syllable: three resonances over a harmonic source.
struct SyllableSpec {
  std::string label;
  std::array<double, 3> formants{};      // Hz at syllable onset
  std::array<double, 3> formants_end{};  // Hz at syllable offset; equal to `formants` for a steady vowel
  double duration_ms = 250.0;
};

struct WordSpec {
  int id = 0;
  std::string label;
  std::vector<SyllableSpec> syllables;
  /// Indices into `syllables` that non-native speakers render perturbed.
  std::vector<std::size_t> mispronounced;
};

struct SynthSpec {
  std::vector<WordSpec> words;
  int native_speakers = 7;
  int non_native_speakers = 6;
  int repetitions = 5;
  /// Relative formant shift applied to mispronounced syllables, in [0, 1].
  double formant_perturbation = 0.3;
  /// Relative lengthening applied to mispronounced syllables, in [0, 1].
  double duration_perturbation = 0.3;
  /// Standard deviation of the additive background noise (full scale = 1).
  double noise_level = 0.002;
  /// Inter-speaker vocal-tract scaling spread (relative std of formants).
  double speaker_formant_spread = 0.04;
  /// Inter-speaker speaking-rate spread (relative std of durations).
  double speaker_rate_spread = 0.06;
  /// Per-repetition formant jitter (relative std).
  double repetition_formant_jitter = 0.02;
  /// Per-repetition syllable-duration jitter (relative std).
  double repetition_duration_jitter = 0.04;
};

/// Throws a usage error for specs that cannot be rendered.
void validate(const SynthSpec& spec);

SynthSpec parse_synth_spec(std::string_view json_text);
std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec load_synth_spec(const std::filesystem::path& path);

/// Ten words modelled on a small Spanish pronunciation list, 7 native and 6 non-native
/// speakers, 5 repetitions, one mispronounced syllable per word.
SynthSpec reference_synth_spec();

struct SynthesizedCorpus {
  CorpusManifest manifest;
  /// Audio per manifest sample, same order as manifest.samples, at the canonical rate.
  std::vector<std::vector<double>> audio;
};

/// Renders the corpus. Pure function of (spec, seed).
SynthesizedCorpus synthesize_corpus(const SynthSpec& spec, std::uint64_t seed);

struct WriteSummary {
  std::size_t files_written = 0;
  std::size_t files_unchanged = 0;
  std::filesystem::path manifest_path;
  bool up_to_date() const { return files_written == 0; }
};

/// Writes `manifest.json` and 16-bit WAV files under `out_dir`. Files whose bytes already
/// match are left untouched.
WriteSummary write_corpus(const SynthesizedCorpus& corpus, const std::filesystem::path& out_dir);

}  // namespace mispro::corpus
