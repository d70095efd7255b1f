#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mispro/corpus.hpp"

namespace mispro::preprocess {

enum class TargetDurationSource {
  TrainingMean,  ///< per-word mean duration over the current training partition (both classes)
  Explicit,      ///< fixed `target_ms`
};

/// Defaults: 10 ms energy frames, threshold 0.02 x 95th-percentile frame energy, spectral
/// subtraction with over-subtraction 2 and floor 0.01, WSOLA with 25 ms frames and +/-5 ms search.
struct PreprocessConfig {
  double vad_threshold = 0.02;
  double vad_frame_ms = 10.0;
  double vad_percentile = 0.95;
  bool noise_suppression = true;
  double min_noise_ms = 50.0;
  double over_subtraction = 2.0;
  double spectral_floor = 0.01;
  double tsm_frame_ms = 25.0;
  double tsm_tolerance_ms = 5.0;
  TargetDurationSource target_source = TargetDurationSource::TrainingMean;
  double target_ms = 0.0;

  bool operator==(const PreprocessConfig&) const = default;
};

void validate(const PreprocessConfig& cfg);

struct TrimResult {
  Utterance utterance;
  std::size_t leading = 0;   // samples removed at the start
  std::size_t trailing = 0;  // samples removed at the end
};

/// Drops leading/trailing frames whose mean energy is below threshold x percentile energy.
TrimResult trim_silence_detailed(const Utterance& u, const PreprocessConfig& cfg = {});
Utterance trim_silence(const Utterance& u, const PreprocessConfig& cfg = {});

/// Average STFT magnitude of a noise-only stretch, per bin.
struct NoiseProfile {
  std::size_t frame_length = 0;
  std::size_t hop = 0;
  std::vector<double> magnitude;  // frame_length / 2 + 1 bins
};

/// STFT geometry used for suppression: 25 ms periodic Hann frames, 75% overlap.
NoiseProfile empty_noise_profile(double sample_rate);
NoiseProfile estimate_noise_profile(std::span<const double> noise, double sample_rate);

/// Magnitude spectral subtraction, |Y| = max(|X| - a|N|, floor |N|), phase kept.
Utterance suppress_noise(const Utterance& u, const NoiseProfile& noise, const PreprocessConfig& cfg = {});

/// WSOLA time-scale modification to `target_ms`. The output has exactly the target sample
/// count, pitch is kept, and boundaries are rescaled. Ratios outside [0.5, 2] throw.
Utterance time_scale_to(const Utterance& u, double target_ms, const PreprocessConfig& cfg = {});

/// Scales so the largest absolute sample is exactly 1.
Utterance normalize_amplitude(const Utterance& u);

/// Output of the fold-independent stages (trim, noise suppression).
struct CleanUtterance {
  Utterance utterance;
};

/// Trim, then suppress noise using the trimmed-off leading silence when it is long enough.
CleanUtterance clean(const Utterance& u, const PreprocessConfig& cfg = {});

/// Time-scale to the target and normalize.
Utterance finish(const Utterance& cleaned, double target_ms, const PreprocessConfig& cfg = {});

/// Full chain: trim -> suppress -> time-scale -> normalize.
Utterance preprocess(const Utterance& u, double target_ms, const PreprocessConfig& cfg = {});

}  // namespace mispro::preprocess
