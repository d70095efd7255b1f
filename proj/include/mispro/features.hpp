#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mispro/corpus.hpp"

namespace mispro::features {

enum class FeatureKind { Spectrogram50, Mfcc13 };

std::string_view to_string(FeatureKind k);
FeatureKind feature_kind_from_string(std::string_view s);

/// 25 ms Hamming windows every 10 ms (15 ms overlap).
struct FrameGeometry {
  double window_ms = 25.0;
  double hop_ms = 10.0;

  std::size_t window_samples(double rate) const;
  std::size_t hop_samples(double rate) const;
  bool operator==(const FrameGeometry&) const = default;
};

void validate(const FrameGeometry& g);

/// Windowed frames, row-major (frame t occupies data[t*length, (t+1)*length)).
struct Frames {
  std::vector<double> data;
  std::size_t count = 0;
  std::size_t length = 0;
  double sample_rate = kCanonicalSampleRate;
  FrameGeometry geometry;
  int word = 0;
  int speaker = 0;
  SpeakerClass cls = SpeakerClass::Native;

  const double* frame(std::size_t t) const { return data.data() + t * length; }
};

/// Vectorized feature matrix, frame-major: frame 0's coefficients come first.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Mfcc13;
  FrameGeometry geometry;
  std::size_t per_frame = 0;
  std::size_t frames = 0;
  int word = 0;
  int speaker = 0;
  SpeakerClass cls = SpeakerClass::Native;

  std::size_t size() const { return values.size(); }
};

inline constexpr std::size_t kSpectrogramBands = 50;
inline constexpr double kSpectrogramBandHz = 320.0;
inline constexpr double kLogFloor = 1e-10;
inline constexpr std::size_t kMelFilters = 26;
inline constexpr std::size_t kCepstra = 13;
inline constexpr double kPreEmphasis = 0.97;

struct MfccOptions {
  /// Keep c0. When false, c0 is replaced by the frame log-energy.
  bool include_c0 = true;
};

/// T = 1 + floor((N - window) / hop) frames, each multiplied by a symmetric Hamming window.
Frames frame_signal(const Utterance& u, const FrameGeometry& g = {});

/// 50 linear 320 Hz bands over 0-16 kHz (summed FFT magnitude), natural log with floor 1e-10.
/// Requires the canonical 32 kHz rate.
FeatureVector spectrogram50(const Frames& frames);

/// 26 mel filters over 0 Hz-Nyquist on the power spectrum, log, orthonormal DCT-II,
/// coefficients 0..12. Pre-emphasis belongs to the signal stage (see extract()).
FeatureVector mfcc13(const Frames& frames, const MfccOptions& opts = {});

/// y[n] = x[n] - a x[n-1], y[0] = x[0].
std::vector<double> pre_emphasis(const std::vector<double>& x, double a = kPreEmphasis);

/// Frame and transform an utterance; applies pre-emphasis first for MFCCs.
FeatureVector extract(const Utterance& u, FeatureKind kind, const FrameGeometry& g = {}, const MfccOptions& opts = {});

/// Writes `<stem>.f64` (little-endian doubles) and `<stem>.json` (kind, geometry, F, T, labels).
void save_features(const FeatureVector& v, const std::filesystem::path& stem);
FeatureVector load_features(const std::filesystem::path& stem);

}  // namespace mispro::features
