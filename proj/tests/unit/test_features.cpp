#include <cmath>
#include <complex>

#include "doctest.h"
#include "mispro/error.hpp"
#include "mispro/features.hpp"
#include "support.hpp"

using namespace mispro;
using namespace mispro::features;

TEST_CASE("frame_signal: frame counts") {
  CHECK(frame_signal(support::utterance(support::tone(100, 1000))).count == 98);
  CHECK(frame_signal(support::utterance(support::tone(100, 25))).count == 1);
  CHECK_THROWS_AS(frame_signal(support::utterance(support::tone(100, 24))), Error);
}

TEST_CASE("frame_signal: symmetric Hamming window") {
  const auto f = frame_signal(support::utterance(std::vector<double>(800, 1.0)));
  CHECK(f.length == 800);
  CHECK(f.data[0] == doctest::Approx(0.08));
  CHECK(f.data[799] == doctest::Approx(0.08));
  for (std::size_t i = 0; i < 800; ++i) CHECK(f.data[i] == doctest::Approx(f.data[799 - i]).epsilon(1e-12));
}

TEST_CASE("spectrogram50: 50 bands of 320 Hz, tone lands in its band") {
  CHECK(kSpectrogramBands * kSpectrogramBandHz == 16000);
  const auto v = spectrogram50(frame_signal(support::utterance(support::tone(1000, 300))));
  CHECK(v.per_frame == 50);
  CHECK(v.size() == 50 * v.frames);
  for (std::size_t t = 0; t < v.frames; ++t) {
    const auto* row = v.values.data() + t * 50;
    CHECK(std::max_element(row, row + 50) - row == 3);
  }
}

TEST_CASE("spectrogram50: silence gives the log floor") {
  const auto v = spectrogram50(frame_signal(support::utterance(support::silence(100))));
  for (double x : v.values) CHECK(x == std::log(kLogFloor));
}

TEST_CASE("spectrogram50: non-canonical rate is rejected") {
  CHECK_THROWS_AS(spectrogram50(frame_signal(support::utterance(support::tone(100, 100, 0.5, 16000), 16000))), Error);
}

TEST_CASE("spectrogram50: band sums match a direct DFT") {
  const auto x = support::noise(800, 0.3, 17);
  const auto frames = frame_signal(support::utterance(x));
  const auto v = spectrogram50(frames);
  std::vector<double> bands(50, 0.0);
  for (std::size_t k = 0; k <= 400; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < 800; ++i)
      acc += frames.data[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i) / 800.0);
    bands[std::min<std::size_t>(49, k / 8)] += std::abs(acc);
  }
  for (std::size_t b = 0; b < 50; ++b) CHECK(v.values[b] == doctest::Approx(std::log(bands[b])).epsilon(1e-9));
}

TEST_CASE("mfcc13: dimension and identical frames") {
  const auto v = extract(support::utterance(support::tone(300, 1000)), FeatureKind::Mfcc13);
  CHECK(v.per_frame == 13);
  CHECK(v.frames == 98);
  CHECK(v.size() == 1274);

  // A signal repeating every hop gives identical frames.
  const auto base = support::noise(320, 0.2, 5);
  std::vector<double> x(6400);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = base[i % 320];
  const auto frames = frame_signal(support::utterance(x));
  const auto m = mfcc13(frames);
  for (std::size_t c = 0; c < 13; ++c) CHECK(m.values[c] == m.values[13 + c]);
}

TEST_CASE("mfcc13: c0 dominates for white noise") {
  double c0 = 0.0, rest = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto frames = frame_signal(support::utterance(support::noise(800, 0.2, 100 + s)));
    const auto m = mfcc13(frames);
    c0 += std::abs(m.values[0]);
    for (std::size_t k = 1; k < 13; ++k) rest += std::abs(m.values[k]) / 12.0;
  }
  CHECK(c0 > rest);
}

TEST_CASE("mfcc13: c0 switch replaces c0 by log frame energy") {
  const auto frames = frame_signal(support::utterance(support::tone(440, 25, 0.5)));
  const auto with = mfcc13(frames);
  const auto without = mfcc13(frames, {false});
  double e = 0.0;
  for (std::size_t i = 0; i < frames.length; ++i) e += frames.data[i] * frames.data[i];
  CHECK(without.values[0] == doctest::Approx(std::log(e)));
  for (std::size_t c = 1; c < 13; ++c) CHECK(without.values[c] == with.values[c]);
}

TEST_CASE("pre-emphasis") {
  CHECK(pre_emphasis({1.0, 1.0, 0.0}) == std::vector<double>{1.0, 1.0 - kPreEmphasis, -kPreEmphasis});
}

TEST_CASE("property: determinism and equal lengths after a common duration") {
  const auto u = support::utterance(support::noise(20000, 0.1, 3));
  CHECK(extract(u, FeatureKind::Mfcc13).values == extract(u, FeatureKind::Mfcc13).values);
  CHECK(extract(u, FeatureKind::Spectrogram50).values == extract(u, FeatureKind::Spectrogram50).values);
}

TEST_CASE("property: halving the amplitude shifts every log band by log 2") {
  const auto x = support::concat({support::tone(500, 200, 0.6), support::noise(3200, 0.2, 21)});
  auto half = x;
  for (double& v : half) v *= 0.5;
  const auto a = extract(support::utterance(x), FeatureKind::Spectrogram50);
  const auto b = extract(support::utterance(half), FeatureKind::Spectrogram50);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs((a.values[i] - b.values[i]) - std::log(2.0)) < 1e-6);
}

TEST_CASE("feature files round trip") {
  const auto dir = support::temp_dir("features_io");
  auto v = extract(support::utterance(support::tone(300, 100)), FeatureKind::Mfcc13);
  v.word = 4;
  v.speaker = 9;
  v.cls = SpeakerClass::NonNative;
  save_features(v, dir / "v");
  const auto back = load_features(dir / "v");
  CHECK(back.values == v.values);
  CHECK(back.kind == v.kind);
  CHECK(back.frames == v.frames);
  CHECK(back.per_frame == 13);
  CHECK(back.word == 4);
  CHECK(back.speaker == 9);
  CHECK(back.cls == SpeakerClass::NonNative);
}

TEST_CASE("feature kind names") {
  CHECK(feature_kind_from_string("mfcc13") == FeatureKind::Mfcc13);
  CHECK(to_string(FeatureKind::Spectrogram50) == "spectrogram50");
  CHECK_THROWS_AS(feature_kind_from_string("plp"), Error);
}
