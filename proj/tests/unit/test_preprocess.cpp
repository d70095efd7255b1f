#include <algorithm>
#include <complex>

#include "doctest.h"
#include "mispro/error.hpp"
#include "mispro/preprocess.hpp"
#include "support.hpp"

using namespace mispro;
using namespace mispro::preprocess;

namespace {

// Frequency of the largest DFT bin, by direct summation over a coarse 2 Hz grid near `guess`.
double peak_frequency(const std::vector<double>& x, double rate, double guess) {
  double best_f = guess, best = -1.0;
  for (double f = 0.8 * guess; f <= 1.2 * guess; f += 2.0) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(i) / rate);
    if (std::abs(acc) > best) best = std::abs(acc), best_f = f;
  }
  return best_f;
}

double snr_db(const std::vector<double>& clean, const std::vector<double>& noisy) {
  double s = 0, e = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) s += clean[i] * clean[i], e += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  return 10.0 * std::log10(s / e);
}

}  // namespace

TEST_CASE("trim: silence-tone-silence keeps the tone extent within one frame") {
  auto u = support::utterance(support::concat({support::silence(200), support::tone(440, 500), support::silence(200)}));
  const auto t = trim_silence(u);
  CHECK(std::abs(t.duration_ms() - 500.0) <= 10.0);
}

TEST_CASE("trim: no surrounding silence is identity") {
  auto u = support::utterance(support::tone(300, 400));
  const auto t = trim_silence(u);
  CHECK(t.samples == u.samples);
}

TEST_CASE("trim: digital silence is rejected") {
  auto u = support::utterance(support::silence(300));
  CHECK_THROWS_WITH_AS(trim_silence(u), doctest::Contains("no speech detected"), Error);
}

TEST_CASE("trim: boundaries shift by the removed lead and are clamped") {
  auto u = support::utterance(support::concat({support::silence(100), support::tone(440, 300), support::silence(100)}));
  u.boundaries = std::vector<Boundary>{{0, 6400}, {6400, 16000}};
  const auto r = trim_silence_detailed(u);
  CHECK(r.leading == 3200);
  REQUIRE(r.utterance.boundaries);
  const auto& b = *r.utterance.boundaries;
  CHECK(b[0].start == 0);
  CHECK(b[0].end == 3200);
  CHECK(b[1].start == 3200);
  CHECK(b[1].end == r.utterance.samples.size());
}

TEST_CASE("suppress: tone in white noise at 10 dB gains SNR") {
  const auto clean = support::tone(500, 600, 0.3);
  const double sd = support::rms(clean) / std::sqrt(10.0);
  const auto n = support::noise(clean.size(), sd, 1);
  std::vector<double> noisy(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) noisy[i] = clean[i] + n[i];
  const auto profile = estimate_noise_profile(support::noise(16000, sd, 2), 32000);
  const auto out = suppress_noise(support::utterance(noisy), profile);
  CHECK(out.samples.size() == noisy.size());
  const double before = snr_db(clean, noisy);
  const double after = snr_db(clean, out.samples);
  CHECK(before == doctest::Approx(10.0).epsilon(0.05));
  CHECK(after > before);
}

TEST_CASE("suppress: zero noise profile reproduces the input") {
  const auto x = support::concat({support::tone(300, 200, 0.4), support::noise(3000, 0.05, 3)});
  const auto out = suppress_noise(support::utterance(x), empty_noise_profile(32000));
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = out.samples[i] - x[i];
  CHECK(support::rms(diff) < 1e-6);
}

TEST_CASE("suppress: self-profiled noise is attenuated below a quarter of its RMS") {
  const auto x = support::noise(32000, 0.1, 4);
  const auto profile = estimate_noise_profile(x, 32000);
  const auto out = suppress_noise(support::utterance(x), profile);
  CHECK(support::rms(out.samples) < 0.25 * support::rms(x));
}

TEST_CASE("suppress: profile geometry must match") {
  auto p = empty_noise_profile(32000);
  p.magnitude.pop_back();
  CHECK_THROWS_WITH_AS(suppress_noise(support::utterance(support::tone(100, 100)), p), doctest::Contains("geometry"),
                       Error);
  CHECK_THROWS_AS(suppress_noise(support::utterance(support::tone(100, 100)), empty_noise_profile(16000)), Error);
}

TEST_CASE("tsm: unchanged duration is identity") {
  const auto u = support::utterance(support::tone(200, 500));
  const auto out = time_scale_to(u, 500.0);
  CHECK(out.samples == u.samples);
}

TEST_CASE("tsm: stretch 400 -> 600 ms keeps the pitch") {
  const auto u = support::utterance(support::tone(220, 400));
  const auto out = time_scale_to(u, 600.0);
  CHECK(std::abs(out.duration_ms() - 600.0) <= 12.5);
  const double f_in = peak_frequency(u.samples, 32000, 220);
  const double f_out = peak_frequency(out.samples, 32000, 220);
  CHECK(std::abs(f_out - f_in) / f_in < 0.02);
}

TEST_CASE("tsm: compress keeps the pitch too") {
  const auto u = support::utterance(support::tone(330, 600));
  const auto out = time_scale_to(u, 400.0);
  CHECK(out.samples.size() == 12800);
  CHECK(std::abs(peak_frequency(out.samples, 32000, 330) - 330.0) / 330.0 < 0.02);
}

TEST_CASE("tsm: extreme ratios are rejected") {
  const auto u = support::utterance(support::tone(220, 400));
  CHECK_THROWS_WITH_AS(time_scale_to(u, 100.0), doctest::Contains("extreme scaling"), Error);
  CHECK_THROWS_AS(time_scale_to(u, 801.0), Error);
  CHECK_NOTHROW(time_scale_to(u, 800.0));
}

TEST_CASE("tsm: boundaries rescale proportionally and keep tiling") {
  auto u = support::utterance(support::tone(220, 400));
  u.boundaries = std::vector<Boundary>{{0, 4000}, {4000, 12800}};
  const auto out = time_scale_to(u, 600.0);
  const auto& b = *out.boundaries;
  CHECK(b[0].end == 6000);
  CHECK(b[1].start == 6000);
  CHECK(b[1].end == out.samples.size());
}

TEST_CASE("normalize: peak scaling") {
  const auto half = normalize_amplitude(support::utterance({0.1, -0.5, 0.25}));
  CHECK(half.samples == std::vector<double>{0.2, -1.0, 0.5});
  const auto unit = normalize_amplitude(support::utterance({1.0, -0.3}));
  CHECK(unit.samples == std::vector<double>{1.0, -0.3});
  CHECK_THROWS_WITH_AS(normalize_amplitude(support::utterance({0.0, 0.0})), doctest::Contains("all-zero"), Error);
}

TEST_CASE("property: full chain is idempotent for a fixed target") {
  const auto x = support::concat(
      {support::noise(4800, 0.002, 5), support::tone(180, 250, 0.5), support::tone(260, 300, 0.4), support::noise(4800, 0.002, 6)});
  const auto once = preprocess::preprocess(support::utterance(x), 600.0);
  const auto twice = preprocess::preprocess(once, 600.0);
  REQUIRE(once.samples.size() == twice.samples.size());
  std::vector<double> diff(once.samples.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = once.samples[i] - twice.samples[i];
  CHECK(support::rms(diff) < 1e-3);
}

TEST_CASE("property: trim and normalize commute up to scale") {
  const auto x = support::concat({support::silence(120), support::tone(300, 300, 0.3), support::silence(80)});
  const auto a = normalize_amplitude(trim_silence(support::utterance(x)));
  const auto b = trim_silence(normalize_amplitude(support::utterance(x)));
  REQUIRE(a.samples.size() == b.samples.size());
  const double scale = b.samples[100] / a.samples[100];
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(b.samples[i] == doctest::Approx(scale * a.samples[i]));
}

TEST_CASE("property: scaling to the current duration is identity") {
  for (double ms : {123.0, 400.0, 777.0}) {
    const auto u = support::utterance(support::noise(static_cast<std::size_t>(ms * 32), 0.1, 7));
    CHECK(time_scale_to(u, u.duration_ms()).samples == u.samples);
  }
}

TEST_CASE("clean: suppression uses the trimmed lead only when long enough") {
  const auto lead = support::noise(3200, 0.01, 8);  // 100 ms
  const auto body = support::tone(250, 400, 0.5);
  std::vector<double> x = lead;
  const auto n = support::noise(body.size(), 0.01, 9);
  for (std::size_t i = 0; i < body.size(); ++i) x.push_back(body[i] + n[i]);
  const auto cleaned = clean(support::utterance(x)).utterance;
  PreprocessConfig off;
  off.noise_suppression = false;
  const auto raw = clean(support::utterance(x), off).utterance;
  REQUIRE(cleaned.samples.size() == raw.samples.size());
  CHECK(cleaned.samples != raw.samples);

  PreprocessConfig strict;
  strict.min_noise_ms = 150;
  CHECK(clean(support::utterance(x), strict).utterance.samples == raw.samples);
}

TEST_CASE("config validation") {
  PreprocessConfig c;
  c.vad_threshold = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.vad_frame_ms = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.target_source = TargetDurationSource::Explicit;
  CHECK_THROWS_AS(validate(c), Error);
  c.target_ms = 500;
  CHECK_NOTHROW(validate(c));
}
