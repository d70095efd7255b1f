#include "mispro/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "fft.hpp"
#include "json.hpp"
#include "mispro/error.hpp"

namespace mispro::features {

static_assert(std::endian::native == std::endian::little, "feature files are little-endian");

std::string_view to_string(FeatureKind k) { return k == FeatureKind::Mfcc13 ? "mfcc13" : "spectrogram50"; }

FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "mfcc13") return FeatureKind::Mfcc13;
  if (s == "spectrogram50") return FeatureKind::Spectrogram50;
  throw_usage("unknown feature kind '" + std::string(s) + "' (expected mfcc13 or spectrogram50)");
}

std::size_t FrameGeometry::window_samples(double rate) const {
  return static_cast<std::size_t>(std::llround(window_ms * rate / 1000.0));
}

std::size_t FrameGeometry::hop_samples(double rate) const {
  return static_cast<std::size_t>(std::llround(hop_ms * rate / 1000.0));
}

void validate(const FrameGeometry& g) {
  if (!(g.window_ms > 0.0) || !(g.hop_ms > 0.0) || g.hop_ms > g.window_ms)
    throw_usage("frame geometry requires 0 < hop <= window");
}

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters stored as (first nonzero bin, weights).
struct MelBank {
  std::vector<std::size_t> first;
  std::vector<std::vector<double>> weights;
  std::vector<double> dct;  // orthonormal DCT-II rows 0..12
};

MelBank make_mel_bank(std::size_t nfft, double rate) {
  const std::size_t bins = nfft / 2 + 1;
  const double top = hz_to_mel(rate / 2.0);
  std::vector<double> edges(kMelFilters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(kMelFilters + 1));
  MelBank bank;
  for (std::size_t m = 0; m < kMelFilters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    std::size_t first = bins;
    std::vector<double> w;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate / static_cast<double>(nfft);
      double x = 0.0;
      if (f > lo && f < mid) x = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) x = (hi - f) / (hi - mid);
      if (x == 0.0 && first == bins) continue;
      if (first == bins) first = k;
      w.push_back(x);
    }
    while (!w.empty() && w.back() == 0.0) w.pop_back();
    bank.first.push_back(first == bins ? 0 : first);
    bank.weights.push_back(std::move(w));
  }
  bank.dct.resize(kCepstra * kMelFilters);
  for (std::size_t c = 0; c < kCepstra; ++c) {
    const double scale = std::sqrt((c == 0 ? 1.0 : 2.0) / static_cast<double>(kMelFilters));
    for (std::size_t m = 0; m < kMelFilters; ++m)
      bank.dct[c * kMelFilters + m] =
          scale * std::cos(std::numbers::pi * static_cast<double>(c) * (static_cast<double>(m) + 0.5) /
                           static_cast<double>(kMelFilters));
  }
  return bank;
}

const MelBank& mel_bank(std::size_t nfft, double rate) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, double>, std::unique_ptr<MelBank>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{nfft, rate}];
  if (!slot) slot = std::make_unique<MelBank>(make_mel_bank(nfft, rate));
  return *slot;
}

FeatureVector make_vector(const Frames& frames, FeatureKind kind, std::size_t per_frame) {
  FeatureVector v;
  v.kind = kind;
  v.geometry = frames.geometry;
  v.per_frame = per_frame;
  v.frames = frames.count;
  v.word = frames.word;
  v.speaker = frames.speaker;
  v.cls = frames.cls;
  v.values.resize(per_frame * frames.count);
  return v;
}

}  // namespace

Frames frame_signal(const Utterance& u, const FrameGeometry& g) {
  validate(g);
  const std::size_t win = g.window_samples(u.sample_rate);
  const std::size_t hop = g.hop_samples(u.sample_rate);
  if (win == 0 || hop == 0) throw_usage("frame geometry rounds to zero samples");
  if (u.samples.size() < win)
    throw_data("frame_signal: utterance shorter than one analysis window (" + std::to_string(u.samples.size()) +
               " < " + std::to_string(win) + " samples)");
  Frames f;
  f.count = 1 + (u.samples.size() - win) / hop;
  f.length = win;
  f.sample_rate = u.sample_rate;
  f.geometry = g;
  f.word = u.word;
  f.speaker = u.speaker;
  f.cls = u.cls;
  f.data.resize(f.count * win);
  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i)
    window[i] = win == 1 ? 1.0
                         : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                  static_cast<double>(win - 1));
  for (std::size_t t = 0; t < f.count; ++t)
    for (std::size_t i = 0; i < win; ++i) f.data[t * win + i] = u.samples[t * hop + i] * window[i];
  return f;
}

FeatureVector spectrogram50(const Frames& frames) {
  if (frames.sample_rate != kCanonicalSampleRate)
    throw_data("spectrogram50 requires the canonical 32 kHz sample rate");
  const detail::RealFft fft(frames.length);
  const double bin_hz = frames.sample_rate / static_cast<double>(frames.length);
  std::vector<std::size_t> band_of(fft.bins());
  for (std::size_t k = 0; k < band_of.size(); ++k)
    band_of[k] = std::min(kSpectrogramBands - 1,
                          static_cast<std::size_t>(std::floor(static_cast<double>(k) * bin_hz / kSpectrogramBandHz + 1e-9)));

  FeatureVector v = make_vector(frames, FeatureKind::Spectrogram50, kSpectrogramBands);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> bands(kSpectrogramBands);
  for (std::size_t t = 0; t < frames.count; ++t) {
    fft.forward(std::span(frames.frame(t), frames.length), spec);
    std::fill(bands.begin(), bands.end(), 0.0);
    for (std::size_t k = 0; k < spec.size(); ++k) bands[band_of[k]] += std::abs(spec[k]);
    for (std::size_t b = 0; b < kSpectrogramBands; ++b)
      v.values[t * kSpectrogramBands + b] = std::log(std::max(bands[b], kLogFloor));
  }
  return v;
}

FeatureVector mfcc13(const Frames& frames, const MfccOptions& opts) {
  const detail::RealFft fft(frames.length);
  const auto& bank = mel_bank(frames.length, frames.sample_rate);

  FeatureVector v = make_vector(frames, FeatureKind::Mfcc13, kCepstra);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> power(fft.bins());
  std::vector<double> logmel(kMelFilters);
  for (std::size_t t = 0; t < frames.count; ++t) {
    fft.forward(std::span(frames.frame(t), frames.length), spec);
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]);
    for (std::size_t m = 0; m < kMelFilters; ++m) {
      double e = 0.0;
      const auto& w = bank.weights[m];
      for (std::size_t k = 0; k < w.size(); ++k) e += w[k] * power[bank.first[m] + k];
      logmel[m] = std::log(std::max(e, kLogFloor));
    }
    for (std::size_t c = 0; c < kCepstra; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < kMelFilters; ++m) acc += bank.dct[c * kMelFilters + m] * logmel[m];
      v.values[t * kCepstra + c] = acc;
    }
    if (!opts.include_c0) {
      double energy = 0.0;
      const double* x = frames.frame(t);
      for (std::size_t i = 0; i < frames.length; ++i) energy += x[i] * x[i];
      v.values[t * kCepstra] = std::log(std::max(energy, kLogFloor));
    }
  }
  return v;
}

std::vector<double> pre_emphasis(const std::vector<double>& x, double a) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = i == 0 ? x[0] : x[i] - a * x[i - 1];
  return y;
}

FeatureVector extract(const Utterance& u, FeatureKind kind, const FrameGeometry& g, const MfccOptions& opts) {
  if (kind == FeatureKind::Spectrogram50) return spectrogram50(frame_signal(u, g));
  Utterance emphasized = u;
  emphasized.samples = pre_emphasis(u.samples);
  return mfcc13(frame_signal(emphasized, g), opts);
}

void save_features(const FeatureVector& v, const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".f64";
  auto side = stem;
  side += ".json";
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(v.values.data()), static_cast<std::streamsize>(v.values.size() * sizeof(double)));
  nlohmann::json j = {{"schema", "mispro-features"},
                      {"version", 1},
                      {"kind", to_string(v.kind)},
                      {"window_ms", v.geometry.window_ms},
                      {"hop_ms", v.geometry.hop_ms},
                      {"window", "hamming"},
                      {"order", "frame-major"},
                      {"per_frame", v.per_frame},
                      {"frames", v.frames},
                      {"word", v.word},
                      {"speaker", v.speaker},
                      {"class", to_string(v.cls)}};
  std::ofstream js(side, std::ios::trunc);
  if (!js) throw_data("cannot write " + side.string());
  js << j.dump(1) << "\n";
}

FeatureVector load_features(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".f64";
  auto side = stem;
  side += ".json";
  std::ifstream js(side);
  if (!js) throw_data("cannot open " + side.string());
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_data(side.string() + ": " + e.what());
  }
  FeatureVector v;
  try {
    if (j.at("schema") != "mispro-features" || j.at("version") != 1) throw_data(side.string() + ": unsupported descriptor");
    v.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    v.geometry.window_ms = j.at("window_ms");
    v.geometry.hop_ms = j.at("hop_ms");
    v.per_frame = j.at("per_frame");
    v.frames = j.at("frames");
    v.word = j.at("word");
    v.speaker = j.at("speaker");
    v.cls = speaker_class_from_string(j.at("class").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw_data(side.string() + ": " + e.what());
  }
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw_data("cannot open " + bin.string());
  v.values.resize(v.per_frame * v.frames);
  in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(v.values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.values.size() * sizeof(double)) || in.peek() != EOF)
    throw_data(bin.string() + ": size does not match descriptor");
  return v;
}

}  // namespace mispro::features
