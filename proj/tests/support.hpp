#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mispro/corpus.hpp"
#include "mispro/synth.hpp"

namespace support {

inline std::vector<double> tone(double hz, double ms, double amp = 0.5, double rate = 32000) {
  const auto n = static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return x;
}

inline std::vector<double> silence(double ms, double rate = 32000) {
  return std::vector<double>(static_cast<std::size_t>(std::llround(ms * rate / 1000.0)), 0.0);
}

inline std::vector<double> noise(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = d(g);
  return x;
}

inline std::vector<double> concat(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline mispro::Utterance utterance(std::vector<double> samples, double rate = 32000) {
  mispro::Utterance u;
  u.samples = std::move(samples);
  u.sample_rate = rate;
  return u;
}

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mispro_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// First `words` reference words, 4 native and 3 non-native speakers, 3 repetitions.
inline mispro::corpus::SynthSpec small_spec(std::size_t words = 3) {
  auto spec = mispro::corpus::reference_synth_spec();
  spec.words.resize(words);
  spec.native_speakers = 4;
  spec.non_native_speakers = 3;
  spec.repetitions = 3;
  return spec;
}

/// Small corpus written once per process.
inline const mispro::corpus::CorpusManifest& small_corpus() {
  static const mispro::corpus::CorpusManifest m = [] {
    const auto dir = temp_dir("small_corpus");
    const auto summary = mispro::corpus::write_corpus(mispro::corpus::synthesize_corpus(small_spec(), 11), dir);
    return mispro::corpus::load_manifest(summary.manifest_path);
  }();
  return m;
}

}  // namespace support
