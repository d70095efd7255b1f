#include <fstream>

#include "doctest.h"
#include "mispro/corpus.hpp"
#include "mispro/error.hpp"
#include "mispro/synth.hpp"
#include "mispro/wav.hpp"
#include "support.hpp"

using namespace mispro;

namespace {

// Hand-written RIFF image with arbitrary channels and 16-bit samples.
std::vector<std::uint8_t> riff(const std::vector<std::int16_t>& pcm, int channels, int rate) {
  std::vector<std::uint8_t> b;
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i))); };
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  const auto data = static_cast<std::uint32_t>(pcm.size() * 2);
  tag("RIFF");
  u32(36 + data);
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * 2));
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(16);
  tag("data");
  u32(data);
  for (auto s : pcm) u16(static_cast<std::uint16_t>(s));
  return b;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream o(p, std::ios::binary);
  o.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

corpus::CorpusManifest reference_layout() {
  corpus::CorpusManifest m;
  for (const auto& w : corpus::reference_synth_spec().words) {
    corpus::WordEntry e{w.id, w.label, {}};
    for (const auto& s : w.syllables) e.syllables.push_back(s.label);
    m.words.push_back(e);
  }
  for (int s = 1; s <= 13; ++s) m.speakers.push_back({s, s <= 7 ? SpeakerClass::Native : SpeakerClass::NonNative});
  for (const auto& w : m.words)
    for (const auto& s : m.speakers)
      for (int r = 0; r < 5; ++r)
        m.samples.push_back({w.id, s.id, r, "a/" + std::to_string(w.id) + "_" + std::to_string(s.id) + "_" + std::to_string(r) + ".wav", {}});
  return m;
}

}  // namespace

TEST_CASE("wav: 16-bit scaling puts 32767 just below 1") {
  const auto w = wav::decode(riff({32767, -32768, 0}, 1, 32000));
  CHECK(w.samples[0] == 1.0 - 1.0 / 32768.0);
  CHECK(w.samples[0] < 1.0);
  CHECK(w.samples[1] == -1.0);
  CHECK(w.samples[2] == 0.0);
}

TEST_CASE("wav: encode/decode round trip is exact on the 16-bit grid") {
  std::vector<double> x = {0.0, 0.5, -0.25, 1.0 / 32768.0, -1.0};
  const auto back = wav::decode(wav::encode_pcm16(x, 16000));
  CHECK(back.sample_rate == 16000);
  CHECK(back.channels == 1);
  REQUIRE(back.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.samples[i] == x[i]);
}

TEST_CASE("wav: malformed input raises data errors") {
  std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'F', 0, 0};
  CHECK_THROWS_AS(wav::decode(junk), Error);
  auto good = riff({1, 2, 3}, 1, 32000);
  good.resize(good.size() - 4);
  CHECK_THROWS_WITH_AS(wav::decode(good), doctest::Contains("truncated"), Error);
}

TEST_CASE("load_utterance: duration, mono and empty checks") {
  const auto dir = support::temp_dir("load_utt");
  corpus::CorpusManifest m;
  m.base_dir = dir;
  m.words = {{1, "w", {"a"}}};
  m.speakers = {{1, SpeakerClass::Native}};
  m.samples = {{1, 1, 0, "one.wav", {}}};

  write_bytes(dir / "one.wav", riff(std::vector<std::int16_t>(32000, 100), 1, 32000));
  auto u = corpus::load_utterance(m.samples[0], m);
  CHECK(u.samples.size() == 32000);
  CHECK(u.sample_rate == 32000);
  CHECK(u.word == 1);
  CHECK(u.speaker == 1);

  write_bytes(dir / "one.wav", riff(std::vector<std::int16_t>(200, 1), 2, 32000));
  CHECK_THROWS_WITH_AS(corpus::load_utterance(m.samples[0], m), doctest::Contains("mono required"), Error);

  write_bytes(dir / "one.wav", riff({}, 1, 32000));
  CHECK_THROWS_WITH_AS(corpus::load_utterance(m.samples[0], m), doctest::Contains("zero-length"), Error);

  std::filesystem::remove(dir / "one.wav");
  CHECK_THROWS_AS(corpus::load_utterance(m.samples[0], m), Error);
}

TEST_CASE("load_utterance: other rates are resampled to 32 kHz with boundaries scaled") {
  const auto dir = support::temp_dir("load_resample");
  corpus::CorpusManifest m;
  m.base_dir = dir;
  m.words = {{1, "w", {"a", "b"}}};
  m.speakers = {{1, SpeakerClass::Native}};
  m.samples = {{1, 1, 0, "x.wav", std::vector<Boundary>{{0, 8000}, {8000, 16000}}}};
  write_bytes(dir / "x.wav", riff(std::vector<std::int16_t>(16000, 1000), 1, 16000));
  const auto u = corpus::load_utterance(m.samples[0], m);
  CHECK(u.sample_rate == 32000);
  CHECK(u.samples.size() == 32000);
  REQUIRE(u.boundaries);
  CHECK((*u.boundaries)[1].start == 16000);
  CHECK((*u.boundaries)[1].end == 32000);
}

TEST_CASE("manifest: reference layout loads 650 samples and round-trips") {
  const auto dir = support::temp_dir("manifest_rt");
  const auto m = reference_layout();
  corpus::save_manifest(m, dir / "manifest.json");
  const auto back = corpus::load_manifest(dir / "manifest.json");
  CHECK(back.samples.size() == 650);
  CHECK(back == m);
  CHECK(back.base_dir == dir);
}

TEST_CASE("manifest: validation errors") {
  auto m = reference_layout();
  SUBCASE("no samples") {
    m.samples.clear();
    CHECK_THROWS_WITH_AS(corpus::validate(m), doctest::Contains("no samples"), Error);
  }
  SUBCASE("dangling speaker") {
    m.samples[0].speaker = 99;
    CHECK_THROWS_WITH_AS(corpus::validate(m), doctest::Contains("dangling reference"), Error);
  }
  SUBCASE("dangling word") {
    m.samples[0].word = 99;
    CHECK_THROWS_WITH_AS(corpus::validate(m), doctest::Contains("dangling reference"), Error);
  }
  SUBCASE("boundary count") {
    m.samples[0].boundaries = std::vector<Boundary>{{0, 10}};
    CHECK_THROWS_WITH_AS(corpus::validate(m), doctest::Contains("boundary count mismatch"), Error);
  }
  SUBCASE("overlapping boundaries") {
    m.samples[0].boundaries = std::vector<Boundary>{{0, 10}, {5, 20}, {20, 30}};
    CHECK_THROWS_AS(corpus::validate(m), Error);
  }
  SUBCASE("missing (word, speaker) pair") {
    std::erase_if(m.samples, [](const corpus::SampleEntry& s) { return s.word == 3 && s.speaker == 4; });
    CHECK_THROWS_WITH_AS(corpus::validate(m), doctest::Contains("no samples for word 3"), Error);
  }
}

TEST_CASE("manifest: parse errors name the problem") {
  CHECK_THROWS_WITH_AS(corpus::parse_manifest("{", "."), doctest::Contains("parse failure"), Error);
  CHECK_THROWS_WITH_AS(corpus::parse_manifest(R"({"schema":"other"})", "."), doctest::Contains("schema"), Error);
  CHECK_THROWS_WITH_AS(corpus::parse_manifest(R"({"schema":"mispro-manifest","version":2})", "."),
                       doctest::Contains("version"), Error);
}

TEST_CASE("utterance validation") {
  auto u = support::utterance({0.1, 0.2});
  CHECK_NOTHROW(corpus::validate(u));
  u.samples.push_back(std::nan(""));
  CHECK_THROWS_AS(corpus::validate(u), Error);
  u.samples.clear();
  CHECK_THROWS_AS(corpus::validate(u), Error);
}
