#include "mispro/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "mispro/error.hpp"
#include "mispro/wav.hpp"

using nlohmann::json;

namespace mispro {

std::string_view to_string(SpeakerClass c) {
  return c == SpeakerClass::Native ? "native" : "non-native";
}

SpeakerClass speaker_class_from_string(std::string_view s) {
  if (s == "native") return SpeakerClass::Native;
  if (s == "non-native") return SpeakerClass::NonNative;
  throw_data("unknown speaker class '" + std::string(s) + "' (expected native or non-native)");
}

}  // namespace mispro

namespace mispro::corpus {

const WordEntry& CorpusManifest::word(int id) const {
  for (const auto& w : words)
    if (w.id == id) return w;
  throw_data("unknown word id " + std::to_string(id));
}

const SpeakerEntry& CorpusManifest::speaker(int id) const {
  for (const auto& s : speakers)
    if (s.id == id) return s;
  throw_data("unknown speaker id " + std::to_string(id));
}

bool CorpusManifest::has_word(int id) const {
  return std::any_of(words.begin(), words.end(), [id](const WordEntry& w) { return w.id == id; });
}

std::filesystem::path CorpusManifest::audio_path(const SampleEntry& s) const {
  std::filesystem::path p(s.audio);
  return p.is_absolute() ? p : base_dir / p;
}

void validate(const CorpusManifest& m) {
  if (m.words.empty()) throw_data("manifest has no words");
  if (m.speakers.empty()) throw_data("manifest has no speakers");
  if (m.samples.empty()) throw_data("no samples in manifest");

  std::map<int, std::size_t> syllable_count;
  for (const auto& w : m.words) {
    if (w.syllables.empty()) throw_data("word " + std::to_string(w.id) + " has an empty syllable list");
    if (!syllable_count.emplace(w.id, w.syllables.size()).second)
      throw_data("duplicate word id " + std::to_string(w.id));
  }
  std::set<int> speaker_ids;
  for (const auto& s : m.speakers)
    if (!speaker_ids.insert(s.id).second) throw_data("duplicate speaker id " + std::to_string(s.id));

  std::set<std::pair<int, int>> pairs;
  std::set<std::tuple<int, int, int>> keys;
  for (const auto& s : m.samples) {
    const auto it = syllable_count.find(s.word);
    if (it == syllable_count.end())
      throw_data("dangling reference: sample refers to word id " + std::to_string(s.word));
    if (!speaker_ids.count(s.speaker))
      throw_data("dangling reference: sample refers to speaker id " + std::to_string(s.speaker));
    if (!keys.emplace(s.word, s.speaker, s.repetition).second)
      throw_data("duplicate sample for word " + std::to_string(s.word) + ", speaker " +
                 std::to_string(s.speaker) + ", repetition " + std::to_string(s.repetition));
    pairs.emplace(s.word, s.speaker);
    if (s.boundaries) {
      const auto& b = *s.boundaries;
      if (b.size() != it->second)
        throw_data("boundary count mismatch for " + s.audio + ": expected " + std::to_string(it->second) +
                   ", got " + std::to_string(b.size()));
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (b[k].start >= b[k].end) throw_data("boundaries not strictly increasing in " + s.audio);
        if (k > 0 && b[k].start < b[k - 1].end) throw_data("overlapping boundaries in " + s.audio);
      }
    }
  }
  for (const auto& w : m.words)
    for (int sp : speaker_ids)
      if (!pairs.count({w.id, sp}))
        throw_data("no samples for word " + std::to_string(w.id) + " and speaker " + std::to_string(sp));
}

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw_data(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw_data(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

CorpusManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_data(std::string("manifest parse failure: ") + e.what());
  }
  if (!j.is_object()) throw_data("manifest parse failure: top level is not an object");
  if (field<std::string>(j, "schema", "manifest") != "mispro-manifest")
    throw_data("manifest parse failure: schema is not 'mispro-manifest'");
  const int version = field<int>(j, "version", "manifest");
  if (version != kManifestVersion)
    throw_data("unsupported manifest version " + std::to_string(version));

  CorpusManifest m;
  m.base_dir = base_dir;
  for (const auto& w : field<json>(j, "words", "manifest")) {
    WordEntry e;
    e.id = field<int>(w, "id", "word");
    e.label = field<std::string>(w, "label", "word");
    e.syllables = field<std::vector<std::string>>(w, "syllables", "word");
    m.words.push_back(std::move(e));
  }
  for (const auto& s : field<json>(j, "speakers", "manifest")) {
    SpeakerEntry e;
    e.id = field<int>(s, "id", "speaker");
    e.cls = speaker_class_from_string(field<std::string>(s, "class", "speaker"));
    m.speakers.push_back(e);
  }
  for (const auto& s : field<json>(j, "samples", "manifest")) {
    SampleEntry e;
    e.word = field<int>(s, "word", "sample");
    e.speaker = field<int>(s, "speaker", "sample");
    e.repetition = field<int>(s, "repetition", "sample");
    e.audio = field<std::string>(s, "audio", "sample");
    if (s.contains("boundaries") && !s.at("boundaries").is_null()) {
      std::vector<Boundary> b;
      for (const auto& pair : field<json>(s, "boundaries", "sample")) {
        if (!pair.is_array() || pair.size() != 2) throw_data("sample: boundary entries must be [start, end]");
        const auto start = pair[0].get<long long>();
        const auto end = pair[1].get<long long>();
        if (start < 0 || end < 0) throw_data("sample: negative boundary offset");
        b.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
      }
      e.boundaries = std::move(b);
    }
    m.samples.push_back(std::move(e));
  }
  validate(m);
  return m;
}

std::string manifest_to_json(const CorpusManifest& m) {
  json j;
  j["schema"] = "mispro-manifest";
  j["version"] = kManifestVersion;
  j["words"] = json::array();
  for (const auto& w : m.words) j["words"].push_back({{"id", w.id}, {"label", w.label}, {"syllables", w.syllables}});
  j["speakers"] = json::array();
  for (const auto& s : m.speakers) j["speakers"].push_back({{"id", s.id}, {"class", to_string(s.cls)}});
  j["samples"] = json::array();
  for (const auto& s : m.samples) {
    json e = {{"word", s.word}, {"speaker", s.speaker}, {"repetition", s.repetition}, {"audio", s.audio}};
    if (s.boundaries) {
      json b = json::array();
      for (const auto& x : *s.boundaries) b.push_back({x.start, x.end});
      e["boundaries"] = std::move(b);
    }
    j["samples"].push_back(std::move(e));
  }
  return j.dump(1) + "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open manifest: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot write manifest: " + path.string());
  out << manifest_to_json(m);
}

Utterance resample(const Utterance& u, double target_rate) {
  if (!(target_rate > 0)) throw_data("resample: target rate must be positive");
  if (u.sample_rate == target_rate) return u;
  const double ratio = target_rate / u.sample_rate;
  const auto n_out = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(u.samples.size() * ratio)));
  Utterance out = u;
  out.sample_rate = target_rate;
  out.samples.assign(n_out, 0.0);
  const std::size_t last = u.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double src = static_cast<double>(i) / ratio;
    const auto i0 = std::min(static_cast<std::size_t>(src), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = src - static_cast<double>(i0);
    out.samples[i] = u.samples[i0] + (u.samples[i1] - u.samples[i0]) * std::clamp(frac, 0.0, 1.0);
  }
  if (u.boundaries) {
    for (auto& b : *out.boundaries) {
      b.start = std::min(n_out, static_cast<std::size_t>(std::llround(b.start * ratio)));
      b.end = std::min(n_out, static_cast<std::size_t>(std::llround(b.end * ratio)));
    }
  }
  return out;
}

void validate(const Utterance& u) {
  if (!(u.sample_rate > 0)) throw_data("utterance sample rate must be positive");
  if (u.samples.empty()) throw_data("utterance has zero-length audio");
  for (double x : u.samples)
    if (!std::isfinite(x)) throw_data("utterance contains non-finite samples");
}

Utterance load_utterance(const SampleEntry& entry, const CorpusManifest& manifest) {
  const auto path = manifest.audio_path(entry);
  const auto data = wav::read(path);
  if (data.channels != 1) throw_data(path.string() + ": mono required, got " + std::to_string(data.channels) + " channels");
  if (data.samples.empty()) throw_data(path.string() + ": zero-length audio");
  if (data.sample_rate <= 0) throw_data(path.string() + ": invalid sample rate");

  Utterance u;
  u.samples = data.samples;
  u.sample_rate = data.sample_rate;
  u.word = entry.word;
  u.speaker = entry.speaker;
  u.repetition = entry.repetition;
  u.cls = manifest.speaker(entry.speaker).cls;
  u.boundaries = entry.boundaries;
  if (u.boundaries && !u.boundaries->empty() && u.boundaries->back().end > u.samples.size())
    throw_data(path.string() + ": syllable boundaries exceed the audio length");
  if (u.sample_rate != kCanonicalSampleRate) u = resample(u, kCanonicalSampleRate);
  return u;
}

}  // namespace mispro::corpus
