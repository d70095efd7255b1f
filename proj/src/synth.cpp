#include "mispro/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "mispro/error.hpp"
#include "mispro/wav.hpp"
#include "rng.hpp"

using nlohmann::json;

namespace mispro::corpus {

namespace {

constexpr double kEnvelopeMs = 20.0;
constexpr double kMaxHarmonicHz = 5000.0;
constexpr std::array<double, 3> kFormantGain{1.0, 0.5, 0.25};
constexpr std::array<double, 3> kFormantBandwidth{90.0, 110.0, 170.0};
// Mispronounced syllables: F1 raised, F2 lowered, F3 raised slightly, each by the
// perturbation magnitude times this factor.
constexpr std::array<double, 3> kPerturbationDirection{1.0, -0.5, 0.25};
// Samples are rendered in short blocks with fixed harmonic amplitudes.
constexpr std::size_t kBlock = 32;

struct SpeakerVoice {
  double f0 = 120.0;
  double tract = 1.0;
  double rate = 1.0;
  double amplitude = 0.5;
};

SpeakerVoice draw_voice(std::uint64_t seed, int speaker, const SynthSpec& spec) {
  detail::Rng rng(detail::derive_seed(seed, {1, static_cast<std::uint64_t>(speaker)}));
  SpeakerVoice v;
  v.f0 = rng.uniform(95.0, 145.0);
  v.tract = std::clamp(rng.normal(1.0, spec.speaker_formant_spread), 0.85, 1.15);
  v.rate = std::clamp(rng.normal(1.0, spec.speaker_rate_spread), 0.8, 1.2);
  v.amplitude = rng.uniform(0.3, 0.8);
  return v;
}

std::size_t ms_to_samples(double ms) {
  return static_cast<std::size_t>(std::llround(ms * kCanonicalSampleRate / 1000.0));
}

/// Appends one syllable to `out`. `phase` carries the glottal phase across syllables.
void render_syllable(std::vector<double>& out, double& phase, std::size_t n, std::array<double, 3> f_start,
                     std::array<double, 3> f_end, double f0_start, double f0_end) {
  const std::size_t ramp = std::min(n / 2, ms_to_samples(kEnvelopeMs));
  std::vector<double> amp;
  for (std::size_t b0 = 0; b0 < n; b0 += kBlock) {
    const std::size_t b1 = std::min(n, b0 + kBlock);
    const double pos = (static_cast<double>(b0) + 0.5 * static_cast<double>(b1 - b0)) / static_cast<double>(n);
    const double f0 = f0_start + (f0_end - f0_start) * pos;
    std::array<double, 3> formant{};
    for (int i = 0; i < 3; ++i) formant[i] = f_start[i] + (f_end[i] - f_start[i]) * pos;

    const auto harmonics = static_cast<std::size_t>(kMaxHarmonicHz / f0);
    amp.assign(harmonics + 1, 0.0);
    for (std::size_t h = 1; h <= harmonics; ++h) {
      const double fh = static_cast<double>(h) * f0;
      for (int i = 0; i < 3; ++i) {
        const double x = (fh - formant[i]) / kFormantBandwidth[i];
        amp[h] += kFormantGain[i] / (1.0 + x * x);
      }
    }
    const double dphase = 2.0 * std::numbers::pi * f0 / kCanonicalSampleRate;
    for (std::size_t t = b0; t < b1; ++t) {
      phase = std::fmod(phase + dphase, 2.0 * std::numbers::pi);
      // sin(h*phase) by the Chebyshev recurrence.
      const double c2 = 2.0 * std::cos(phase);
      double s_prev = 0.0;
      double s_cur = std::sin(phase);
      double acc = 0.0;
      for (std::size_t h = 1; h <= harmonics; ++h) {
        acc += amp[h] * s_cur;
        const double s_next = c2 * s_cur - s_prev;
        s_prev = s_cur;
        s_cur = s_next;
      }
      double env = 1.0;
      if (t < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(t) / ramp);
      else if (t >= n - ramp)
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(n - 1 - t) / ramp);
      out.push_back(env * acc);
    }
  }
}

std::vector<double> render_sample(const SynthSpec& spec, const WordSpec& word, const SpeakerVoice& voice,
                                  bool non_native, std::uint64_t sample_seed, std::vector<Boundary>& bounds) {
  detail::Rng rng(sample_seed);
  const double f0 = voice.f0 * (1.0 + 0.03 * rng.normal());
  const double lead_ms = rng.uniform(120.0, 300.0);
  const double trail_ms = rng.uniform(120.0, 300.0);

  std::vector<double> voiced;
  std::vector<std::size_t> lengths;
  double phase = 0.0;
  const std::size_t k_count = word.syllables.size();
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto& syl = word.syllables[k];
    const bool perturb =
        non_native && std::find(word.mispronounced.begin(), word.mispronounced.end(), k) != word.mispronounced.end();
    std::array<double, 3> fs{};
    std::array<double, 3> fe{};
    for (int i = 0; i < 3; ++i) {
      double scale = voice.tract * (1.0 + spec.repetition_formant_jitter * rng.normal());
      if (perturb) scale *= 1.0 + spec.formant_perturbation * kPerturbationDirection[i];
      fs[i] = syl.formants[i] * scale;
      fe[i] = syl.formants_end[i] * scale;
    }
    double dur = syl.duration_ms * voice.rate * (1.0 + spec.repetition_duration_jitter * rng.normal());
    if (perturb) dur *= 1.0 + spec.duration_perturbation;
    const std::size_t n = std::max<std::size_t>(ms_to_samples(dur), 2 * kBlock);
    // Gentle declination over the word.
    const double a = 1.06 - 0.12 * static_cast<double>(k) / static_cast<double>(k_count);
    const double b = 1.06 - 0.12 * static_cast<double>(k + 1) / static_cast<double>(k_count);
    render_syllable(voiced, phase, n, fs, fe, f0 * a, f0 * b);
    lengths.push_back(n);
  }

  double peak = 0.0;
  for (double x : voiced) peak = std::max(peak, std::abs(x));
  const double gain = voice.amplitude * rng.uniform(0.8, 1.0) / std::max(peak, 1e-12);

  const std::size_t lead = ms_to_samples(lead_ms);
  const std::size_t trail = ms_to_samples(trail_ms);
  std::vector<double> out(lead + voiced.size() + trail, 0.0);
  for (std::size_t i = 0; i < voiced.size(); ++i) out[lead + i] = gain * voiced[i];
  for (double& x : out) x += spec.noise_level * rng.normal();

  // Boundaries tile the whole file: silence belongs to the first and last syllables.
  bounds.clear();
  std::size_t pos = lead;
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::size_t start = k == 0 ? 0 : pos;
    pos += lengths[k];
    const std::size_t end = k + 1 == k_count ? out.size() : pos;
    bounds.push_back({start, end});
  }
  return out;
}

SyllableSpec syllable(std::string label, std::array<double, 3> from, std::array<double, 3> to, double ms) {
  return {std::move(label), from, to, ms};
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.words.empty()) throw_usage("synth spec: no words");
  if (spec.native_speakers < 1 || spec.non_native_speakers < 1)
    throw_usage("synth spec: zero speakers in a class (need at least one native and one non-native)");
  if (spec.repetitions < 1) throw_usage("synth spec: repetitions must be >= 1");
  auto in_unit = [](double m) { return m >= 0.0 && m <= 1.0; };
  if (!in_unit(spec.formant_perturbation) || !in_unit(spec.duration_perturbation))
    throw_usage("synth spec: perturbation magnitude outside [0, 1]");
  if (spec.noise_level < 0.0) throw_usage("synth spec: noise_level must be >= 0");
  for (const auto& w : spec.words) {
    if (w.syllables.empty()) throw_usage("synth spec: word " + std::to_string(w.id) + " has no syllables");
    for (const auto& s : w.syllables) {
      if (!(s.duration_ms > 0.0)) throw_usage("synth spec: syllable duration must be positive");
      for (int i = 0; i < 3; ++i)
        if (!(s.formants[i] > 0.0) || !(s.formants_end[i] > 0.0))
          throw_usage("synth spec: formants must be positive");
    }
    for (auto k : w.mispronounced)
      if (k >= w.syllables.size()) throw_usage("synth spec: mispronounced index out of range in word " + w.label);
  }
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_usage(std::string("synth spec parse failure: ") + e.what());
  }
  SynthSpec spec;
  try {
    if (j.value("schema", std::string("mispro-synth-spec")) != "mispro-synth-spec")
      throw_usage("synth spec: schema is not 'mispro-synth-spec'");
    if (j.value("version", 1) != 1) throw_usage("synth spec: unsupported version");
    spec.native_speakers = j.value("native_speakers", spec.native_speakers);
    spec.non_native_speakers = j.value("non_native_speakers", spec.non_native_speakers);
    spec.repetitions = j.value("repetitions", spec.repetitions);
    spec.formant_perturbation = j.value("formant_perturbation", spec.formant_perturbation);
    spec.duration_perturbation = j.value("duration_perturbation", spec.duration_perturbation);
    spec.noise_level = j.value("noise_level", spec.noise_level);
    spec.speaker_formant_spread = j.value("speaker_formant_spread", spec.speaker_formant_spread);
    spec.speaker_rate_spread = j.value("speaker_rate_spread", spec.speaker_rate_spread);
    spec.repetition_formant_jitter = j.value("repetition_formant_jitter", spec.repetition_formant_jitter);
    spec.repetition_duration_jitter = j.value("repetition_duration_jitter", spec.repetition_duration_jitter);
    for (const auto& jw : j.at("words")) {
      WordSpec w;
      w.id = jw.at("id").get<int>();
      w.label = jw.at("label").get<std::string>();
      for (const auto& js : jw.at("syllables")) {
        SyllableSpec s;
        s.label = js.at("label").get<std::string>();
        s.formants = js.at("formants").get<std::array<double, 3>>();
        s.formants_end = js.contains("formants_end") ? js.at("formants_end").get<std::array<double, 3>>() : s.formants;
        s.duration_ms = js.at("duration_ms").get<double>();
        w.syllables.push_back(std::move(s));
      }
      if (jw.contains("mispronounced")) w.mispronounced = jw.at("mispronounced").get<std::vector<std::size_t>>();
      spec.words.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw_usage(std::string("synth spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json j;
  j["schema"] = "mispro-synth-spec";
  j["version"] = 1;
  j["native_speakers"] = spec.native_speakers;
  j["non_native_speakers"] = spec.non_native_speakers;
  j["repetitions"] = spec.repetitions;
  j["formant_perturbation"] = spec.formant_perturbation;
  j["duration_perturbation"] = spec.duration_perturbation;
  j["noise_level"] = spec.noise_level;
  j["speaker_formant_spread"] = spec.speaker_formant_spread;
  j["speaker_rate_spread"] = spec.speaker_rate_spread;
  j["repetition_formant_jitter"] = spec.repetition_formant_jitter;
  j["repetition_duration_jitter"] = spec.repetition_duration_jitter;
  j["words"] = json::array();
  for (const auto& w : spec.words) {
    json jw = {{"id", w.id}, {"label", w.label}, {"mispronounced", w.mispronounced}};
    jw["syllables"] = json::array();
    for (const auto& s : w.syllables)
      jw["syllables"].push_back(
          {{"label", s.label}, {"formants", s.formants}, {"formants_end", s.formants_end}, {"duration_ms", s.duration_ms}});
    j["words"].push_back(std::move(jw));
  }
  return j.dump(1) + "\n";
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_usage("cannot open synth spec: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synth_spec(ss.str());
}

SynthSpec reference_synth_spec() {
  // Vowel targets (F1, F2, F3) for an adult male voice.
  constexpr std::array<double, 3> A{700, 1250, 2500};
  constexpr std::array<double, 3> E{450, 1850, 2550};
  constexpr std::array<double, 3> I{300, 2250, 2950};
  constexpr std::array<double, 3> O{480, 900, 2450};
  constexpr std::array<double, 3> U{320, 800, 2350};
  // Consonant loci the formants glide from.
  constexpr std::array<double, 3> Lab{300, 950, 2200};
  constexpr std::array<double, 3> Alv{350, 1700, 2700};
  constexpr std::array<double, 3> Vel{300, 1950, 2350};
  constexpr std::array<double, 3> Pal{280, 2200, 3000};
  constexpr std::array<double, 3> Fric{2600, 3600, 4500};
  constexpr std::array<double, 3> Rho{420, 1350, 1900};

  SynthSpec spec;
  spec.words = {
      {1, "jamaica", {syllable("ja", Pal, A, 300), syllable("mai", A, I, 280), syllable("ca", Vel, A, 280)}, {2}},
      {2, "tres", {syllable("tr", Alv, Rho, 200), syllable("e", E, E, 350), syllable("s", Fric, Fric, 250)}, {0}},
      {3, "gemelas",
       {syllable("ge", Vel, E, 220), syllable("me", Lab, E, 210), syllable("la", Alv, A, 230),
        syllable("s", Fric, Fric, 200)},
       {0}},
      {4, "hierro", {syllable("hie", I, E, 400), syllable("rro", Rho, O, 400)}, {1}},
      {5, "pala", {syllable("pa", Lab, A, 400), syllable("la", Alv, A, 400)}, {0}},
      {6, "torturados",
       {syllable("tor", Alv, O, 200), syllable("tu", Alv, U, 170), syllable("ra", Rho, A, 180),
        syllable("do", Alv, O, 180), syllable("s", Fric, Fric, 170)},
       {0}},
      {7, "accidente",
       {syllable("ac", A, Vel, 230), syllable("ci", Fric, I, 200), syllable("den", Alv, E, 230),
        syllable("te", Alv, E, 220)},
       {2}},
      {8, "construccion",
       {syllable("cons", Vel, O, 320), syllable("truc", Rho, U, 300), syllable("cion", Pal, O, 320)},
       {0}},
      {9, "puertorriquena",
       {syllable("puer", U, E, 200), syllable("tor", Alv, O, 170), syllable("ri", Rho, I, 160),
        syllable("que", Vel, E, 170), syllable("na", Alv, A, 190)},
       {0}},
      {10, "aire", {syllable("ai", A, I, 380), syllable("re", Rho, E, 380)}, {1}},
  };
  return spec;
}

SynthesizedCorpus synthesize_corpus(const SynthSpec& spec, std::uint64_t seed) {
  validate(spec);
  SynthesizedCorpus out;
  auto& m = out.manifest;
  for (const auto& w : spec.words) {
    WordEntry e{w.id, w.label, {}};
    for (const auto& s : w.syllables) e.syllables.push_back(s.label);
    m.words.push_back(std::move(e));
  }
  const int total = spec.native_speakers + spec.non_native_speakers;
  std::vector<SpeakerVoice> voices;
  for (int s = 1; s <= total; ++s) {
    m.speakers.push_back({s, s <= spec.native_speakers ? SpeakerClass::Native : SpeakerClass::NonNative});
    voices.push_back(draw_voice(seed, s, spec));
  }
  for (const auto& w : spec.words) {
    for (const auto& sp : m.speakers) {
      for (int r = 0; r < spec.repetitions; ++r) {
        const auto sample_seed = detail::derive_seed(
            seed, {2, static_cast<std::uint64_t>(w.id), static_cast<std::uint64_t>(sp.id), static_cast<std::uint64_t>(r)});
        std::vector<Boundary> bounds;
        auto audio = render_sample(spec, w, voices[static_cast<std::size_t>(sp.id - 1)],
                                   sp.cls == SpeakerClass::NonNative, sample_seed, bounds);
        // Store what a reader will see after 16-bit quantization.
        const auto bytes = wav::encode_pcm16(audio, kCanonicalSampleRate);
        audio = wav::decode(bytes).samples;

        char name[64];
        std::snprintf(name, sizeof name, "audio/w%02d_s%02d_r%d.wav", w.id, sp.id, r);
        m.samples.push_back({w.id, sp.id, r, name, std::move(bounds)});
        out.audio.push_back(std::move(audio));
      }
    }
  }
  validate(m);
  return out;
}

WriteSummary write_corpus(const SynthesizedCorpus& corpus, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  WriteSummary summary;
  std::error_code ec;
  fs::create_directories(out_dir / "audio", ec);
  if (ec) throw_data("cannot create output directory " + out_dir.string() + ": " + ec.message());

  auto write_if_changed = [&](const fs::path& path, const std::string& bytes) {
    if (fs::exists(path) && fs::file_size(path) == bytes.size()) {
      std::ifstream in(path, std::ios::binary);
      const std::string existing((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (existing == bytes) {
        ++summary.files_unchanged;
        return;
      }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_data("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    ++summary.files_written;
  };

  for (std::size_t i = 0; i < corpus.audio.size(); ++i) {
    const auto bytes = wav::encode_pcm16(corpus.audio[i], kCanonicalSampleRate);
    write_if_changed(out_dir / corpus.manifest.samples[i].audio, std::string(bytes.begin(), bytes.end()));
  }
  summary.manifest_path = out_dir / "manifest.json";
  write_if_changed(summary.manifest_path, manifest_to_json(corpus.manifest));
  return summary;
}

}  // namespace mispro::corpus
