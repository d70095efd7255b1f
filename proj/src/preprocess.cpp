#include "mispro/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fft.hpp"
#include "mispro/error.hpp"

namespace mispro::preprocess {

namespace {

std::size_t ms_to_samples(double ms, double rate) {
  return static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
}

std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

std::size_t suppression_frame(double rate) { return ms_to_samples(25.0, rate); }

}  // namespace

void validate(const PreprocessConfig& cfg) {
  if (!(cfg.vad_threshold > 0.0 && cfg.vad_threshold < 1.0)) throw_usage("preprocess: vad_threshold must be in (0, 1)");
  if (!(cfg.vad_frame_ms > 0.0)) throw_usage("preprocess: vad_frame_ms must be positive");
  if (!(cfg.vad_percentile > 0.0 && cfg.vad_percentile <= 1.0))
    throw_usage("preprocess: vad_percentile must be in (0, 1]");
  if (!(cfg.tsm_frame_ms > 0.0) || !(cfg.tsm_tolerance_ms >= 0.0))
    throw_usage("preprocess: tsm frame must be positive and tolerance non-negative");
  if (cfg.min_noise_ms < 0.0 || cfg.over_subtraction < 0.0 || cfg.spectral_floor < 0.0)
    throw_usage("preprocess: noise suppression parameters must be non-negative");
  if (cfg.target_source == TargetDurationSource::Explicit && !(cfg.target_ms > 0.0))
    throw_usage("preprocess: explicit target_ms must be positive");
}

TrimResult trim_silence_detailed(const Utterance& u, const PreprocessConfig& cfg) {
  if (u.samples.empty()) throw_data("trim_silence: empty utterance");
  const std::size_t n = u.samples.size();
  const std::size_t frame = std::max<std::size_t>(1, ms_to_samples(cfg.vad_frame_ms, u.sample_rate));
  const std::size_t frames = (n + frame - 1) / frame;

  std::vector<double> energy(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t b = f * frame;
    const std::size_t e = std::min(n, b + frame);
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) acc += u.samples[i] * u.samples[i];
    energy[f] = acc / static_cast<double>(e - b);
  }
  std::vector<double> sorted = energy;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(cfg.vad_percentile * static_cast<double>(frames)));
  const double reference = sorted[std::clamp<std::size_t>(rank, 1, frames) - 1];
  const double threshold = cfg.vad_threshold * reference;

  auto speech = [&](std::size_t f) { return energy[f] > 0.0 && energy[f] >= threshold; };
  std::size_t first = 0;
  while (first < frames && !speech(first)) ++first;
  if (first == frames) throw_data("no speech detected");
  std::size_t last = frames - 1;
  while (!speech(last)) --last;

  TrimResult r;
  r.leading = first * frame;
  const std::size_t end = std::min(n, (last + 1) * frame);
  r.trailing = n - end;
  r.utterance = u;
  r.utterance.samples.assign(u.samples.begin() + static_cast<std::ptrdiff_t>(r.leading),
                             u.samples.begin() + static_cast<std::ptrdiff_t>(end));
  if (r.utterance.boundaries) {
    const std::size_t len = end - r.leading;
    for (auto& b : *r.utterance.boundaries) {
      b.start = std::min(len, b.start > r.leading ? b.start - r.leading : 0);
      b.end = std::min(len, b.end > r.leading ? b.end - r.leading : 0);
    }
  }
  return r;
}

Utterance trim_silence(const Utterance& u, const PreprocessConfig& cfg) {
  return trim_silence_detailed(u, cfg).utterance;
}

NoiseProfile empty_noise_profile(double sample_rate) {
  NoiseProfile p;
  p.frame_length = suppression_frame(sample_rate);
  p.hop = p.frame_length / 4;
  p.magnitude.assign(p.frame_length / 2 + 1, 0.0);
  return p;
}

NoiseProfile estimate_noise_profile(std::span<const double> noise, double sample_rate) {
  NoiseProfile p = empty_noise_profile(sample_rate);
  if (noise.size() < p.frame_length) throw_data("noise estimate needs at least one analysis frame");
  const auto window = periodic_hann(p.frame_length);
  const detail::RealFft fft(p.frame_length);
  std::vector<double> frame(p.frame_length);
  std::vector<std::complex<double>> spec(fft.bins());
  std::size_t count = 0;
  for (std::size_t start = 0; start + p.frame_length <= noise.size(); start += p.hop, ++count) {
    for (std::size_t i = 0; i < p.frame_length; ++i) frame[i] = noise[start + i] * window[i];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) p.magnitude[k] += std::abs(spec[k]);
  }
  for (double& m : p.magnitude) m /= static_cast<double>(count);
  return p;
}

Utterance suppress_noise(const Utterance& u, const NoiseProfile& noise, const PreprocessConfig& cfg) {
  const std::size_t frame_len = suppression_frame(u.sample_rate);
  if (noise.frame_length != frame_len || noise.hop != frame_len / 4 || noise.magnitude.size() != frame_len / 2 + 1)
    throw_data("suppress_noise: noise profile geometry mismatch");
  if (u.samples.empty()) throw_data("suppress_noise: empty utterance");

  const std::size_t hop = noise.hop;
  const std::size_t n = u.samples.size();
  // Zero-pad a full frame on each side so every output sample is covered by several frames.
  std::vector<double> padded(n + 2 * frame_len, 0.0);
  std::copy(u.samples.begin(), u.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(frame_len));
  const std::size_t frames = (padded.size() - frame_len) / hop + 1;

  const auto window = periodic_hann(frame_len);
  const detail::RealFft fft(frame_len);
  std::vector<double> acc(padded.size(), 0.0);
  std::vector<double> norm(padded.size(), 0.0);
  std::vector<double> frame(frame_len);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < frame_len; ++i) frame[i] = padded[start + i] * window[i];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double mag = std::abs(spec[k]);
      const double nk = noise.magnitude[k];
      const double out = std::max(mag - cfg.over_subtraction * nk, cfg.spectral_floor * nk);
      spec[k] = mag > 0.0 ? spec[k] * (out / mag) : std::complex<double>(out, 0.0);
    }
    fft.inverse(spec, frame);
    for (std::size_t i = 0; i < frame_len; ++i) {
      acc[start + i] += frame[i] * window[i] / static_cast<double>(frame_len);
      norm[start + i] += window[i] * window[i];
    }
  }
  Utterance out = u;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = norm[frame_len + i];
    out.samples[i] = w > 1e-9 ? acc[frame_len + i] / w : 0.0;
  }
  return out;
}

Utterance time_scale_to(const Utterance& u, double target_ms, const PreprocessConfig& cfg) {
  if (!(target_ms > 0.0)) throw_data("time_scale_to: target duration must be positive");
  if (u.samples.empty()) throw_data("time_scale_to: empty utterance");
  const std::size_t n = u.samples.size();
  const std::size_t target = std::max<std::size_t>(1, ms_to_samples(target_ms, u.sample_rate));
  const double ratio = static_cast<double>(target) / static_cast<double>(n);
  if (ratio < 0.5 || ratio > 2.0)
    throw_data("time_scale_to: extreme scaling (ratio " + std::to_string(ratio) + " outside [0.5, 2])");
  if (target == n) return u;

  const std::size_t win = std::max<std::size_t>(4, ms_to_samples(cfg.tsm_frame_ms, u.sample_rate)) & ~std::size_t{1};
  const std::size_t hop = win / 2;
  const auto tol = static_cast<std::ptrdiff_t>(ms_to_samples(cfg.tsm_tolerance_ms, u.sample_rate));
  const auto window = periodic_hann(win);

  // Input padded so every candidate frame is in range.
  const std::size_t pad = win / 2 + static_cast<std::size_t>(tol) + hop;
  std::vector<double> x(n + 2 * pad + win, 0.0);
  std::copy(u.samples.begin(), u.samples.end(), x.begin() + static_cast<std::ptrdiff_t>(pad));
  const auto max_start = static_cast<std::ptrdiff_t>(x.size() - win);

  const std::size_t frames = (target + hop - 1) / hop + 2;
  std::vector<double> y(frames * hop + win, 0.0);
  std::vector<double> wsum(y.size(), 0.0);
  const std::size_t overlap = win - hop;

  // Normalized correlation of x[a..] with x[b..] over `len` samples taken every `stride`.
  auto similarity = [&](std::ptrdiff_t cand, std::ptrdiff_t natural, std::size_t stride) {
    double dot = 0.0;
    double energy = 0.0;
    for (std::size_t i = 0; i < overlap; i += stride) {
      const double c = x[static_cast<std::size_t>(cand) + i];
      dot += c * x[static_cast<std::size_t>(natural) + i];
      energy += c * c;
    }
    return dot / std::sqrt(energy + 1e-12);
  };

  std::ptrdiff_t prev = -1;
  for (std::size_t k = 0; k < frames; ++k) {
    const double center = static_cast<double>(k * hop) / ratio;
    const auto nominal = static_cast<std::ptrdiff_t>(std::llround(center)) + static_cast<std::ptrdiff_t>(pad) -
                         static_cast<std::ptrdiff_t>(win / 2);
    std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(nominal, 0, max_start);
    if (prev >= 0 && tol > 0) {
      const std::ptrdiff_t natural = std::min(prev + static_cast<std::ptrdiff_t>(hop), max_start);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, nominal - tol);
      const std::ptrdiff_t hi = std::min(max_start, nominal + tol);
      // Coarse search on a decimated grid, then refine around the best coarse offset.
      constexpr std::ptrdiff_t kCoarse = 4;
      double best = -1e300;
      std::ptrdiff_t best_pos = std::clamp(nominal, lo, hi);
      for (std::ptrdiff_t c = lo; c <= hi; c += kCoarse) {
        const double s = similarity(c, natural, kCoarse);
        if (s > best) best = s, best_pos = c;
      }
      const std::ptrdiff_t rlo = std::max(lo, best_pos - kCoarse + 1);
      const std::ptrdiff_t rhi = std::min(hi, best_pos + kCoarse - 1);
      best = -1e300;
      for (std::ptrdiff_t c = rlo; c <= rhi; ++c) {
        const double s = similarity(c, natural, 1);
        if (s > best) best = s, start = c;
      }
    }
    prev = start;
    const std::size_t out0 = k * hop;
    for (std::size_t i = 0; i < win; ++i) {
      y[out0 + i] += window[i] * x[static_cast<std::size_t>(start) + i];
      wsum[out0 + i] += window[i];
    }
  }

  Utterance out = u;
  out.samples.assign(target, 0.0);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + win / 2;
    out.samples[i] = wsum[j] > 1e-6 ? y[j] / wsum[j] : 0.0;
  }
  if (out.boundaries) {
    for (auto& b : *out.boundaries) {
      b.start = std::min(target, static_cast<std::size_t>(std::llround(static_cast<double>(b.start) * ratio)));
      b.end = std::min(target, static_cast<std::size_t>(std::llround(static_cast<double>(b.end) * ratio)));
    }
    if (!out.boundaries->empty() && u.boundaries->back().end == n) out.boundaries->back().end = target;
  }
  return out;
}

Utterance normalize_amplitude(const Utterance& u) {
  double peak = 0.0;
  for (double x : u.samples) peak = std::max(peak, std::abs(x));
  if (!(peak > 0.0)) throw_data("normalize_amplitude: all-zero input");
  Utterance out = u;
  for (double& x : out.samples) x /= peak;
  return out;
}

CleanUtterance clean(const Utterance& u, const PreprocessConfig& cfg) {
  corpus::validate(u);
  auto trimmed = trim_silence_detailed(u, cfg);
  const std::size_t min_noise =
      std::max(ms_to_samples(cfg.min_noise_ms, u.sample_rate), suppression_frame(u.sample_rate));
  if (cfg.noise_suppression && trimmed.leading >= min_noise) {
    const auto profile = estimate_noise_profile(std::span(u.samples).first(trimmed.leading), u.sample_rate);
    return {suppress_noise(trimmed.utterance, profile, cfg)};
  }
  return {std::move(trimmed.utterance)};
}

Utterance finish(const Utterance& cleaned, double target_ms, const PreprocessConfig& cfg) {
  return normalize_amplitude(time_scale_to(cleaned, target_ms, cfg));
}

Utterance preprocess(const Utterance& u, double target_ms, const PreprocessConfig& cfg) {
  return finish(clean(u, cfg).utterance, target_ms, cfg);
}

}  // namespace mispro::preprocess
