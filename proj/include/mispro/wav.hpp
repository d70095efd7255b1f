#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mispro::wav {

struct WavData {
  std::vector<double> samples;  // interleaved when channels > 1, scaled to [-1, 1)
  int sample_rate = 0;
  int channels = 0;
};

/// Parses a RIFF/WAVE image holding 16-bit integer PCM. Samples are scaled by 1/32768.
WavData decode(std::span<const std::uint8_t> bytes);
WavData read(const std::filesystem::path& path);

/// Encodes mono 16-bit PCM. Values are clamped to [-1, 1] and rounded.
std::vector<std::uint8_t> encode_pcm16(std::span<const double> samples, int sample_rate);
void write_pcm16(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

}  // namespace mispro::wav
