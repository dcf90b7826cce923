#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonomix/signal.hpp"

namespace sonomix {

// Mono audio at PCM scale (values in [-m, m] for writable buffers).
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = 48000.0;
  int source_bits = 16;
};

// Strict RIFF/WAVE PCM reader: mono, 8- or 16-bit, format code 1 only.
// 8-bit unsigned input maps to signed 16-bit as (v - 128) * 256.
AudioBuffer read_wav(const std::string& path);

// 16-bit little-endian PCM mono; written atomically (temp + rename).
void write_wav(const std::string& path, const AudioBuffer& buffer);

// Linear interpolation onto a uniform grid at target_hz.
AudioBuffer resample_linear(const AudioBuffer& buffer, double target_hz);

enum class MusicKind { kLowTones, kToneCluster, kNoiseBand, kSpeechLike };

MusicKind music_kind_from_name(const std::string& name);
std::string music_kind_name(MusicKind kind);

// Deterministic synthetic "music" at 48 kHz with spectral content kept well
// below the sensing band and peak level 0.65 * m.
AudioBuffer synth_music(MusicKind kind, double duration_s, std::uint64_t seed);

}  // namespace sonomix
