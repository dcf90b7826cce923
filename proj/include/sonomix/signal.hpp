#pragma once

#include <cstdint>
#include <vector>

namespace sonomix {

// Symmetric full-scale PCM amplitude. Signed 16-bit streams are treated as
// [-kPcmMax, kPcmMax]; the -2^15 code is never emitted.
inline constexpr int kPcmMax = 32767;

using RealWindow = std::vector<double>;
using PcmWindow = std::vector<std::int16_t>;

struct WindowSpec {
  int size = 512;
  double sample_rate = 48000.0;

  int half() const { return size / 2; }  // one-sided spectrum length N
  double bin_hz() const { return sample_rate / size; }
  double nyquist() const { return sample_rate / 2.0; }
  void validate() const;  // throws std::invalid_argument
};

enum class Waveform { kSine, kChirp };

// Transmitted sensing waveform parameters. For chirps the sweep duration is
// one window (size / sample_rate), restarting every window.
struct SensingSpec {
  Waveform kind = Waveform::kSine;
  double freq_hz = 18000.0;  // sine
  double f0_hz = 18000.0;    // chirp band start
  double f1_hz = 20000.0;    // chirp band end
  double amplitude = kPcmMax;
  double phase = 0.0;

  void validate(const WindowSpec& win) const;
};

// Phase-continuous sine: sample n is A*sin(2*pi*f*(start_index + n)/fs + phi).
RealWindow gen_sine(const SensingSpec& spec, const WindowSpec& win,
                    std::int64_t start_index);

// One linear chirp per window, phase restarting at 0:
// A*sin(2*pi*(f0*t + (f1 - f0)/(2*T)*t^2)), T = size/fs.
RealWindow gen_chirp(const SensingSpec& spec, const WindowSpec& win);

// Sensing window for a given window index in a stream: sines stay
// phase-continuous across windows, chirps restart.
RealWindow sensing_window(const SensingSpec& spec, const WindowSpec& win,
                          std::int64_t window_index);

double round_half_away(double v);
std::int16_t quantize_sample(double v);  // round-half-away-from-zero, clamp to [-m, m]

PcmWindow quantize(const RealWindow& w);
RealWindow dequantize(const PcmWindow& p);

struct Frame {
  RealWindow samples;
  bool padded = false;  // final partial window, zero-filled tail
};

// Non-overlapping consecutive windows; a trailing partial window is
// zero-padded and flagged. Empty streams are rejected.
std::vector<Frame> frame_stream(const std::vector<double>& stream,
                                const WindowSpec& win);

// Returns (rs*x, rz*z); rs:rz is the sensing:music volume ratio.
std::pair<RealWindow, RealWindow> apply_volume_ratio(const RealWindow& x,
                                                     const RealWindow& z,
                                                     double rs, double rz);

}  // namespace sonomix
