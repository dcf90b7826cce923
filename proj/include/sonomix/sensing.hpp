#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sonomix/signal.hpp"

namespace sonomix {

// Two-path acoustic channel: a static leak plus one breathing reflector.
// The reflector delay follows d(t) = d0 + A_b*sin(2*pi*(BPM/60)*t) mapped to
// samples via 2*d/c * fs; base_delay_samples encodes 2*d0/c * fs directly.
// The default base delay sits the static phase in quadrature at 18 kHz so the
// bin-amplitude response to displacement is maximally linear.
struct ChannelSpec {
  double static_path_gain = 0.6;
  double reflector_gain = 0.3;
  double base_delay_samples = 112.667;  // ~40 cm round trip at 48 kHz
  double breath_amplitude_m = 0.001;    // chest displacement amplitude
  double bpm = 15.0;
  double noise_level = 10.0;  // additive white noise stddev, PCM units
  double sound_speed = 343.0;

  void validate(const WindowSpec& win) const;
};

std::vector<RealWindow> simulate_channel(const std::vector<RealWindow>& tx,
                                         const ChannelSpec& spec,
                                         const WindowSpec& win,
                                         std::uint64_t seed);

// Per-window normalized magnitude at the sensing bin; frame rate is
// sample_rate / window size (93.75 Hz at the defaults).
struct BreathSeries {
  std::vector<double> values;
  double frame_rate = 0.0;
};

BreathSeries breath_series(const std::vector<RealWindow>& rx, int target_bin,
                           const WindowSpec& win);

struct BpmDetectConfig {
  double window_s = 30.0;
  double interval_s = 10.0;
  double band_lo_bpm = 8.0;
  double band_hi_bpm = 22.0;
  double prominence_iqr_scale = 0.2;
  double min_spacing_s = 60.0 / 22.0;
};

// Band-passes the series to the breathing band, counts peak prominences per
// sliding 30 s window every 10 s, and reports BPM = peaks * 2. The initial
// 30 s is reflect-padded. Requires at least 30 s of series.
std::vector<std::pair<double, double>> detect_bpm(
    const BreathSeries& series, const BpmDetectConfig& config = {});

// chirp index x lag map of |xcorr| rows after frame differencing
struct RangeProfileMap {
  std::vector<std::vector<double>> rows;  // rows.size() = windows - 1
  int lag_count = 0;
};

RangeProfileMap range_profile_map(const RealWindow& tx_template,
                                  const std::vector<RealWindow>& rx);

}  // namespace sonomix
