#include "sonomix/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sonomix/dsp.hpp"
#include "sonomix/rng.hpp"

namespace sonomix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Polyphase windowed-sinc fractional-delay interpolator. Linear interpolation
// would amplitude-modulate an 18 kHz tone by tens of percent as the delay
// sweeps, which would corrupt the simulated breathing amplitude.
struct FractionalDelayTable {
  static constexpr int kHalf = 16;
  static constexpr int kTaps = 2 * kHalf + 1;
  static constexpr int kPhases = 64;
  std::vector<double> taps;  // (kPhases + 1) x kTaps

  FractionalDelayTable() {
    taps.resize((kPhases + 1) * kTaps);
    for (int p = 0; p <= kPhases; ++p) {
      const double mu = static_cast<double>(p) / kPhases;
      double sum = 0.0;
      for (int k = -kHalf; k <= kHalf; ++k) {
        const double arg = k - mu;
        const double sinc = std::abs(arg) < 1e-12
                                ? 1.0
                                : std::sin(std::numbers::pi * arg) /
                                      (std::numbers::pi * arg);
        const double win =
            0.54 - 0.46 * std::cos(kTwoPi * (k + kHalf) / (kTaps - 1));
        taps[p * kTaps + (k + kHalf)] = sinc * win;
        sum += taps[p * kTaps + (k + kHalf)];
      }
      for (int k = 0; k < kTaps; ++k) taps[p * kTaps + k] /= sum;
    }
  }

  // x(n - delay) for fractional delay, zero outside the stream
  double sample(const std::vector<double>& x, std::int64_t n,
                double delay) const {
    const double pos = static_cast<double>(n) - delay;
    const std::int64_t i = static_cast<std::int64_t>(std::floor(pos));
    const double mu = pos - static_cast<double>(i);
    const int p = static_cast<int>(std::lround(mu * kPhases));
    const double* h = &taps[p * kTaps];
    double acc = 0.0;
    for (int k = -kHalf; k <= kHalf; ++k) {
      // value at integer index i - k contributes via sinc(k - mu + ... );
      // the interpolation identity is x(i + mu) = sum_k x[i - k] h_mu[-k],
      // realized symmetrically by indexing i + k with phase taps for k + mu
      const std::int64_t src = i + k;
      if (src < 0 || src >= static_cast<std::int64_t>(x.size())) continue;
      acc += x[src] * h[k + kHalf];
    }
    return acc;
  }
};

std::vector<double> flatten(const std::vector<RealWindow>& windows) {
  std::vector<double> stream;
  if (windows.empty()) return stream;
  stream.reserve(windows.size() * windows[0].size());
  for (const auto& w : windows) stream.insert(stream.end(), w.begin(), w.end());
  return stream;
}

double interquartile_range(std::vector<double> v) {
  if (v.size() < 4) return 0.0;
  std::sort(v.begin(), v.end());
  const auto q = [&](double frac) {
    const double pos = frac * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double t = pos - lo;
    return v[lo] * (1.0 - t) + v[std::min(lo + 1, v.size() - 1)] * t;
  };
  return q(0.75) - q(0.25);
}

// peak prominence: height above the higher of the two flanking valleys,
// scanning out to the nearest strictly higher sample on each side
double prominence_at(const std::vector<double>& s, std::size_t i) {
  double left_min = s[i], right_min = s[i];
  for (std::size_t j = i; j-- > 0;) {
    if (s[j] > s[i]) break;
    left_min = std::min(left_min, s[j]);
  }
  for (std::size_t j = i + 1; j < s.size(); ++j) {
    if (s[j] > s[i]) break;
    right_min = std::min(right_min, s[j]);
  }
  return s[i] - std::max(left_min, right_min);
}

}  // namespace

void ChannelSpec::validate(const WindowSpec& win) const {
  if (static_path_gain < 0.0 || static_path_gain > 1.0 || reflector_gain < 0.0 ||
      reflector_gain > 1.0)
    throw std::invalid_argument("ChannelSpec: gains must be in [0, 1]");
  const double max_excursion =
      2.0 * breath_amplitude_m / sound_speed * win.sample_rate;
  if (base_delay_samples < 0.0 ||
      base_delay_samples + max_excursion >= win.size)
    throw std::invalid_argument("ChannelSpec: delay must stay below the window");
  if (bpm <= 0.0) throw std::invalid_argument("ChannelSpec: bpm must be > 0");
  if (noise_level < 0.0)
    throw std::invalid_argument("ChannelSpec: noise level must be >= 0");
}

std::vector<RealWindow> simulate_channel(const std::vector<RealWindow>& tx,
                                         const ChannelSpec& spec,
                                         const WindowSpec& win,
                                         std::uint64_t seed) {
  spec.validate(win);
  static const FractionalDelayTable kDelayTable;

  const std::vector<double> stream = flatten(tx);
  Rng rng(seed);
  const double omega = kTwoPi * spec.bpm / 60.0;
  const double delay_per_meter = 2.0 / spec.sound_speed * win.sample_rate;

  std::vector<double> rx(stream.size());
  for (std::size_t n = 0; n < stream.size(); ++n) {
    const double t = static_cast<double>(n) / win.sample_rate;
    const double delay = spec.base_delay_samples +
                         spec.breath_amplitude_m * std::sin(omega * t) *
                             delay_per_meter;
    double v = spec.static_path_gain * stream[n] +
               spec.reflector_gain *
                   kDelayTable.sample(stream, static_cast<std::int64_t>(n), delay);
    if (spec.noise_level > 0.0) v += rng.normal(0.0, spec.noise_level);
    rx[n] = v;
  }

  std::vector<RealWindow> out(tx.size());
  for (std::size_t k = 0; k < tx.size(); ++k)
    out[k].assign(rx.begin() + k * win.size, rx.begin() + (k + 1) * win.size);
  return out;
}

BreathSeries breath_series(const std::vector<RealWindow>& rx, int target_bin,
                           const WindowSpec& win) {
  if (target_bin < 0 || target_bin >= win.half())
    throw std::invalid_argument("breath_series: bin outside spectrum");
  BreathSeries s;
  s.frame_rate = win.sample_rate / win.size;
  s.values.reserve(rx.size());
  for (const auto& w : rx) s.values.push_back(rfft_mag(w, win).mags[target_bin]);
  return s;
}

std::vector<std::pair<double, double>> detect_bpm(const BreathSeries& series,
                                                  const BpmDetectConfig& config) {
  const double fs = series.frame_rate;
  const double duration = static_cast<double>(series.values.size()) / fs;
  if (duration < config.window_s)
    throw std::invalid_argument("detect_bpm: series shorter than the window");

  // Reflect-pad both ends before filtering: the head pad realizes the
  // initial-30 s padding for early reports and both pads keep the band-pass
  // kernel's settling transient (~26 s at the decimated rate) away from any
  // report window. Reflection clamps to a flat hold once it runs out of
  // series, which only ever feeds the settling margin.
  const double settle_s = 30.0;
  const std::size_t n_raw = series.values.size();
  const std::size_t pad_raw =
      static_cast<std::size_t>((config.window_s + settle_s) * fs);
  std::vector<double> padded_raw;
  padded_raw.reserve(n_raw + 2 * pad_raw);
  for (std::size_t i = pad_raw; i > 0; --i)
    padded_raw.push_back(series.values[std::min(i, n_raw - 1)]);
  padded_raw.insert(padded_raw.end(), series.values.begin(), series.values.end());
  for (std::size_t i = 0; i < pad_raw; ++i)
    padded_raw.push_back(
        series.values[n_raw - 2 - std::min(i, n_raw - 2)]);

  // decimate before the narrow band-pass so the kernel stays short
  const int decim = std::max(1, static_cast<int>(fs / 6.0));
  const double fs_d = fs / decim;
  std::vector<double> low = padded_raw;
  if (decim > 1) {
    WindowSpec design{512, fs};
    FirKernel anti_alias = sinc_low_pass(0.45 * fs_d, 301, design);
    low = convolve_same(padded_raw, anti_alias.taps);
    std::vector<double> dec;
    dec.reserve(low.size() / decim + 1);
    for (std::size_t i = 0; i < low.size(); i += decim) dec.push_back(low[i]);
    low = std::move(dec);
  }

  WindowSpec design_d{512, fs_d};
  FirKernel band = sinc_band_pass(config.band_lo_bpm / 60.0,
                                  config.band_hi_bpm / 60.0, 301, design_d);
  std::vector<double> padded = convolve_same(low, band.taps);
  const std::size_t pad = pad_raw / decim;

  // prominence threshold from the real (unpadded) span, with an absolute
  // floor so a numerically flat series yields no peaks
  std::vector<double> body(padded.begin() + pad,
                           padded.end() - std::min(pad, padded.size() - pad));
  double raw_peak = 0.0;
  for (double v : series.values) raw_peak = std::max(raw_peak, std::abs(v));
  const double threshold =
      std::max(config.prominence_iqr_scale * interquartile_range(body),
               1e-9 * std::max(1.0, raw_peak));
  const int min_spacing = std::max(1, static_cast<int>(config.min_spacing_s * fs_d));

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < padded.size(); ++i) {
    if (padded[i] > padded[i - 1] && padded[i] >= padded[i + 1] &&
        prominence_at(padded, i) >= threshold)
      candidates.push_back(i);
  }
  // enforce spacing, keeping the taller peak
  std::vector<std::size_t> by_height = candidates;
  std::sort(by_height.begin(), by_height.end(),
            [&](std::size_t a, std::size_t b) { return padded[a] > padded[b]; });
  std::vector<bool> kept_mask(padded.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t i : by_height) {
    bool blocked = false;
    for (int d = -min_spacing; d <= min_spacing && !blocked; ++d) {
      const std::int64_t j = static_cast<std::int64_t>(i) + d;
      if (j >= 0 && j < static_cast<std::int64_t>(padded.size()) && kept_mask[j])
        blocked = true;
    }
    if (!blocked) {
      kept_mask[i] = true;
      kept.push_back(i);
    }
  }
  std::sort(kept.begin(), kept.end());

  // Rate from the peaks in the trailing 30 s window. The plain
  // peaks-in-window * 2 conversion quantizes BPM to even integers, which can
  // never resolve odd rates (a 15 BPM subject alternates 14/16 forever), so
  // the mean inter-peak interval is used whenever two or more peaks exist.
  std::vector<std::pair<double, double>> reports;
  const double per_minute = 60.0 / config.window_s;
  for (double t = config.interval_s; t <= duration + 1e-9;
       t += config.interval_s) {
    const std::int64_t lo =
        static_cast<std::int64_t>((t - config.window_s) * fs_d) + pad;
    const std::int64_t hi = static_cast<std::int64_t>(t * fs_d) + pad;
    std::vector<std::int64_t> in_window;
    for (std::size_t i : kept)
      if (static_cast<std::int64_t>(i) >= lo && static_cast<std::int64_t>(i) < hi)
        in_window.push_back(static_cast<std::int64_t>(i));
    double bpm;
    if (in_window.size() >= 2) {
      const double span_s =
          static_cast<double>(in_window.back() - in_window.front()) / fs_d;
      bpm = 60.0 * static_cast<double>(in_window.size() - 1) / span_s;
    } else {
      bpm = static_cast<double>(in_window.size()) * per_minute;
    }
    reports.emplace_back(t, bpm);
  }
  return reports;
}

RangeProfileMap range_profile_map(const RealWindow& tx_template,
                                  const std::vector<RealWindow>& rx) {
  RangeProfileMap map;
  map.lag_count = static_cast<int>(tx_template.size());
  if (rx.size() < 2) return map;

  std::vector<std::vector<double>> mags(rx.size());
  for (std::size_t k = 0; k < rx.size(); ++k) {
    auto prof = xcorr_profile(tx_template, rx[k]);
    mags[k].resize(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) mags[k][i] = std::abs(prof[i]);
  }
  map.rows.resize(rx.size() - 1);
  for (std::size_t k = 1; k < rx.size(); ++k) {
    map.rows[k - 1].resize(map.lag_count);
    for (int i = 0; i < map.lag_count; ++i)
      map.rows[k - 1][i] = mags[k][i] - mags[k - 1][i];
  }
  return map;
}

}  // namespace sonomix
