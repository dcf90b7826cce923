#include "sonomix/sensing.hpp"

#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "sonomix/dsp.hpp"
#include "sonomix/loss.hpp"
#include "sonomix/rng.hpp"

using namespace sonomix;

TEST_SUITE_BEGIN("sensing");

namespace {

const WindowSpec kWin{};

SensingSpec sine_spec() {
  SensingSpec s;
  s.kind = Waveform::kSine;
  return s;
}

SensingSpec chirp_spec() {
  SensingSpec s;
  s.kind = Waveform::kChirp;
  return s;
}

std::vector<RealWindow> sine_stream(int windows) {
  std::vector<RealWindow> tx(windows);
  for (int k = 0; k < windows; ++k) tx[k] = sensing_window(sine_spec(), kWin, k);
  return tx;
}

ChannelSpec quiet_channel(double bpm) {
  ChannelSpec c;
  c.bpm = bpm;
  c.noise_level = 0.0;
  return c;
}

}  // namespace

TEST_CASE("channel with no reflector is a scaled copy") {
  auto tx = sine_stream(4);
  ChannelSpec spec = quiet_channel(15.0);
  spec.reflector_gain = 0.0;
  auto rx = simulate_channel(tx, spec, kWin, 1);
  REQUIRE(rx.size() == tx.size());
  for (std::size_t k = 0; k < tx.size(); ++k)
    for (int i = 0; i < kWin.size; ++i)
      CHECK(rx[k][i] == doctest::Approx(0.6 * tx[k][i]).epsilon(1e-12));
}

TEST_CASE("static reflector gives a constant bin series") {
  auto tx = sine_stream(64);
  ChannelSpec spec = quiet_channel(15.0);
  spec.breath_amplitude_m = 0.0;
  auto rx = simulate_channel(tx, spec, kWin, 1);
  auto series = breath_series(rx, 192, kWin);
  // skip the first window (stream-start transient of the delayed path)
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 1; i < series.values.size(); ++i) {
    lo = std::min(lo, series.values[i]);
    hi = std::max(hi, series.values[i]);
  }
  CHECK(hi - lo < 1e-6);
}

TEST_CASE("breathing modulates the bin series at the breath rate") {
  const double bpm = 15.0;  // 0.25 Hz
  auto tx = sine_stream(4096);
  auto rx = simulate_channel(tx, quiet_channel(bpm), kWin, 2);
  auto series = breath_series(rx, 192, kWin);
  REQUIRE(series.values.size() == 4096);

  // remove the mean, then locate the dominant series-FFT bin
  double mean = std::accumulate(series.values.begin(), series.values.end(), 0.0) /
                series.values.size();
  RealWindow centered(series.values.size());
  for (std::size_t i = 0; i < centered.size(); ++i)
    centered[i] = series.values[i] - mean;
  auto spec = fft_of_real(centered);
  std::size_t peak = 1;
  for (std::size_t k = 1; k < centered.size() / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;

  const double bin_hz = series.frame_rate / centered.size();
  const double expected_bin = (bpm / 60.0) / bin_hz;
  CHECK(std::abs(static_cast<double>(peak) - expected_bin) <= 1.0);
}

TEST_CASE("channel rejects out-of-range parameters") {
  auto tx = sine_stream(2);
  ChannelSpec bad = quiet_channel(15.0);
  bad.base_delay_samples = 600.0;
  CHECK_THROWS_AS(simulate_channel(tx, bad, kWin, 1), std::invalid_argument);
  bad = quiet_channel(15.0);
  bad.static_path_gain = 1.5;
  CHECK_THROWS_AS(simulate_channel(tx, bad, kWin, 1), std::invalid_argument);
}

TEST_CASE("breath_series basics") {
  std::vector<RealWindow> silence(3, RealWindow(kWin.size, 0.0));
  auto s = breath_series(silence, 192, kWin);
  CHECK(s.frame_rate == doctest::Approx(93.75));
  for (double v : s.values) CHECK(v == 0.0);

  // unmodulated full-scale sine straight into the receiver
  auto tx = sine_stream(8);
  auto direct = breath_series(tx, 192, kWin);
  for (double v : direct.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(breath_series(tx, 300, kWin), std::invalid_argument);
}

TEST_CASE("detect_bpm recovers synthetic rates") {
  for (double bpm : {12.0, 18.0}) {
    const int windows = static_cast<int>(90.0 * 93.75);
    auto tx = sine_stream(windows);
    ChannelSpec spec = quiet_channel(bpm);
    spec.noise_level = 5.0;
    auto rx = simulate_channel(tx, spec, kWin, 7);
    auto series = breath_series(rx, 192, kWin);
    auto reports = detect_bpm(series);
    REQUIRE(!reports.empty());
    double mae = 0.0;
    for (auto& [t, value] : reports) mae += std::abs(value - bpm);
    mae /= reports.size();
    INFO("bpm ", bpm, " mae ", mae);
    CHECK(mae < 1.0);
  }
}

TEST_CASE("detect_bpm on a constant series reports zero") {
  BreathSeries s;
  s.frame_rate = 93.75;
  s.values.assign(static_cast<std::size_t>(40.0 * 93.75), 0.7);
  for (auto& [t, bpm] : detect_bpm(s)) CHECK(bpm == 0.0);
}

TEST_CASE("detect_bpm rejects short series") {
  BreathSeries s;
  s.frame_rate = 93.75;
  s.values.assign(100, 0.0);
  CHECK_THROWS_AS(detect_bpm(s), std::invalid_argument);
}

TEST_CASE("band-pass step rejects slow drift by 20 dB") {
  const double fs = 93.75;
  const std::size_t n = static_cast<std::size_t>(120.0 * fs);
  auto tone_series = [&](double per_minute) {
    BreathSeries s;
    s.frame_rate = fs;
    s.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      s.values[i] =
          std::sin(2.0 * std::numbers::pi * (per_minute / 60.0) * i / fs);
    return s;
  };

  // measure through the same decimate + band-pass chain by comparing peak
  // detection inputs: reuse detect internals via a tiny probe around rms
  auto rms_after_bandpass = [&](double per_minute) {
    BreathSeries s = tone_series(per_minute);
    // replicate the filter chain: decimate by 15, band-pass 301 taps
    const int decim = static_cast<int>(fs / 6.0);
    WindowSpec design{512, fs};
    FirKernel aa = sinc_low_pass(0.45 * fs / decim, 301, design);
    auto low = convolve_same(s.values, aa.taps);
    std::vector<double> dec;
    for (std::size_t i = 0; i < low.size(); i += decim) dec.push_back(low[i]);
    WindowSpec design_d{512, fs / decim};
    FirKernel band = sinc_band_pass(8.0 / 60.0, 22.0 / 60.0, 301, design_d);
    auto filtered = convolve_same(dec, band.taps);
    double sq = 0.0;
    // interior region, away from edge transients
    const std::size_t margin = filtered.size() / 4;
    for (std::size_t i = margin; i < filtered.size() - margin; ++i)
      sq += filtered[i] * filtered[i];
    return std::sqrt(sq / (filtered.size() - 2 * margin));
  };

  const double in_band = rms_after_bandpass(18.0);
  const double drift = rms_after_bandpass(2.0);
  CHECK(in_band > 0.5 / std::sqrt(2.0));  // breathing band passes
  CHECK(drift < 0.1 * in_band);           // >= 20 dB down
}

TEST_CASE("range profile map cancels static channels") {
  auto tmpl = gen_chirp(chirp_spec(), kWin);
  std::vector<RealWindow> rx(6);
  for (auto& w : rx) {
    w = tmpl;
    for (auto& v : w) v *= 0.5;
  }
  auto map = range_profile_map(tmpl, rx);
  REQUIRE(map.rows.size() == 5);
  for (const auto& row : map.rows)
    for (double v : row) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("range profile tracks a stepping reflector") {
  // the 18-20 kHz chirp resolves fs/bandwidth = 24 samples, so the reflector
  // steps one resolution cell (32 samples) per window
  auto tmpl = gen_chirp(chirp_spec(), kWin);
  const int step = 32;
  std::vector<RealWindow> rx;
  for (int k = 0; k < 6; ++k) {
    RealWindow w(kWin.size);
    auto moved = oracle::roll(tmpl, 40 + k * step);
    for (int i = 0; i < kWin.size; ++i) w[i] = 0.5 * tmpl[i] + 0.3 * moved[i];
    rx.push_back(w);
  }
  auto map = range_profile_map(tmpl, rx);
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    // strongest positive differenced lag is the new reflector position
    std::size_t best = 0;
    for (std::size_t i = 1; i < map.rows[r].size(); ++i)
      if (map.rows[r][i] > map.rows[r][best]) best = i;
    const int expected = 40 + static_cast<int>(r + 1) * step;
    if (r == 0) {
      // first row still overlaps the static residue at the start lag
      CHECK(std::abs(static_cast<int>(best) - expected) <= 8);
    } else {
      CHECK(best == static_cast<std::size_t>(expected));
    }
  }
}

TEST_CASE("rolling rx shifts each row's peak") {
  auto tmpl = gen_chirp(chirp_spec(), kWin);
  Rng rng(31);
  std::vector<RealWindow> rx;
  RealWindow noise_tail(kWin.size);
  for (auto& v : noise_tail) v = 200.0 * rng.normal();
  rx.push_back(noise_tail);  // differenced away
  rx.push_back(tmpl);

  for (int k : {3, 100, 401}) {
    std::vector<RealWindow> rolled = {RealWindow(kWin.size, 0.0),
                                      oracle::roll(tmpl, k)};
    auto map = range_profile_map(tmpl, rolled);
    REQUIRE(map.rows.size() == 1);
    CHECK(oracle::argmax(map.rows[0]) == static_cast<std::size_t>(k));
  }
}

TEST_SUITE_END();
