#include "sonomix/signal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sonomix {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void WindowSpec::validate() const {
  if (size <= 0) throw std::invalid_argument("WindowSpec: size must be > 0");
  if (size % 2 != 0) throw std::invalid_argument("WindowSpec: size must be even");
  if (sample_rate <= 0.0)
    throw std::invalid_argument("WindowSpec: sample_rate must be > 0");
}

void SensingSpec::validate(const WindowSpec& win) const {
  win.validate();
  if (amplitude <= 0.0 || amplitude > kPcmMax)
    throw std::invalid_argument("SensingSpec: amplitude must be in (0, m]");
  if (kind == Waveform::kSine) {
    if (freq_hz <= 0.0 || freq_hz >= win.nyquist())
      throw std::invalid_argument("SensingSpec: sine frequency above Nyquist");
  } else {
    if (f0_hz <= 0.0 || f0_hz >= f1_hz)
      throw std::invalid_argument("SensingSpec: chirp needs 0 < f0 < f1");
    if (f1_hz >= win.nyquist())
      throw std::invalid_argument("SensingSpec: chirp f1 above Nyquist");
  }
}

RealWindow gen_sine(const SensingSpec& spec, const WindowSpec& win,
                    std::int64_t start_index) {
  if (spec.kind != Waveform::kSine)
    throw std::invalid_argument("gen_sine: spec.kind must be Sine");
  spec.validate(win);
  RealWindow w(win.size);
  for (int n = 0; n < win.size; ++n) {
    const double t = static_cast<double>(start_index + n) / win.sample_rate;
    w[n] = spec.amplitude * std::sin(kTwoPi * spec.freq_hz * t + spec.phase);
  }
  return w;
}

RealWindow gen_chirp(const SensingSpec& spec, const WindowSpec& win) {
  if (spec.kind != Waveform::kChirp)
    throw std::invalid_argument("gen_chirp: spec.kind must be Chirp");
  spec.validate(win);
  const double duration = win.size / win.sample_rate;  // one chirp per window
  const double slope = (spec.f1_hz - spec.f0_hz) / (2.0 * duration);
  RealWindow w(win.size);
  for (int n = 0; n < win.size; ++n) {
    const double t = n / win.sample_rate;
    w[n] = spec.amplitude * std::sin(kTwoPi * (spec.f0_hz * t + slope * t * t));
  }
  return w;
}

RealWindow sensing_window(const SensingSpec& spec, const WindowSpec& win,
                          std::int64_t window_index) {
  if (spec.kind == Waveform::kSine)
    return gen_sine(spec, win, window_index * win.size);
  return gen_chirp(spec, win);
}

double round_half_away(double v) {
  return std::round(v);  // std::round ties away from zero
}

std::int16_t quantize_sample(double v) {
  double r = round_half_away(v);
  if (r > kPcmMax) r = kPcmMax;
  if (r < -kPcmMax) r = -kPcmMax;
  return static_cast<std::int16_t>(r);
}

PcmWindow quantize(const RealWindow& w) {
  PcmWindow p(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]))
      throw std::invalid_argument("quantize: non-finite sample");
    p[i] = quantize_sample(w[i]);
  }
  return p;
}

RealWindow dequantize(const PcmWindow& p) {
  RealWindow w(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) w[i] = static_cast<double>(p[i]);
  return w;
}

std::vector<Frame> frame_stream(const std::vector<double>& stream,
                                const WindowSpec& win) {
  win.validate();
  if (stream.empty()) throw std::invalid_argument("frame_stream: empty stream");
  const std::size_t size = static_cast<std::size_t>(win.size);
  const std::size_t count = (stream.size() + size - 1) / size;
  std::vector<Frame> frames(count);
  for (std::size_t k = 0; k < count; ++k) {
    Frame& f = frames[k];
    f.samples.assign(size, 0.0);
    const std::size_t begin = k * size;
    const std::size_t avail = std::min(size, stream.size() - begin);
    for (std::size_t i = 0; i < avail; ++i) f.samples[i] = stream[begin + i];
    f.padded = avail < size;
  }
  return frames;
}

std::pair<RealWindow, RealWindow> apply_volume_ratio(const RealWindow& x,
                                                     const RealWindow& z,
                                                     double rs, double rz) {
  if (rs < 0.0 || rz < 0.0)
    throw std::invalid_argument("apply_volume_ratio: ratios must be >= 0");
  RealWindow xs(x.size()), zs(z.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = rs * x[i];
  for (std::size_t i = 0; i < z.size(); ++i) zs[i] = rz * z[i];
  return {std::move(xs), std::move(zs)};
}

}  // namespace sonomix
