#include "sonomix/mixer.hpp"

#include <cmath>
#include <stdexcept>

#include "sonomix/dsp.hpp"

namespace sonomix {

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "clip") return StrategyKind::kClip;
  if (name == "down2") return StrategyKind::kDownscale2;
  if (name == "down4") return StrategyKind::kDownscale4;
  if (name == "cognitive") return StrategyKind::kCognitive;
  throw std::invalid_argument("unknown mixer strategy: " + name);
}

std::string strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kClip: return "clip";
    case StrategyKind::kDownscale2: return "down2";
    case StrategyKind::kDownscale4: return "down4";
    case StrategyKind::kCognitive: return "cognitive";
  }
  return "?";
}

namespace {

double target_level(const Spectrum& s, const TargetBins& bins) {
  double sq = 0.0;
  for (int b : bins.bins) sq += s.mags[b] * s.mags[b];
  return std::sqrt(sq);
}

}  // namespace

MixResult mix(const RealWindow& x, const RealWindow& z,
              const MixerStrategy& strategy, const SensingSpec& spec,
              const WindowSpec& win) {
  if (x.size() != z.size() || static_cast<int>(x.size()) != win.size)
    throw std::invalid_argument("mix: window spec mismatch");

  MixResult r;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] + z[i]) > kPcmMax) {
      r.overloaded = true;
      break;
    }

  RealWindow sum(x.size());
  switch (strategy.kind) {
    case StrategyKind::kClip:
      for (std::size_t i = 0; i < x.size(); ++i) sum[i] = x[i] + z[i];
      break;
    case StrategyKind::kDownscale2:
      for (std::size_t i = 0; i < x.size(); ++i) sum[i] = 0.5 * x[i] + 0.5 * z[i];
      break;
    case StrategyKind::kDownscale4:
      if (strategy.downscale4_uniform) {
        for (std::size_t i = 0; i < x.size(); ++i)
          sum[i] = 0.25 * (x[i] + z[i]);
      } else {
        for (std::size_t i = 0; i < x.size(); ++i)
          sum[i] = 0.25 * x[i] + 0.75 * z[i];
      }
      break;
    case StrategyKind::kCognitive: {
      if (strategy.params == nullptr)
        throw std::invalid_argument("mix: cognitive strategy needs model params");
      const ForwardResult fwd = forward(x, z, *strategy.params);
      for (std::size_t i = 0; i < x.size(); ++i) sum[i] = fwd.xhat[i] + z[i];
      break;
    }
  }
  r.mixed = quantize(sum);  // clamp is the defined clip behavior

  for (std::int16_t v : r.mixed)
    r.peak_level = std::max(r.peak_level, std::abs(static_cast<double>(v)));

  const TargetBins bins = target_bins_for(spec, win);
  const double ref = target_level(rfft_mag(x, win), bins);
  const double got = target_level(rfft_mag(dequantize(r.mixed), win), bins);
  r.sensing_attenuation_db =
      (ref > 1e-12 && got > 1e-12) ? 20.0 * std::log10(got / ref) : 0.0;
  return r;
}

double overload_fraction(const RealWindow& x, const RealWindow& z) {
  if (x.size() != z.size())
    throw std::invalid_argument("overload_fraction: length mismatch");
  if (x.empty()) return 0.0;
  int count = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] + z[i]) > kPcmMax) ++count;
  return static_cast<double>(count) / static_cast<double>(x.size());
}

double distortion_energy(const PcmWindow& mixed, const RealWindow& clean,
                         const TargetBins& bins, const WindowSpec& win) {
  const Spectrum sm = rfft_mag(dequantize(mixed), win);
  const Spectrum sc = rfft_mag(clean, win);
  double energy = 0.0;
  for (int i = 0; i < win.half(); ++i) {
    if (bins.contains(i)) continue;
    const double d = sm.mags[i] - sc.mags[i];
    energy += d * d;
  }
  return energy;
}

}  // namespace sonomix
