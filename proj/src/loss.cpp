#include "sonomix/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sonomix {

bool TargetBins::contains(int bin) const {
  return std::binary_search(bins.begin(), bins.end(), bin);
}

std::vector<int> TargetBins::complement(int spectrum_len) const {
  std::vector<int> out;
  out.reserve(spectrum_len - bins.size());
  for (int i = 0; i < spectrum_len; ++i)
    if (!contains(i)) out.push_back(i);
  return out;
}

TargetBins target_bins_for(const SensingSpec& spec, const WindowSpec& win) {
  spec.validate(win);
  TargetBins t;
  if (spec.kind == Waveform::kSine) {
    const double exact = spec.freq_hz / win.bin_hz();
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9)
      throw std::invalid_argument(
          "target_bins_for: sine frequency is not bin-centered; pick f as a "
          "multiple of sample_rate/size");
    t.bins = {static_cast<int>(rounded)};
  } else {
    const int lo = static_cast<int>(std::ceil(spec.f0_hz / win.bin_hz() - 1e-9));
    const int hi = static_cast<int>(std::floor(spec.f1_hz / win.bin_hz() + 1e-9));
    for (int b = lo; b <= hi; ++b) t.bins.push_back(b);
    if (t.bins.empty())
      throw std::invalid_argument("target_bins_for: no bins inside chirp band");
  }
  for (int b : t.bins) {
    if (b < 0 || b >= win.half())
      throw std::invalid_argument("target_bins_for: bin outside spectrum");
  }
  return t;
}

std::pair<double, double> p_loss(const Spectrum& x, const Spectrum& xhat,
                                 const TargetBins& bins, RecoveryMode mode) {
  if (x.mags.size() != xhat.mags.size())
    throw std::invalid_argument("p_loss: spectrum length mismatch");
  const int n = static_cast<int>(x.mags.size());

  double target_sq = 0.0;
  for (int b : bins.bins) target_sq += xhat.mags[b] * xhat.mags[b];
  const double target = 1.0 - std::sqrt(target_sq);

  double recovery = 0.0;
  if (mode == RecoveryMode::kPerBinAbs) {
    for (int i = 0; i < n; ++i) {
      if (bins.contains(i)) continue;
      recovery += std::abs(x.mags[i] - xhat.mags[i]);
    }
  } else {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      if (bins.contains(i)) continue;
      const double d = x.mags[i] - xhat.mags[i];
      sq += d * d;
    }
    recovery = std::sqrt(sq);
  }
  recovery /= static_cast<double>(n - 1);
  return {target, recovery};
}

double q_loss(const RealWindow& mixed) {
  const double size = static_cast<double>(mixed.size());
  double sq = 0.0;
  for (double v : mixed) {
    if (std::abs(v) > kPcmMax + 1e-9)
      throw std::invalid_argument(
          "q_loss: sample outside [-m, m]; link function violated");
    const double u = v / kPcmMax;
    sq += u * u;
  }
  return 1.0 - std::sqrt(sq) / size;
}

double s_loss(const Spectrum& xhat, const TargetBins& bins) {
  const int n = bins.count();
  if (n < 2)
    throw std::invalid_argument("s_loss: needs >= 2 target bins (chirp only)");
  double mean = 0.0;
  for (int b : bins.bins) mean += xhat.mags[b];
  mean /= n;
  double sq = 0.0;
  for (int b : bins.bins) {
    const double d = xhat.mags[b] - mean;
    sq += d * d;
  }
  return std::sqrt(sq / (n - 1));
}

LossBreakdown total_loss(const RealWindow& x, const RealWindow& xhat,
                         const RealWindow& z, const SensingSpec& spec,
                         const WindowSpec& win, const LossWeights& weights) {
  const TargetBins bins = target_bins_for(spec, win);
  const Spectrum cx = rfft_mag(x, win);
  const Spectrum cxhat = rfft_mag(xhat, win);

  RealWindow mixed(xhat.size());
  for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = xhat[i] + z[i];

  LossBreakdown out;
  auto [target, recovery] = p_loss(cx, cxhat, bins, weights.recovery_mode);
  out.target = target;
  out.recovery = recovery;
  out.amplitude = q_loss(mixed);
  out.variance = spec.kind == Waveform::kChirp ? s_loss(cxhat, bins) : 0.0;

  out.total = weights.alpha * (out.target + weights.recovery_scale * out.recovery) +
              weights.beta * out.amplitude;
  if (spec.kind == Waveform::kChirp) out.total += weights.gamma * out.variance;
  return out;
}

}  // namespace sonomix
