#include "sonomix/dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sonomix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& buf, bool inverse) {
  const std::size_t n = buf.size();
  if (!is_power_of_two(n))
    throw std::invalid_argument("fft_radix2: length must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // fresh twiddle per butterfly; avoids recurrence error accumulation
        const double ang = sign * kTwoPi * static_cast<double>(k) /
                           static_cast<double>(len);
        const std::complex<double> w(std::cos(ang), std::sin(ang));
        const std::complex<double> u = buf[i + k];
        const std::complex<double> v = buf[i + k + half] * w;
        buf[i + k] = u + v;
        buf[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& c : buf) c *= inv;
  }
}

std::vector<std::complex<double>> fft_of_real(const RealWindow& w) {
  std::vector<std::complex<double>> buf(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) buf[i] = {w[i], 0.0};
  fft_radix2(buf, false);
  return buf;
}

Spectrum rfft_mag(const RealWindow& w, const WindowSpec& win,
                  double amplitude_ref) {
  win.validate();
  if (static_cast<int>(w.size()) != win.size)
    throw std::invalid_argument("rfft_mag: window length != spec size");
  if (!is_power_of_two(w.size()))
    throw std::invalid_argument("rfft_mag: size must be a power of two");
  if (amplitude_ref <= 0.0)
    throw std::invalid_argument("rfft_mag: amplitude_ref must be > 0");

  auto buf = fft_of_real(w);
  const int half = win.half();
  const double norm = 1.0 / (static_cast<double>(half) * amplitude_ref);
  Spectrum s;
  s.bin_hz = win.bin_hz();
  s.mags.resize(half);
  for (int k = 0; k < half; ++k) s.mags[k] = std::abs(buf[k]) * norm;
  return s;
}

FirKernel sinc_low_pass(double cutoff_hz, int taps, const WindowSpec& win) {
  win.validate();
  if (taps < 1 || taps % 2 == 0)
    throw std::invalid_argument("sinc_low_pass: tap count must be odd");
  if (cutoff_hz <= 0.0 || cutoff_hz >= win.nyquist())
    throw std::invalid_argument("sinc_low_pass: cutoff outside (0, Nyquist)");

  const double bw = cutoff_hz / win.sample_rate;  // normalized cutoff B
  const int center = (taps - 1) / 2;
  FirKernel k;
  k.hi_hz = cutoff_hz;
  k.taps.resize(taps);
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double t = n - center;
    const double hamming =
        0.54 - 0.46 * std::cos(kTwoPi * n / static_cast<double>(taps - 1));
    k.taps[n] = 2.0 * bw * sinc(2.0 * bw * t) * hamming;
    sum += k.taps[n];
  }
  for (double& v : k.taps) v /= sum;  // unit DC gain
  return k;
}

FirKernel sinc_band_pass(double lo_hz, double hi_hz, int taps,
                         const WindowSpec& win) {
  if (lo_hz >= hi_hz)
    throw std::invalid_argument("sinc_band_pass: lo must be < hi");
  FirKernel hi = sinc_low_pass(hi_hz, taps, win);
  FirKernel lo = sinc_low_pass(lo_hz, taps, win);
  FirKernel k;
  k.lo_hz = lo_hz;
  k.hi_hz = hi_hz;
  k.taps.resize(taps);
  for (int n = 0; n < taps; ++n) k.taps[n] = hi.taps[n] - lo.taps[n];
  return k;
}

double fir_response_at(const FirKernel& k, double freq_hz,
                       double sample_rate) {
  std::complex<double> h(0.0, 0.0);
  for (std::size_t n = 0; n < k.taps.size(); ++n) {
    const double ang = -kTwoPi * freq_hz * static_cast<double>(n) / sample_rate;
    h += k.taps[n] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return std::abs(h);
}

std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& taps) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(taps.size());
  const int delay = (m - 1) / 2;
  std::vector<double> y(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    // y[t] = sum_j taps[j] * x[t - j + delay], zero-padded
    const int j_lo = std::max(0, t + delay - (n - 1));
    const int j_hi = std::min(m - 1, t + delay);
    for (int j = j_lo; j <= j_hi; ++j) acc += taps[j] * x[t - j + delay];
    y[t] = acc;
  }
  return y;
}

RealWindow apply_fir(const RealWindow& w, const FirKernel& k) {
  if (k.taps.size() >= w.size())
    throw std::invalid_argument("apply_fir: kernel must be shorter than window");
  return convolve_same(w, k.taps);
}

std::vector<double> xcorr_profile(const RealWindow& tmpl,
                                  const RealWindow& received) {
  if (tmpl.size() != received.size())
    throw std::invalid_argument("xcorr_profile: length mismatch");
  const std::size_t n = tmpl.size();
  auto ft = fft_of_real(tmpl);
  auto fr = fft_of_real(received);
  std::vector<std::complex<double>> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = std::conj(ft[i]) * fr[i];
  fft_radix2(prod, true);
  std::vector<double> profile(n);
  for (std::size_t i = 0; i < n; ++i) profile[i] = prod[i].real();
  return profile;
}

Spectrum am_sidebands(double fc_hz, double fm_hz, double mod_index,
                      const WindowSpec& win) {
  win.validate();
  if (fc_hz + fm_hz >= win.nyquist() || fc_hz - fm_hz <= 0.0)
    throw std::invalid_argument("am_sidebands: fc +- fm outside (0, Nyquist)");
  RealWindow w(win.size);
  const double carrier_amp = kPcmMax;
  for (int n = 0; n < win.size; ++n) {
    const double t = n / win.sample_rate;
    w[n] = (1.0 + mod_index * std::cos(kTwoPi * fm_hz * t)) * carrier_amp *
           std::cos(kTwoPi * fc_hz * t);
  }
  return rfft_mag(w, win, carrier_amp);
}

}  // namespace sonomix
