#pragma once

#include <complex>
#include <vector>

#include "sonomix/signal.hpp"

namespace sonomix {

// One-sided normalized magnitude spectrum. Magnitudes are |X_k| / (N * ref)
// with N = size/2, so a full-scale bin-centered sine has exactly one entry
// equal to 1. Bins k = 0 .. N-1.
struct Spectrum {
  std::vector<double> mags;
  double bin_hz = 0.0;
};

// Linear-phase windowed-sinc FIR kernel, unit DC gain for low-pass designs.
struct FirKernel {
  std::vector<double> taps;  // odd length, symmetric
  double lo_hz = 0.0;        // 0 for pure low-pass
  double hi_hz = 0.0;
};

// In-place radix-2 complex FFT (inverse applies conjugate twiddles and 1/L).
// Length must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& buf, bool inverse = false);

// Unnormalized complex DFT of a real window (power-of-two length).
std::vector<std::complex<double>> fft_of_real(const RealWindow& w);

Spectrum rfft_mag(const RealWindow& w, const WindowSpec& win,
                  double amplitude_ref = kPcmMax);

// Windowed-sinc (Hamming) low-pass, normalized to unit DC gain.
FirKernel sinc_low_pass(double cutoff_hz, int taps, const WindowSpec& win);

// Band-pass as low_pass(hi) - low_pass(lo), tap-wise.
FirKernel sinc_band_pass(double lo_hz, double hi_hz, int taps,
                         const WindowSpec& win);

// Kernel frequency response magnitude |H(f)| evaluated directly.
double fir_response_at(const FirKernel& k, double freq_hz, double sample_rate);

// Same-length zero-padded convolution with the (taps-1)/2 group delay
// compensated. Accepts arbitrary signal lengths; apply_fir adds the
// kernel-shorter-than-window check for windowed use.
std::vector<double> convolve_same(const std::vector<double>& x,
                                  const std::vector<double>& taps);

RealWindow apply_fir(const RealWindow& w, const FirKernel& k);

// Circular cross-correlation via the frequency domain:
// profile[k] = sum_n template[n] * received[(n + k) mod L].
std::vector<double> xcorr_profile(const RealWindow& tmpl,
                                  const RealWindow& received);

// Spectrum of (1 + mod_index*cos(2*pi*fm*t)) * m*cos(2*pi*fc*t): carrier at
// fc plus sidebands at fc +- fm with magnitude mod_index/2 of the carrier.
Spectrum am_sidebands(double fc_hz, double fm_hz, double mod_index,
                      const WindowSpec& win);

}  // namespace sonomix
