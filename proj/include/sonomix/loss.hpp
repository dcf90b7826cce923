#pragma once

#include <vector>

#include "sonomix/dsp.hpp"
#include "sonomix/signal.hpp"

namespace sonomix {

// FFT bin indices carrying the sensing signal: one bin for a sine, a
// contiguous range for a chirp.
struct TargetBins {
  std::vector<int> bins;  // sorted, unique

  int count() const { return static_cast<int>(bins.size()); }
  bool contains(int bin) const;
  std::vector<int> complement(int spectrum_len) const;
};

enum class RecoveryMode {
  kPerBinAbs,  // (1/(N-1)) * sum over non-target bins of |c_i - chat_i|
  kVectorL2,   // (1/(N-1)) * l2 norm of the non-target difference vector
};

struct LossWeights {
  double alpha = 1.0;  // frequency terms (target + recovery)
  double beta = 1.0;   // amplitude term
  double gamma = 1.0;  // variance term (chirp only)
  // Extra knob for the recovery-weight sweep; 1.0 keeps the canonical
  // total = alpha*(target+recovery) + beta*q + gamma*s.
  double recovery_scale = 1.0;
  RecoveryMode recovery_mode = RecoveryMode::kPerBinAbs;
};

struct LossBreakdown {
  double target = 0.0;
  double recovery = 0.0;
  double amplitude = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

// Sine -> { round(f*size/fs) }, which must be bin-centered; chirp -> every
// bin whose center lies in [f0, f1].
TargetBins target_bins_for(const SensingSpec& spec, const WindowSpec& win);

// Frequency-domain loss pair (target, recovery) over normalized magnitudes.
std::pair<double, double> p_loss(const Spectrum& x, const Spectrum& xhat,
                                 const TargetBins& bins,
                                 RecoveryMode mode = RecoveryMode::kPerBinAbs);

// Amplitude loss: 1 - (1/size) * l2(mixed/m). Floor is 1 - 1/sqrt(size),
// reached exactly when every sample is +-m.
double q_loss(const RealWindow& mixed);

// Sample standard deviation of the target-bin magnitudes (chirp only).
double s_loss(const Spectrum& xhat, const TargetBins& bins);

LossBreakdown total_loss(const RealWindow& x, const RealWindow& xhat,
                         const RealWindow& z, const SensingSpec& spec,
                         const WindowSpec& win, const LossWeights& weights);

}  // namespace sonomix
