#pragma once

#include "sonomix/loss.hpp"
#include "sonomix/model.hpp"
#include "sonomix/signal.hpp"

namespace sonomix {

enum class StrategyKind { kClip, kDownscale2, kDownscale4, kCognitive };

StrategyKind strategy_from_name(const std::string& name);
std::string strategy_name(StrategyKind kind);

struct MixerStrategy {
  StrategyKind kind = StrategyKind::kClip;
  const ModelParams* params = nullptr;  // required for kCognitive
  // alternative reading of the x4 baseline: uniform (x+z)/4 instead of
  // x/4 + 3z/4
  bool downscale4_uniform = false;
};

struct MixResult {
  PcmWindow mixed;
  bool overloaded = false;   // any pre-strategy |x + z| sample above m
  double peak_level = 0.0;   // max |mixed| in PCM units
  double sensing_attenuation_db = 0.0;  // target-bin level vs the clean x
};

MixResult mix(const RealWindow& x, const RealWindow& z,
              const MixerStrategy& strategy, const SensingSpec& spec,
              const WindowSpec& win);

// Fraction of samples with |x + z| > m.
double overload_fraction(const RealWindow& x, const RealWindow& z);

// Out-of-target-band spectral energy introduced by a strategy:
// sum over non-target bins of (mag(mixed) - mag(clean))^2, normalized mags.
double distortion_energy(const PcmWindow& mixed, const RealWindow& clean,
                         const TargetBins& bins, const WindowSpec& win);

}  // namespace sonomix
