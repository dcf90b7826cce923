#pragma once

#include <string>

#include "sonomix/audio_io.hpp"
#include "sonomix/loss.hpp"
#include "sonomix/mixer.hpp"
#include "sonomix/model.hpp"
#include "sonomix/sensing.hpp"
#include "sonomix/train.hpp"

namespace sonomix {

// Flat key=value run configuration. Every run is reproducible from its
// serialized form; unknown keys are rejected.
struct RunConfig {
  // window + waveform
  int window_size = 512;
  double sample_rate = 48000.0;
  std::string kind = "sine";
  double f_hz = 18000.0;
  double f0_hz = 18000.0;
  double f1_hz = 20000.0;
  double amplitude = kPcmMax;
  double phase = 0.0;

  // loss
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;  // forced to 0 for sine training
  double recovery_scale = 1.0;
  std::string recovery_mode = "per_bin_abs";

  // model
  int num_blocks = 2;
  int hidden_channels = 2;
  int kernel_size = 5;
  int dilation = 1;
  double sinc_lo_hz = 17500.0;
  double sinc_hi_hz = 20500.0;
  int sinc_taps = 129;
  bool use_sinc = true;
  bool learn_sinc = false;
  std::string gate_mode = "tanh_sigmoid";

  // training
  double lr = 0.1;
  int epochs = 10;
  int batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double rs = 1.0;
  double rz = 1.0;

  // mixer
  std::string strategy = "clip";
  bool down4_uniform = false;

  // synthetic music
  std::string synth_kind = "low_tones";
  double synth_seconds = 20.0;

  // channel / respiration simulation
  double ch_static_gain = 0.6;
  double ch_reflector_gain = 0.3;
  double ch_base_delay = 112.667;
  double ch_breath_amp_m = 0.001;
  double ch_bpm = 15.0;
  double ch_noise = 10.0;
  double sim_seconds = 90.0;

  // bench
  int bench_windows = 2000;

  // run control
  std::uint64_t seed = 0;
  int threads = 0;
  std::string checkpoint;  // optional input checkpoint path

  void set(const std::string& key, const std::string& value);  // throws on unknown
  std::string dump() const;  // full key=value serialization

  // derived views
  WindowSpec window() const;
  SensingSpec sensing() const;
  ModelConfig model() const;
  TrainConfig train() const;
  LossWeights weights() const;
  ChannelSpec channel() const;
  StrategyKind strategy_kind() const;
  MusicKind music_kind() const;
};

RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& config, const std::string& line);

}  // namespace sonomix
