#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonomix/loss.hpp"
#include "sonomix/model.hpp"

namespace sonomix {

// Raised when optimization produces non-finite losses.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam moments for a single tensor; shapes fix themselves on first step.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}
  void step(ad::Tensor& param, const ad::Tensor& grad, double lr);

 private:
  AdamConfig config_;
  ad::Tensor m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  AdamConfig adam{};
  int epochs = 10;
  int batch_size = 32;
  LossWeights weights{};
  std::uint64_t seed = 0;
  double rs = 1.0;  // sensing volume ratio
  double rz = 1.0;  // music volume ratio
  int num_threads = 0;  // 0 = hardware concurrency
};

// test = final contiguous 10%; the remainder is shuffled 80/20 train/valid.
struct DatasetSplit {
  std::vector<int> train, valid, test;
};

DatasetSplit split_dataset(int window_count, std::uint64_t seed);

struct EpochStats {
  int epoch = 0;
  LossBreakdown train_mean;
  LossBreakdown valid_mean;
};

struct TrainResult {
  ModelParams params;  // best validation checkpoint (init included as candidate)
  std::vector<EpochStats> history;
  DatasetSplit split;
  LossBreakdown init_valid;
};

// Trains on music windows (integral PCM values); window i pairs with the
// deterministically generated sensing window i. Aborts with numeric_error on
// divergence.
TrainResult train_model(const std::vector<RealWindow>& music,
                        const SensingSpec& spec, const ModelConfig& mconfig,
                        const TrainConfig& tconfig);

// Mean per-window loss over the given indices using the inference path.
LossBreakdown evaluate_mean(const ModelParams& params,
                            const std::vector<RealWindow>& music,
                            const std::vector<int>& indices,
                            const SensingSpec& spec, const LossWeights& weights,
                            double rs = 1.0, double rz = 1.0,
                            int num_threads = 0);

struct AblationCell {
  std::string dimension;  // "recovery_weight" | "volume_ratio" | "sinc"
  std::string setting;
  LossBreakdown test_mean;
};

// Grid from the micro-benchmarks: recovery-loss weight sweep, volume-ratio
// sweep, sinc on/off. One trained + evaluated cell per setting.
std::vector<AblationCell> run_ablation(const std::vector<RealWindow>& music,
                                       const SensingSpec& spec,
                                       const ModelConfig& mconfig,
                                       const TrainConfig& base);

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history);
void write_ablation_csv(const std::string& path,
                        const std::vector<AblationCell>& cells);

}  // namespace sonomix
