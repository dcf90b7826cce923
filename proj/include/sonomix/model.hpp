#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sonomix/autodiff.hpp"
#include "sonomix/loss.hpp"
#include "sonomix/signal.hpp"

namespace sonomix {

enum class GateMode { kTanhSigmoid, kTanhTanh };

// Fixed architecture hyperparameters of the scaling network. Weight shapes
// are derived solely from this struct.
struct ModelConfig {
  WindowSpec window{};
  int num_blocks = 2;
  int hidden_channels = 2;
  int kernel_size = 5;
  int dilation = 1;
  double sinc_lo_hz = 17500.0;
  double sinc_hi_hz = 20500.0;
  int sinc_taps = 129;
  bool use_sinc = true;
  bool learn_sinc = false;  // expose the band-pass taps as a trainable tensor
  GateMode gate_mode = GateMode::kTanhSigmoid;

  void validate() const;
};

struct BlockParams {
  ad::Tensor filter_w, filter_b;  // dilated conv, input channels -> hidden
  ad::Tensor gate_w, gate_b;
  ad::Tensor cond_filter_w;  // 1x1 from the music channel, no bias
  ad::Tensor cond_gate_w;
  ad::Tensor res_w;   // 1x1 hidden -> input channels; empty for the last block
  ad::Tensor skip_w;  // 1x1 hidden -> hidden
};

struct ModelParams {
  ModelConfig config;
  std::vector<BlockParams> blocks;
  ad::Tensor merge_w;    // 1x1 hidden -> 1 ("merge the two rows")
  ad::Tensor sinc_taps;  // present only when config.learn_sinc

  // Visits every trainable tensor in a fixed order with stable names.
  void for_each(const std::function<void(const std::string&, ad::Tensor&)>& fn);
  void for_each(
      const std::function<void(const std::string&, const ad::Tensor&)>& fn) const;
  int scalar_count() const;
};

ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardResult {
  RealWindow xhat;        // straight-through rounded, integer-valued
  RealWindow xhat_pre;    // pre-rounding link output tanh(a)*m - z
  RealWindow mixed_pre;   // tanh(a)*m, the pre-quantization mix xhat_pre + z
                          // evaluated without the z round trip (exactly <= m)
  RealWindow activation;  // a, the merged pre-link activation
};

// Inference-path forward pass (no graph). Guarantees |xhat_pre + z| <= m.
ForwardResult forward(const RealWindow& x, const RealWindow& z,
                      const ModelParams& params);

// Graph-path forward pass for training; mirrors forward() arithmetic.
struct ModelGraph {
  ad::NodeId x = -1, z = -1;  // PCM-scale input leaves
  ad::NodeId activation = -1;
  ad::NodeId xhat_pre = -1;
  ad::NodeId xhat = -1;   // rounded when straight_through, else xhat_pre
  ad::NodeId mixed = -1;  // xhat + z
  std::vector<std::pair<std::string, ad::NodeId>> param_nodes;
};

ModelGraph build_forward_graph(ad::Graph& g, const ModelParams& params,
                               const RealWindow& x, const RealWindow& z,
                               bool straight_through = true);

// Checkpoint I/O: versioned text, key -> shape -> row-major float64 rows.
void save_checkpoint(std::ostream& out, const ModelParams& params);
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(std::istream& in);
ModelParams load_checkpoint_file(const std::string& path);

// Model-free oracle: optimizes a free activation vector through the same
// tanh link against total_loss on one window; returns the best iterate.
RealWindow direct_window_optimize(const RealWindow& x, const RealWindow& z,
                                  const SensingSpec& spec,
                                  const WindowSpec& win,
                                  const LossWeights& weights, int steps,
                                  double lr, std::uint64_t seed = 0);

}  // namespace sonomix
