#pragma once

#include "sonomix/autodiff.hpp"
#include "sonomix/loss.hpp"

namespace sonomix {

// Node handles for the differentiable counterpart of total_loss.
struct LossNodes {
  ad::NodeId target = -1;
  ad::NodeId recovery = -1;
  ad::NodeId amplitude = -1;
  ad::NodeId variance = -1;  // -1 for sine
  ad::NodeId total = -1;
};

// Builds the weighted training objective on top of an existing graph.
// `xhat` and `mixed` are PCM-scale rank-1 nodes; `x_ref` is the reference
// spectrum of the clean sensing window (a constant).
LossNodes build_loss_graph(ad::Graph& g, ad::NodeId xhat, ad::NodeId mixed,
                           const Spectrum& x_ref, const TargetBins& bins,
                           const LossWeights& weights, Waveform kind,
                           const WindowSpec& win);

LossBreakdown read_loss_values(const ad::Graph& g, const LossNodes& nodes);

}  // namespace sonomix
