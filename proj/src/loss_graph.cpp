#include "sonomix/loss_graph.hpp"

namespace sonomix {

LossNodes build_loss_graph(ad::Graph& g, ad::NodeId xhat, ad::NodeId mixed,
                           const Spectrum& x_ref, const TargetBins& bins,
                           const LossWeights& weights, Waveform kind,
                           const WindowSpec& win) {
  const int half = win.half();
  if (static_cast<int>(x_ref.mags.size()) != half)
    throw std::invalid_argument("build_loss_graph: reference spectrum length");

  auto [re, im] = g.dft(xhat);
  const ad::NodeId mags =
      g.scale(g.magnitude(re, im), 1.0 / (half * static_cast<double>(kPcmMax)));

  const ad::NodeId target_mags = g.gather(mags, bins.bins);

  LossNodes out;
  out.target = g.sub(g.scalar(1.0), g.l2_norm(target_mags));

  const std::vector<int> comp = bins.complement(half);
  std::vector<double> ref_comp(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) ref_comp[i] = x_ref.mags[comp[i]];
  const ad::NodeId diff = g.sub(g.constant(ref_comp), g.gather(mags, comp));
  if (weights.recovery_mode == RecoveryMode::kPerBinAbs) {
    out.recovery = g.scale(g.mean(g.magnitude(diff)),
                           static_cast<double>(comp.size()) / (half - 1));
  } else {
    out.recovery = g.scale(g.l2_norm(diff), 1.0 / (half - 1));
  }

  out.amplitude = g.sub(
      g.scalar(1.0),
      g.scale(g.l2_norm(g.scale(mixed, 1.0 / static_cast<double>(kPcmMax))),
              1.0 / win.size));

  ad::NodeId total =
      g.add(g.scale(g.add(out.target,
                          g.scale(out.recovery, weights.recovery_scale)),
                    weights.alpha),
            g.scale(out.amplitude, weights.beta));
  if (kind == Waveform::kChirp) {
    out.variance = g.stddev(target_mags);
    total = g.add(total, g.scale(out.variance, weights.gamma));
  }
  out.total = total;
  return out;
}

LossBreakdown read_loss_values(const ad::Graph& g, const LossNodes& nodes) {
  LossBreakdown b;
  b.target = g.value_scalar(nodes.target);
  b.recovery = g.value_scalar(nodes.recovery);
  b.amplitude = g.value_scalar(nodes.amplitude);
  b.variance = nodes.variance >= 0 ? g.value_scalar(nodes.variance) : 0.0;
  b.total = g.value_scalar(nodes.total);
  return b;
}

}  // namespace sonomix
