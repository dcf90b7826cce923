#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sonomix::ad {

// Dense row-major float64 tensor; rank-1 data uses rows == 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor from_vector(const std::vector<double>& v);
  static Tensor scalar_value(double v);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  int count() const { return rows * cols; }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

using NodeId = std::int32_t;

// Reverse-mode tape over the op set required by the scaling network and its
// losses. Values are computed eagerly as nodes are created; backward() walks
// the tape in reverse topological order (the construction order), which makes
// gradient accumulation deterministic.
class Graph {
 public:
  // leaves
  NodeId leaf(Tensor value, bool requires_grad = false);
  NodeId constant(const std::vector<double>& v);
  NodeId scalar(double v);

  // elementwise / scalar algebra
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId mul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);

  // structure
  NodeId concat_rows(NodeId a, NodeId b);
  NodeId gather(NodeId a, std::vector<int> indices);  // rank-1 input

  // 1-D dilated convolution, same-length symmetric zero padding.
  // input: (in_ch x T); weight: (out_ch x in_ch*k); bias: (1 x out_ch) or -1.
  NodeId conv1d(NodeId input, NodeId weight, NodeId bias, int kernel,
                int dilation);

  // One-sided DFT as a dense linear transform; input rank-1 of even length L,
  // outputs rank-1 of length L/2 (bins 0..L/2-1).
  std::pair<NodeId, NodeId> dft(NodeId x);

  // magnitude(re, im) = sqrt(re^2 + im^2) elementwise; im = -1 gives |re|.
  NodeId magnitude(NodeId re, NodeId im = -1);

  // reductions to 1x1 scalars
  NodeId l2_norm(NodeId a);
  NodeId mean(NodeId a);
  NodeId stddev(NodeId a);  // sample std, divisor n-1

  NodeId stop_gradient(NodeId a);
  NodeId round_ste(NodeId a);  // round half away from zero, identity adjoint

  // Re-binds a leaf's value and marks downstream values stale.
  void set_value(NodeId leaf_id, const Tensor& v);
  // Recomputes every non-leaf value in tape order.
  void forward();

  // Seeds d(output)/d(output) = 1 and accumulates gradients at every node
  // with requires_grad set. Output must be a 1x1 scalar and values fresh.
  void backward(NodeId output);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  double value_scalar(NodeId id) const;
  const Tensor& grad(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kSub, kScale, kMul, kTanh, kSigmoid, kConcatRows, kGather,
    kConv1d, kDftRe, kDftIm, kMagnitude, kL2Norm, kMean, kStdDev, kStopGrad,
    kRoundSte,
  };

  struct Node {
    Op op = Op::kLeaf;
    Tensor value;
    Tensor grad;
    NodeId a = -1, b = -1, c = -1;
    bool requires_grad = false;
    double factor = 0.0;          // kScale
    std::vector<int> indices;     // kGather
    int conv_k = 0, conv_dil = 0; // kConv1d
  };

  NodeId push(Node n);
  void compute(Node& n);
  void accumulate(const Node& n);
  const Node& at(NodeId id, const char* op) const;

  std::vector<Node> nodes_;
  bool values_fresh_ = true;
  bool backward_done_ = false;
};

// Max relative error between backward() gradients at `leaf` and central
// finite differences of the scalar `output`, elementwise.
double grad_check(Graph& g, NodeId output, NodeId leaf, double epsilon = 1e-4);

}  // namespace sonomix::ad
