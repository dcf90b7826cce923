#include "sonomix/autodiff.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace sonomix::ad {

namespace {

constexpr double kMagFloor = 1e-300;  // subgradient 0 at the origin

struct DftMatrices {
  int length = 0;
  int half = 0;
  // row-major (half x length)
  std::vector<double> re;
  std::vector<double> im;
};

// One immutable table per window length, shared across graphs and threads.
std::shared_ptr<const DftMatrices> dft_tables(int length) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const DftMatrices>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(length);
  if (it != cache.end()) return it->second;

  auto t = std::make_shared<DftMatrices>();
  t->length = length;
  t->half = length / 2;
  t->re.resize(static_cast<size_t>(t->half) * length);
  t->im.resize(static_cast<size_t>(t->half) * length);
  for (int k = 0; k < t->half; ++k) {
    for (int n = 0; n < length; ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(n) / static_cast<double>(length);
      t->re[static_cast<size_t>(k) * length + n] = std::cos(ang);
      t->im[static_cast<size_t>(k) * length + n] = std::sin(ang);
    }
  }
  cache[length] = t;
  return t;
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string("autodiff ") + op +
                              ": shape mismatch (" + detail + ")");
}

}  // namespace

Tensor Tensor::from_vector(const std::vector<double>& v) {
  Tensor t(1, static_cast<int>(v.size()));
  t.data = v;
  return t;
}

Tensor Tensor::scalar_value(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

NodeId Graph::push(Node n) {
  if (n.op != Op::kLeaf) {
    n.requires_grad = false;
    for (NodeId p : {n.a, n.b, n.c})
      if (p >= 0 && nodes_[p].requires_grad) n.requires_grad = true;
    compute(n);
  }
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Graph::Node& Graph::at(NodeId id, const char* op) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size()))
    throw std::invalid_argument(std::string("autodiff ") + op +
                                ": invalid node id");
  return nodes_[id];
}

NodeId Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

NodeId Graph::constant(const std::vector<double>& v) {
  return leaf(Tensor::from_vector(v), false);
}

NodeId Graph::scalar(double v) { return leaf(Tensor::scalar_value(v), false); }

NodeId Graph::add(NodeId a, NodeId b) {
  if (!at(a, "add").value.same_shape(at(b, "add").value))
    shape_error("add", "operands differ");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  if (!at(a, "sub").value.same_shape(at(b, "sub").value))
    shape_error("sub", "operands differ");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
  at(a, "scale");
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.factor = factor;
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  if (!at(a, "mul").value.same_shape(at(b, "mul").value))
    shape_error("mul", "operands differ");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  at(a, "tanh");
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  at(a, "sigmoid");
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  return push(std::move(n));
}

NodeId Graph::concat_rows(NodeId a, NodeId b) {
  if (at(a, "concat_rows").value.cols != at(b, "concat_rows").value.cols)
    shape_error("concat_rows", "column counts differ");
  Node n;
  n.op = Op::kConcatRows;
  n.a = a;
  n.b = b;
  return push(std::move(n));
}

NodeId Graph::gather(NodeId a, std::vector<int> indices) {
  const Tensor& v = at(a, "gather").value;
  if (v.rows != 1) shape_error("gather", "expects a rank-1 input");
  for (int i : indices)
    if (i < 0 || i >= v.cols) shape_error("gather", "index out of range");
  Node n;
  n.op = Op::kGather;
  n.a = a;
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Graph::conv1d(NodeId input, NodeId weight, NodeId bias, int kernel,
                     int dilation) {
  const Tensor& in = at(input, "conv1d").value;
  const Tensor& w = at(weight, "conv1d").value;
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("autodiff conv1d: kernel must be odd");
  if (dilation < 1)
    throw std::invalid_argument("autodiff conv1d: dilation must be >= 1");
  if (w.cols != in.rows * kernel)
    shape_error("conv1d", "weight cols != in_ch * kernel");
  if (bias >= 0) {
    const Tensor& b = at(bias, "conv1d").value;
    if (b.rows != 1 || b.cols != w.rows)
      shape_error("conv1d", "bias length != out_ch");
  }
  Node n;
  n.op = Op::kConv1d;
  n.a = input;
  n.b = weight;
  n.c = bias;
  n.conv_k = kernel;
  n.conv_dil = dilation;
  return push(std::move(n));
}

std::pair<NodeId, NodeId> Graph::dft(NodeId x) {
  const Tensor& v = at(x, "dft").value;
  if (v.rows != 1 || v.cols % 2 != 0)
    shape_error("dft", "expects rank-1 input of even length");
  Node re;
  re.op = Op::kDftRe;
  re.a = x;
  NodeId re_id = push(std::move(re));
  Node im;
  im.op = Op::kDftIm;
  im.a = x;
  NodeId im_id = push(std::move(im));
  return {re_id, im_id};
}

NodeId Graph::magnitude(NodeId re, NodeId im) {
  const Tensor& r = at(re, "magnitude").value;
  if (im >= 0 && !r.same_shape(at(im, "magnitude").value))
    shape_error("magnitude", "re/im differ");
  Node n;
  n.op = Op::kMagnitude;
  n.a = re;
  n.b = im;
  return push(std::move(n));
}

NodeId Graph::l2_norm(NodeId a) {
  at(a, "l2_norm");
  Node n;
  n.op = Op::kL2Norm;
  n.a = a;
  return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
  if (at(a, "mean").value.count() < 1) shape_error("mean", "empty input");
  Node n;
  n.op = Op::kMean;
  n.a = a;
  return push(std::move(n));
}

NodeId Graph::stddev(NodeId a) {
  if (at(a, "stddev").value.count() < 2)
    throw std::invalid_argument("autodiff stddev: needs >= 2 elements");
  Node n;
  n.op = Op::kStdDev;
  n.a = a;
  return push(std::move(n));
}

NodeId Graph::stop_gradient(NodeId a) {
  at(a, "stop_gradient");
  Node n;
  n.op = Op::kStopGrad;
  n.a = a;
  NodeId id = push(std::move(n));
  nodes_[id].requires_grad = false;  // blocks flow upward
  return id;
}

NodeId Graph::round_ste(NodeId a) {
  at(a, "round_ste");
  Node n;
  n.op = Op::kRoundSte;
  n.a = a;
  return push(std::move(n));
}

void Graph::compute(Node& n) {
  auto V = [&](NodeId id) -> const Tensor& { return nodes_[id].value; };
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      const Tensor &a = V(n.a), &b = V(n.b);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i)
        n.value.data[i] = a.data[i] + b.data[i];
      break;
    }
    case Op::kSub: {
      const Tensor &a = V(n.a), &b = V(n.b);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i)
        n.value.data[i] = a.data[i] - b.data[i];
      break;
    }
    case Op::kScale: {
      const Tensor& a = V(n.a);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i) n.value.data[i] = n.factor * a.data[i];
      break;
    }
    case Op::kMul: {
      const Tensor &a = V(n.a), &b = V(n.b);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i)
        n.value.data[i] = a.data[i] * b.data[i];
      break;
    }
    case Op::kTanh: {
      const Tensor& a = V(n.a);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i) n.value.data[i] = std::tanh(a.data[i]);
      break;
    }
    case Op::kSigmoid: {
      const Tensor& a = V(n.a);
      n.value = Tensor(a.rows, a.cols);
      for (int i = 0; i < a.count(); ++i)
        n.value.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
      break;
    }
    case Op::kConcatRows: {
      const Tensor &a = V(n.a), &b = V(n.b);
      n.value = Tensor(a.rows + b.rows, a.cols);
      std::copy(a.data.begin(), a.data.end(), n.value.data.begin());
      std::copy(b.data.begin(), b.data.end(),
                n.value.data.begin() + a.data.size());
      break;
    }
    case Op::kGather: {
      const Tensor& a = V(n.a);
      n.value = Tensor(1, static_cast<int>(n.indices.size()));
      for (std::size_t i = 0; i < n.indices.size(); ++i)
        n.value.data[i] = a.data[n.indices[i]];
      break;
    }
    case Op::kConv1d: {
      const Tensor& in = V(n.a);
      const Tensor& w = V(n.b);
      const int in_ch = in.rows, T = in.cols;
      const int out_ch = w.rows, k = n.conv_k, dil = n.conv_dil;
      const int center = (k - 1) / 2;
      n.value = Tensor(out_ch, T);
      for (int o = 0; o < out_ch; ++o) {
        const double bias = n.c >= 0 ? V(n.c).data[o] : 0.0;
        for (int t = 0; t < T; ++t) {
          double acc = bias;
          for (int i = 0; i < in_ch; ++i) {
            for (int j = 0; j < k; ++j) {
              const int src = t + (j - center) * dil;
              if (src < 0 || src >= T) continue;
              acc += w.at(o, i * k + j) * in.at(i, src);
            }
          }
          n.value.at(o, t) = acc;
        }
      }
      break;
    }
    case Op::kDftRe:
    case Op::kDftIm: {
      const Tensor& a = V(n.a);
      auto tables = dft_tables(a.cols);
      const auto& mat = n.op == Op::kDftRe ? tables->re : tables->im;
      n.value = Tensor(1, tables->half);
      for (int k = 0; k < tables->half; ++k) {
        double acc = 0.0;
        const double* row = &mat[static_cast<size_t>(k) * tables->length];
        for (int j = 0; j < tables->length; ++j) acc += row[j] * a.data[j];
        n.value.data[k] = acc;
      }
      break;
    }
    case Op::kMagnitude: {
      const Tensor& r = V(n.a);
      n.value = Tensor(r.rows, r.cols);
      if (n.b >= 0) {
        const Tensor& im = V(n.b);
        for (int i = 0; i < r.count(); ++i)
          n.value.data[i] = std::hypot(r.data[i], im.data[i]);
      } else {
        for (int i = 0; i < r.count(); ++i) n.value.data[i] = std::abs(r.data[i]);
      }
      break;
    }
    case Op::kL2Norm: {
      const Tensor& a = V(n.a);
      double sq = 0.0;
      for (double v : a.data) sq += v * v;
      n.value = Tensor::scalar_value(std::sqrt(sq));
      break;
    }
    case Op::kMean: {
      const Tensor& a = V(n.a);
      double s = 0.0;
      for (double v : a.data) s += v;
      n.value = Tensor::scalar_value(s / a.count());
      break;
    }
    case Op::kStdDev: {
      const Tensor& a = V(n.a);
      const int cnt = a.count();
      double mean = 0.0;
      for (double v : a.data) mean += v;
      mean /= cnt;
      double sq = 0.0;
      for (double v : a.data) sq += (v - mean) * (v - mean);
      n.value = Tensor::scalar_value(std::sqrt(sq / (cnt - 1)));
      break;
    }
    case Op::kStopGrad:
    case Op::kRoundSte: {
      const Tensor& a = V(n.a);
      n.value = a;
      if (n.op == Op::kRoundSte)
        for (double& v : n.value.data) v = std::round(v);
      break;
    }
  }
}

void Graph::set_value(NodeId leaf_id, const Tensor& v) {
  Node& n = nodes_[leaf_id];
  if (n.op != Op::kLeaf)
    throw std::invalid_argument("autodiff set_value: node is not a leaf");
  if (!n.value.same_shape(v))
    shape_error("set_value", "new value changes the leaf shape");
  n.value = v;
  values_fresh_ = false;
  backward_done_ = false;
}

void Graph::forward() {
  for (Node& n : nodes_)
    if (n.op != Op::kLeaf) compute(n);
  values_fresh_ = true;
}

double Graph::value_scalar(NodeId id) const {
  const Tensor& v = at(id, "value_scalar").value;
  if (v.count() != 1)
    throw std::invalid_argument("autodiff value_scalar: node is not scalar");
  return v.data[0];
}

const Tensor& Graph::grad(NodeId id) const {
  const Node& n = at(id, "grad");
  if (!backward_done_)
    throw std::invalid_argument("autodiff grad: backward has not run");
  return n.grad;
}

void Graph::accumulate(const Node& n) {
  auto G = [&](NodeId id) -> Tensor& { return nodes_[id].grad; };
  auto V = [&](NodeId id) -> const Tensor& { return nodes_[id].value; };
  auto needs = [&](NodeId id) { return id >= 0 && nodes_[id].requires_grad; };

  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i) G(n.a).data[i] += n.grad.data[i];
      if (needs(n.b))
        for (int i = 0; i < n.grad.count(); ++i) G(n.b).data[i] += n.grad.data[i];
      break;
    }
    case Op::kSub: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i) G(n.a).data[i] += n.grad.data[i];
      if (needs(n.b))
        for (int i = 0; i < n.grad.count(); ++i) G(n.b).data[i] -= n.grad.data[i];
      break;
    }
    case Op::kScale: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i)
          G(n.a).data[i] += n.factor * n.grad.data[i];
      break;
    }
    case Op::kMul: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i)
          G(n.a).data[i] += n.grad.data[i] * V(n.b).data[i];
      if (needs(n.b))
        for (int i = 0; i < n.grad.count(); ++i)
          G(n.b).data[i] += n.grad.data[i] * V(n.a).data[i];
      break;
    }
    case Op::kTanh: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i) {
          const double y = n.value.data[i];
          G(n.a).data[i] += n.grad.data[i] * (1.0 - y * y);
        }
      break;
    }
    case Op::kSigmoid: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i) {
          const double y = n.value.data[i];
          G(n.a).data[i] += n.grad.data[i] * y * (1.0 - y);
        }
      break;
    }
    case Op::kConcatRows: {
      const int na = V(n.a).count();
      if (needs(n.a))
        for (int i = 0; i < na; ++i) G(n.a).data[i] += n.grad.data[i];
      if (needs(n.b))
        for (int i = 0; i < V(n.b).count(); ++i)
          G(n.b).data[i] += n.grad.data[na + i];
      break;
    }
    case Op::kGather: {
      if (needs(n.a))
        for (std::size_t i = 0; i < n.indices.size(); ++i)
          G(n.a).data[n.indices[i]] += n.grad.data[i];
      break;
    }
    case Op::kConv1d: {
      const Tensor& in = V(n.a);
      const Tensor& w = V(n.b);
      const int in_ch = in.rows, T = in.cols;
      const int out_ch = w.rows, k = n.conv_k, dil = n.conv_dil;
      const int center = (k - 1) / 2;
      for (int o = 0; o < out_ch; ++o) {
        for (int t = 0; t < T; ++t) {
          const double g = n.grad.at(o, t);
          if (g == 0.0) continue;
          if (n.c >= 0 && needs(n.c)) G(n.c).data[o] += g;
          for (int i = 0; i < in_ch; ++i) {
            for (int j = 0; j < k; ++j) {
              const int src = t + (j - center) * dil;
              if (src < 0 || src >= T) continue;
              if (needs(n.b)) G(n.b).at(o, i * k + j) += g * in.at(i, src);
              if (needs(n.a)) G(n.a).at(i, src) += g * w.at(o, i * k + j);
            }
          }
        }
      }
      break;
    }
    case Op::kDftRe:
    case Op::kDftIm: {
      if (!needs(n.a)) break;
      const Tensor& a = V(n.a);
      auto tables = dft_tables(a.cols);
      const auto& mat = n.op == Op::kDftRe ? tables->re : tables->im;
      for (int k = 0; k < tables->half; ++k) {
        const double g = n.grad.data[k];
        if (g == 0.0) continue;
        const double* row = &mat[static_cast<size_t>(k) * tables->length];
        for (int j = 0; j < tables->length; ++j) G(n.a).data[j] += g * row[j];
      }
      break;
    }
    case Op::kMagnitude: {
      for (int i = 0; i < n.grad.count(); ++i) {
        const double mag = n.value.data[i];
        if (mag < kMagFloor) continue;
        const double g = n.grad.data[i] / mag;
        if (needs(n.a)) G(n.a).data[i] += g * V(n.a).data[i];
        if (n.b >= 0 && needs(n.b)) G(n.b).data[i] += g * V(n.b).data[i];
      }
      break;
    }
    case Op::kL2Norm: {
      if (!needs(n.a)) break;
      const double norm = n.value.data[0];
      if (norm < kMagFloor) break;
      const double g = n.grad.data[0] / norm;
      for (int i = 0; i < V(n.a).count(); ++i)
        G(n.a).data[i] += g * V(n.a).data[i];
      break;
    }
    case Op::kMean: {
      if (!needs(n.a)) break;
      const double g = n.grad.data[0] / V(n.a).count();
      for (int i = 0; i < V(n.a).count(); ++i) G(n.a).data[i] += g;
      break;
    }
    case Op::kStdDev: {
      if (!needs(n.a)) break;
      const double sd = n.value.data[0];
      if (sd < kMagFloor) break;
      const Tensor& a = V(n.a);
      const int cnt = a.count();
      double mean = 0.0;
      for (double v : a.data) mean += v;
      mean /= cnt;
      const double g = n.grad.data[0] / ((cnt - 1) * sd);
      for (int i = 0; i < cnt; ++i)
        G(n.a).data[i] += g * (a.data[i] - mean);
      break;
    }
    case Op::kStopGrad:
      break;  // blocks flow by definition
    case Op::kRoundSte: {
      if (needs(n.a))
        for (int i = 0; i < n.grad.count(); ++i) G(n.a).data[i] += n.grad.data[i];
      break;
    }
  }
}

void Graph::backward(NodeId output) {
  const Node& out = at(output, "backward");
  if (out.value.count() != 1)
    throw std::invalid_argument("autodiff backward: output must be scalar");
  if (!values_fresh_)
    throw std::invalid_argument(
        "autodiff backward: values stale; run forward() first");

  for (Node& n : nodes_) {
    n.grad = Tensor(n.value.rows, n.value.cols);
  }
  nodes_[output].grad.data[0] = 1.0;
  for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[id];
    // requires_grad is false only when no parent needs a gradient (and for
    // stop_gradient nodes, which block flow by definition)
    if (!n.requires_grad) continue;
    accumulate(n);
  }
  backward_done_ = true;
}

double grad_check(Graph& g, NodeId output, NodeId leaf, double epsilon) {
  g.forward();
  g.backward(output);
  const Tensor analytic = g.grad(leaf);
  Tensor base = g.value(leaf);

  double max_rel = 0.0;
  for (int i = 0; i < base.count(); ++i) {
    Tensor probe = base;
    probe.data[i] = base.data[i] + epsilon;
    g.set_value(leaf, probe);
    g.forward();
    const double f_plus = g.value_scalar(output);

    probe.data[i] = base.data[i] - epsilon;
    g.set_value(leaf, probe);
    g.forward();
    const double f_minus = g.value_scalar(output);

    const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
    const double a = analytic.data[i];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
    max_rel = std::max(max_rel, rel);
  }
  g.set_value(leaf, base);
  g.forward();
  return max_rel;
}

}  // namespace sonomix::ad
