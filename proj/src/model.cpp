#include "sonomix/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sonomix/dsp.hpp"
#include "sonomix/loss_graph.hpp"
#include "sonomix/rng.hpp"
#include "sonomix/train.hpp"

namespace sonomix {

namespace {

constexpr double kM = static_cast<double>(kPcmMax);

ad::Tensor uniform_tensor(Rng& rng, int rows, int cols, int fan_in) {
  ad::Tensor t(rows, cols);
  const double bound = std::sqrt(1.0 / fan_in);
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

FirKernel model_sinc_kernel(const ModelConfig& c) {
  return sinc_band_pass(c.sinc_lo_hz, c.sinc_hi_hz, c.sinc_taps, c.window);
}

}  // namespace

void ModelConfig::validate() const {
  window.validate();
  if (num_blocks < 1) throw std::invalid_argument("ModelConfig: num_blocks >= 1");
  if (hidden_channels < 1)
    throw std::invalid_argument("ModelConfig: hidden_channels >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw std::invalid_argument("ModelConfig: kernel_size must be odd");
  if (dilation < 1) throw std::invalid_argument("ModelConfig: dilation >= 1");
  if (sinc_taps < 1 || sinc_taps % 2 == 0 || sinc_taps >= window.size)
    throw std::invalid_argument(
        "ModelConfig: sinc_taps must be odd and shorter than the window");
  if (!(0.0 < sinc_lo_hz && sinc_lo_hz < sinc_hi_hz &&
        sinc_hi_hz < window.nyquist()))
    throw std::invalid_argument("ModelConfig: sinc band outside (0, Nyquist)");
}

void ModelParams::for_each(
    const std::function<void(const std::string&, ad::Tensor&)>& fn) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    BlockParams& b = blocks[i];
    const std::string p = "block" + std::to_string(i) + ".";
    fn(p + "filter_w", b.filter_w);
    fn(p + "filter_b", b.filter_b);
    fn(p + "gate_w", b.gate_w);
    fn(p + "gate_b", b.gate_b);
    fn(p + "cond_filter_w", b.cond_filter_w);
    fn(p + "cond_gate_w", b.cond_gate_w);
    if (b.res_w.count() > 0) fn(p + "res_w", b.res_w);
    fn(p + "skip_w", b.skip_w);
  }
  fn("merge_w", merge_w);
  if (config.learn_sinc) fn("sinc_taps", sinc_taps);
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const ad::Tensor&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, ad::Tensor& t) {
        fn(name, const_cast<const ad::Tensor&>(t));
      });
}

int ModelParams::scalar_count() const {
  int n = 0;
  for_each([&](const std::string&, const ad::Tensor& t) { n += t.count(); });
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int in_ch = 2;  // stacked sensing + music rows
  const int hid = config.hidden_channels;
  const int k = config.kernel_size;

  ModelParams p;
  p.config = config;
  p.blocks.resize(config.num_blocks);
  for (int i = 0; i < config.num_blocks; ++i) {
    BlockParams& b = p.blocks[i];
    b.filter_w = uniform_tensor(rng, hid, in_ch * k, in_ch * k);
    b.filter_b = uniform_tensor(rng, 1, hid, in_ch * k);
    b.gate_w = uniform_tensor(rng, hid, in_ch * k, in_ch * k);
    b.gate_b = uniform_tensor(rng, 1, hid, in_ch * k);
    b.cond_filter_w = uniform_tensor(rng, hid, 1, 1);
    b.cond_gate_w = uniform_tensor(rng, hid, 1, 1);
    // residual + skip 1x1 convs: combined output doubles the hidden size on
    // every block except the last, which is skip-only
    if (i + 1 < config.num_blocks)
      b.res_w = uniform_tensor(rng, in_ch, hid, hid);
    b.skip_w = uniform_tensor(rng, hid, hid, hid);
  }
  p.merge_w = uniform_tensor(rng, 1, hid, hid);
  if (config.learn_sinc) {
    FirKernel kern = model_sinc_kernel(config);
    p.sinc_taps = ad::Tensor::from_vector(kern.taps);
  }
  return p;
}

// ---------------------------------------------------------------------------
// plain forward (inference path)

namespace {

// 1-D conv with the same layout and loop order as the autodiff op, so both
// paths produce bit-identical activations.
void conv1d_plain(const std::vector<double>& in, int in_ch, int T,
                  const ad::Tensor& w, const ad::Tensor* bias, int k, int dil,
                  std::vector<double>& out) {
  const int out_ch = w.rows;
  const int center = (k - 1) / 2;
  out.assign(static_cast<std::size_t>(out_ch) * T, 0.0);
  for (int o = 0; o < out_ch; ++o) {
    const double b = bias != nullptr ? bias->data[o] : 0.0;
    for (int t = 0; t < T; ++t) {
      double acc = b;
      for (int i = 0; i < in_ch; ++i) {
        for (int j = 0; j < k; ++j) {
          const int src = t + (j - center) * dil;
          if (src < 0 || src >= T) continue;
          acc += w.at(o, i * k + j) * in[static_cast<std::size_t>(i) * T + src];
        }
      }
      out[static_cast<std::size_t>(o) * T + t] = acc;
    }
  }
}

}  // namespace

ForwardResult forward(const RealWindow& x, const RealWindow& z,
                      const ModelParams& params) {
  const ModelConfig& c = params.config;
  const int T = c.window.size;
  if (static_cast<int>(x.size()) != T || static_cast<int>(z.size()) != T)
    throw std::invalid_argument("forward: window spec mismatch");
  const int hid = c.hidden_channels;
  const int k = c.kernel_size;

  // stack [x/m; z/m] as two channels; multiply by the reciprocal so the
  // arithmetic matches the graph path exactly
  const double inv_m = 1.0 / kM;
  std::vector<double> h(2 * static_cast<std::size_t>(T));
  std::vector<double> zs(T);
  for (int t = 0; t < T; ++t) {
    h[t] = x[t] * inv_m;
    h[T + t] = z[t] * inv_m;
    zs[t] = z[t] * inv_m;
  }

  std::vector<double> skip_sum(static_cast<std::size_t>(hid) * T, 0.0);
  std::vector<double> f, gate, cond, v, tmp;
  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const BlockParams& b = params.blocks[bi];
    conv1d_plain(h, 2, T, b.filter_w, &b.filter_b, k, c.dilation, f);
    conv1d_plain(zs, 1, T, b.cond_filter_w, nullptr, 1, 1, cond);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::tanh(f[i] + cond[i]);

    conv1d_plain(h, 2, T, b.gate_w, &b.gate_b, k, c.dilation, gate);
    conv1d_plain(zs, 1, T, b.cond_gate_w, nullptr, 1, 1, cond);
    if (c.gate_mode == GateMode::kTanhSigmoid) {
      for (std::size_t i = 0; i < gate.size(); ++i)
        gate[i] = 1.0 / (1.0 + std::exp(-(gate[i] + cond[i])));
    } else {
      for (std::size_t i = 0; i < gate.size(); ++i)
        gate[i] = std::tanh(gate[i] + cond[i]);
    }

    v.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[i] * gate[i];

    if (b.res_w.count() > 0) {
      conv1d_plain(v, hid, T, b.res_w, nullptr, 1, 1, tmp);
      for (std::size_t i = 0; i < h.size(); ++i) h[i] += tmp[i];
    }
    conv1d_plain(v, hid, T, b.skip_w, nullptr, 1, 1, tmp);
    for (std::size_t i = 0; i < skip_sum.size(); ++i) skip_sum[i] += tmp[i];
  }

  std::vector<double> merged;
  conv1d_plain(skip_sum, hid, T, params.merge_w, nullptr, 1, 1, merged);

  ForwardResult r;
  r.activation.assign(merged.begin(), merged.end());
  if (c.use_sinc) {
    if (c.learn_sinc) {
      conv1d_plain(merged, 1, T, params.sinc_taps, nullptr, c.sinc_taps, 1, tmp);
      r.activation.assign(tmp.begin(), tmp.end());
    } else {
      FirKernel kern = model_sinc_kernel(c);
      const ad::Tensor taps = ad::Tensor::from_vector(kern.taps);
      conv1d_plain(merged, 1, T, taps, nullptr, c.sinc_taps, 1, tmp);
      r.activation.assign(tmp.begin(), tmp.end());
    }
  }

  r.xhat_pre.resize(T);
  r.xhat.resize(T);
  r.mixed_pre.resize(T);
  for (int t = 0; t < T; ++t) {
    const double link = std::tanh(r.activation[t]) * kM;
    r.mixed_pre[t] = link;
    r.xhat_pre[t] = link - z[t];
    r.xhat[t] = std::round(r.xhat_pre[t]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// graph forward (training path)

ModelGraph build_forward_graph(ad::Graph& g, const ModelParams& params,
                               const RealWindow& x, const RealWindow& z,
                               bool straight_through) {
  const ModelConfig& c = params.config;
  const int T = c.window.size;
  if (static_cast<int>(x.size()) != T || static_cast<int>(z.size()) != T)
    throw std::invalid_argument("build_forward_graph: window spec mismatch");

  ModelGraph mg;
  mg.x = g.leaf(ad::Tensor::from_vector(x));
  mg.z = g.leaf(ad::Tensor::from_vector(z));

  auto param_node = [&](const std::string& name, const ad::Tensor& t) {
    ad::NodeId id = g.leaf(t, true);
    mg.param_nodes.emplace_back(name, id);
    return id;
  };

  const ad::NodeId xs = g.scale(mg.x, 1.0 / kM);
  const ad::NodeId zs = g.scale(mg.z, 1.0 / kM);
  ad::NodeId h = g.concat_rows(xs, zs);

  ad::NodeId skip_sum = -1;
  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const BlockParams& b = params.blocks[bi];
    const std::string p = "block" + std::to_string(bi) + ".";

    ad::NodeId fw = param_node(p + "filter_w", b.filter_w);
    ad::NodeId fb = param_node(p + "filter_b", b.filter_b);
    ad::NodeId gw = param_node(p + "gate_w", b.gate_w);
    ad::NodeId gb = param_node(p + "gate_b", b.gate_b);
    ad::NodeId cfw = param_node(p + "cond_filter_w", b.cond_filter_w);
    ad::NodeId cgw = param_node(p + "cond_gate_w", b.cond_gate_w);

    ad::NodeId f = g.add(g.conv1d(h, fw, fb, c.kernel_size, c.dilation),
                         g.conv1d(zs, cfw, -1, 1, 1));
    ad::NodeId gt = g.add(g.conv1d(h, gw, gb, c.kernel_size, c.dilation),
                          g.conv1d(zs, cgw, -1, 1, 1));
    ad::NodeId v = c.gate_mode == GateMode::kTanhSigmoid
                       ? g.mul(g.tanh(f), g.sigmoid(gt))
                       : g.mul(g.tanh(f), g.tanh(gt));

    if (b.res_w.count() > 0) {
      ad::NodeId rw = param_node(p + "res_w", b.res_w);
      h = g.add(h, g.conv1d(v, rw, -1, 1, 1));
    }
    ad::NodeId sw = param_node(p + "skip_w", b.skip_w);
    ad::NodeId skip = g.conv1d(v, sw, -1, 1, 1);
    skip_sum = skip_sum < 0 ? skip : g.add(skip_sum, skip);
  }

  ad::NodeId mw = param_node("merge_w", params.merge_w);
  ad::NodeId a = g.conv1d(skip_sum, mw, -1, 1, 1);

  if (c.use_sinc) {
    ad::NodeId taps;
    if (c.learn_sinc) {
      taps = param_node("sinc_taps", params.sinc_taps);
    } else {
      taps = g.leaf(ad::Tensor::from_vector(model_sinc_kernel(c).taps), false);
    }
    a = g.conv1d(a, taps, -1, c.sinc_taps, 1);
  }

  mg.activation = a;
  mg.xhat_pre = g.sub(g.scale(g.tanh(a), kM), mg.z);
  mg.xhat = straight_through ? g.round_ste(mg.xhat_pre) : mg.xhat_pre;
  mg.mixed = g.add(mg.xhat, mg.z);
  return mg;
}

// ---------------------------------------------------------------------------
// checkpoint I/O

namespace {
constexpr const char* kCheckpointMagic = "sonomix-checkpoint";

const char* gate_mode_name(GateMode m) {
  return m == GateMode::kTanhSigmoid ? "tanh_sigmoid" : "tanh_tanh";
}
}  // namespace

void save_checkpoint(std::ostream& out, const ModelParams& params) {
  const ModelConfig& c = params.config;
  out << kCheckpointMagic << " v1\n";
  out << "window_size " << c.window.size << "\n";
  out << "sample_rate " << c.window.sample_rate << "\n";
  out << "num_blocks " << c.num_blocks << "\n";
  out << "hidden_channels " << c.hidden_channels << "\n";
  out << "kernel_size " << c.kernel_size << "\n";
  out << "dilation " << c.dilation << "\n";
  out << "sinc_lo_hz " << c.sinc_lo_hz << "\n";
  out << "sinc_hi_hz " << c.sinc_hi_hz << "\n";
  out << "sinc_taps " << c.sinc_taps << "\n";
  out << "use_sinc " << (c.use_sinc ? 1 : 0) << "\n";
  out << "learn_sinc " << (c.learn_sinc ? 1 : 0) << "\n";
  out << "gate_mode " << gate_mode_name(c.gate_mode) << "\n";

  char buf[32];
  params.for_each([&](const std::string& name, const ad::Tensor& t) {
    out << "param " << name << " " << t.rows << " " << t.cols << "\n";
    for (int r = 0; r < t.rows; ++r) {
      for (int cidx = 0; cidx < t.cols; ++cidx) {
        std::snprintf(buf, sizeof buf, "%.17g", t.at(r, cidx));
        out << buf << (cidx + 1 < t.cols ? " " : "\n");
      }
    }
  });
  out << "end\n";
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
    save_checkpoint(out, params);
    if (!out) throw std::runtime_error("save_checkpoint: write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_checkpoint: rename failed for " + path);
}

ModelParams load_checkpoint(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kCheckpointMagic || version != "v1")
    throw std::runtime_error("load_checkpoint: not a v1 checkpoint");

  ModelConfig c;
  std::string key;
  // header keys until the first "param"
  while (in >> key && key != "param" && key != "end") {
    if (key == "window_size") in >> c.window.size;
    else if (key == "sample_rate") in >> c.window.sample_rate;
    else if (key == "num_blocks") in >> c.num_blocks;
    else if (key == "hidden_channels") in >> c.hidden_channels;
    else if (key == "kernel_size") in >> c.kernel_size;
    else if (key == "dilation") in >> c.dilation;
    else if (key == "sinc_lo_hz") in >> c.sinc_lo_hz;
    else if (key == "sinc_hi_hz") in >> c.sinc_hi_hz;
    else if (key == "sinc_taps") in >> c.sinc_taps;
    else if (key == "use_sinc") { int v; in >> v; c.use_sinc = v != 0; }
    else if (key == "learn_sinc") { int v; in >> v; c.learn_sinc = v != 0; }
    else if (key == "gate_mode") {
      std::string v;
      in >> v;
      if (v == "tanh_sigmoid") c.gate_mode = GateMode::kTanhSigmoid;
      else if (v == "tanh_tanh") c.gate_mode = GateMode::kTanhTanh;
      else throw std::runtime_error("load_checkpoint: unknown gate_mode " + v);
    } else {
      throw std::runtime_error("load_checkpoint: unknown header key " + key);
    }
    if (!in) throw std::runtime_error("load_checkpoint: bad header value");
  }

  // shape the parameter set from the config, then fill tensors by name
  ModelParams p = init_params(c, 0);
  std::size_t filled = 0;
  while (key == "param") {
    std::string name;
    int rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols))
      throw std::runtime_error("load_checkpoint: truncated param header");
    bool found = false;
    p.for_each([&](const std::string& n, ad::Tensor& t) {
      if (n != name) return;
      found = true;
      if (t.rows != rows || t.cols != cols)
        throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
      for (double& v : t.data)
        if (!(in >> v))
          throw std::runtime_error("load_checkpoint: truncated values for " + name);
    });
    if (!found) throw std::runtime_error("load_checkpoint: unknown param " + name);
    ++filled;
    if (!(in >> key)) throw std::runtime_error("load_checkpoint: missing end");
  }
  if (key != "end") throw std::runtime_error("load_checkpoint: missing end marker");

  std::size_t expected = 0;
  p.for_each([&](const std::string&, ad::Tensor&) { ++expected; });
  if (filled != expected)
    throw std::runtime_error("load_checkpoint: missing parameter tensors");
  return p;
}

ModelParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

// ---------------------------------------------------------------------------
// per-window oracle

RealWindow direct_window_optimize(const RealWindow& x, const RealWindow& z,
                                  const SensingSpec& spec,
                                  const WindowSpec& win,
                                  const LossWeights& weights, int steps,
                                  double lr, std::uint64_t seed) {
  spec.validate(win);
  const int T = win.size;
  if (static_cast<int>(x.size()) != T || static_cast<int>(z.size()) != T)
    throw std::invalid_argument("direct_window_optimize: window spec mismatch");

  // small random init breaks the zero-gradient tie at a == 0
  Rng rng(seed);
  ad::Tensor a0(1, T);
  for (double& v : a0.data) v = rng.uniform(-1e-3, 1e-3);

  ad::Graph g;
  ad::NodeId a = g.leaf(a0, true);
  ad::NodeId zn = g.leaf(ad::Tensor::from_vector(z));
  ad::NodeId xhat_pre = g.sub(g.scale(g.tanh(a), kM), zn);
  ad::NodeId xhat = g.round_ste(xhat_pre);
  ad::NodeId mixed = g.add(xhat, zn);

  const Spectrum x_ref = rfft_mag(x, win);
  const TargetBins bins = target_bins_for(spec, win);
  LossNodes loss =
      build_loss_graph(g, xhat, mixed, x_ref, bins, weights, spec.kind, win);

  AdamState adam;
  ad::Tensor best_xhat = g.value(xhat);
  double best_loss = g.value_scalar(loss.total);

  ad::Tensor param = a0;
  for (int step = 0; step < steps; ++step) {
    g.backward(loss.total);
    adam.step(param, g.grad(a), lr);
    g.set_value(a, param);
    g.forward();
    const double cur = g.value_scalar(loss.total);
    if (cur < best_loss) {
      best_loss = cur;
      best_xhat = g.value(xhat);
    }
  }
  return best_xhat.data;
}

}  // namespace sonomix
