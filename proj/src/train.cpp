#include "sonomix/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "sonomix/dsp.hpp"
#include "sonomix/loss_graph.hpp"
#include "sonomix/rng.hpp"

namespace sonomix {

namespace {

// Deterministic parallel map: each index writes its own slot; callers reduce
// in index order afterwards.
void parallel_for(int n, int num_threads, const std::function<void(int)>& fn) {
  if (num_threads <= 0)
    num_threads = static_cast<int>(std::thread::hardware_concurrency());
  num_threads = std::max(1, std::min(num_threads, n));
  if (num_threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(num_threads);
  for (int t = 0; t < num_threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += num_threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void add_breakdown(LossBreakdown& acc, const LossBreakdown& b) {
  acc.target += b.target;
  acc.recovery += b.recovery;
  acc.amplitude += b.amplitude;
  acc.variance += b.variance;
  acc.total += b.total;
}

void scale_breakdown(LossBreakdown& acc, double f) {
  acc.target *= f;
  acc.recovery *= f;
  acc.amplitude *= f;
  acc.variance *= f;
  acc.total *= f;
}

bool finite_breakdown(const LossBreakdown& b) {
  return std::isfinite(b.total) && std::isfinite(b.target) &&
         std::isfinite(b.recovery) && std::isfinite(b.amplitude) &&
         std::isfinite(b.variance);
}

// Music as the mixer sees it: volume-scaled then re-quantized to integers.
RealWindow scaled_music(const RealWindow& z, double rz) {
  RealWindow out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = static_cast<double>(quantize_sample(rz * z[i]));
  return out;
}

RealWindow scaled_sensing(const SensingSpec& spec, const WindowSpec& win,
                          int index, double rs) {
  RealWindow x = sensing_window(spec, win, index);
  for (double& v : x) v *= rs;
  return x;
}

struct WindowBatchResult {
  std::vector<ad::Tensor> grads;  // in ModelParams::for_each order
  LossBreakdown loss;
};

}  // namespace

void AdamState::step(ad::Tensor& param, const ad::Tensor& grad, double lr) {
  if (m_.count() == 0) {
    m_ = ad::Tensor(param.rows, param.cols);
    v_ = ad::Tensor(param.rows, param.cols);
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (int i = 0; i < param.count(); ++i) {
    const double g = grad.data[i];
    m_.data[i] = b1 * m_.data[i] + (1.0 - b1) * g;
    v_.data[i] = b2 * v_.data[i] + (1.0 - b2) * g * g;
    const double mhat = m_.data[i] / corr1;
    const double vhat = v_.data[i] / corr2;
    param.data[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
}

DatasetSplit split_dataset(int window_count, std::uint64_t seed) {
  if (window_count < 10)
    throw std::invalid_argument("split_dataset: need at least 10 windows");
  DatasetSplit s;
  const int test_count = window_count / 10;
  const int rest = window_count - test_count;
  for (int i = rest; i < window_count; ++i) s.test.push_back(i);

  std::vector<int> pool(rest);
  for (int i = 0; i < rest; ++i) pool[i] = i;
  Rng rng(seed);
  rng.shuffle(pool);
  const int train_count = static_cast<int>(rest * 0.8);
  s.train.assign(pool.begin(), pool.begin() + train_count);
  s.valid.assign(pool.begin() + train_count, pool.end());
  return s;
}

LossBreakdown evaluate_mean(const ModelParams& params,
                            const std::vector<RealWindow>& music,
                            const std::vector<int>& indices,
                            const SensingSpec& spec, const LossWeights& weights,
                            double rs, double rz, int num_threads) {
  const WindowSpec& win = params.config.window;
  std::vector<LossBreakdown> per(indices.size());
  parallel_for(static_cast<int>(indices.size()), num_threads, [&](int i) {
    const int idx = indices[i];
    const RealWindow x = scaled_sensing(spec, win, idx, rs);
    const RealWindow z = scaled_music(music[idx], rz);
    const ForwardResult fwd = forward(x, z, params);
    per[i] = total_loss(x, fwd.xhat, z, spec, win, weights);
  });
  LossBreakdown mean;
  for (const auto& b : per) add_breakdown(mean, b);
  if (!indices.empty()) scale_breakdown(mean, 1.0 / indices.size());
  return mean;
}

TrainResult train_model(const std::vector<RealWindow>& music,
                        const SensingSpec& spec, const ModelConfig& mconfig,
                        const TrainConfig& tconfig) {
  mconfig.validate();
  spec.validate(mconfig.window);
  if (tconfig.learning_rate <= 0.0)
    throw std::invalid_argument("train_model: learning_rate must be > 0");
  if (tconfig.epochs < 1)
    throw std::invalid_argument("train_model: epochs must be >= 1");
  if (spec.kind == Waveform::kSine && tconfig.weights.gamma != 0.0) {
    // variance loss is undefined over a single bin; enforced rather than
    // silently ignored
    throw std::invalid_argument(
        "train_model: sine spec requires gamma == 0 (variance loss needs >= 2 "
        "target bins)");
  }
  const WindowSpec& win = mconfig.window;
  for (const auto& z : music)
    if (static_cast<int>(z.size()) != win.size)
      throw std::invalid_argument("train_model: music window size mismatch");

  const TargetBins bins = target_bins_for(spec, win);

  TrainResult result;
  result.split = split_dataset(static_cast<int>(music.size()), tconfig.seed);
  ModelParams params = init_params(mconfig, tconfig.seed);

  std::vector<std::string> tensor_names;
  params.for_each([&](const std::string& name, ad::Tensor&) {
    tensor_names.push_back(name);
  });

  std::vector<AdamState> adam(tensor_names.size(), AdamState(tconfig.adam));

  result.init_valid = evaluate_mean(params, music, result.split.valid, spec,
                                    tconfig.weights, tconfig.rs, tconfig.rz,
                                    tconfig.num_threads);
  ModelParams best = params;
  LossBreakdown best_valid = result.init_valid;

  Rng shuffle_rng(tconfig.seed ^ 0x9e3779b97f4a7c15ull);

  auto window_pass = [&](int idx, WindowBatchResult& out) {
    const RealWindow x = scaled_sensing(spec, win, idx, tconfig.rs);
    const RealWindow z = scaled_music(music[idx], tconfig.rz);
    const Spectrum x_ref = rfft_mag(x, win);

    ad::Graph g;
    ModelGraph mg = build_forward_graph(g, params, x, z, true);
    LossNodes loss = build_loss_graph(g, mg.xhat, mg.mixed, x_ref, bins,
                                      tconfig.weights, spec.kind, win);
    g.backward(loss.total);
    out.loss = read_loss_values(g, loss);
    out.grads.reserve(mg.param_nodes.size());
    for (const auto& [name, node] : mg.param_nodes) out.grads.push_back(g.grad(node));
  };

  for (int epoch = 1; epoch <= tconfig.epochs; ++epoch) {
    std::vector<int> order = result.split.train;
    shuffle_rng.shuffle(order);

    LossBreakdown train_acc;
    int train_seen = 0;

    for (std::size_t start = 0; start < order.size();
         start += tconfig.batch_size) {
      const int count = static_cast<int>(
          std::min<std::size_t>(tconfig.batch_size, order.size() - start));
      std::vector<WindowBatchResult> batch(count);
      parallel_for(count, tconfig.num_threads, [&](int i) {
        window_pass(order[start + i], batch[i]);
      });

      // ordered deterministic reduction
      std::vector<ad::Tensor> grad_sum;
      for (int i = 0; i < count; ++i) {
        if (!finite_breakdown(batch[i].loss))
          throw numeric_error("train_model: non-finite loss at epoch " +
                              std::to_string(epoch) + "; aborting");
        if (grad_sum.empty()) {
          grad_sum = batch[i].grads;
        } else {
          for (std::size_t t = 0; t < grad_sum.size(); ++t)
            for (int j = 0; j < grad_sum[t].count(); ++j)
              grad_sum[t].data[j] += batch[i].grads[t].data[j];
        }
        add_breakdown(train_acc, batch[i].loss);
        ++train_seen;
      }
      const double inv = 1.0 / count;
      std::size_t t = 0;
      params.for_each([&](const std::string&, ad::Tensor& tensor) {
        for (int j = 0; j < grad_sum[t].count(); ++j) grad_sum[t].data[j] *= inv;
        adam[t].step(tensor, grad_sum[t], tconfig.learning_rate);
        ++t;
      });
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mean = train_acc;
    if (train_seen > 0) scale_breakdown(stats.train_mean, 1.0 / train_seen);
    stats.valid_mean =
        evaluate_mean(params, music, result.split.valid, spec, tconfig.weights,
                      tconfig.rs, tconfig.rz, tconfig.num_threads);
    if (!finite_breakdown(stats.valid_mean))
      throw numeric_error("train_model: non-finite validation loss at epoch " +
                          std::to_string(epoch));
    result.history.push_back(stats);

    if (stats.valid_mean.total < best_valid.total) {
      best_valid = stats.valid_mean;
      best = params;
    }
  }

  result.params = std::move(best);
  return result;
}

std::vector<AblationCell> run_ablation(const std::vector<RealWindow>& music,
                                       const SensingSpec& spec,
                                       const ModelConfig& mconfig,
                                       const TrainConfig& base) {
  std::vector<AblationCell> cells;

  auto run_cell = [&](const std::string& dim, const std::string& setting,
                      const ModelConfig& mc, const TrainConfig& tc) {
    TrainResult r = train_model(music, spec, mc, tc);
    AblationCell cell;
    cell.dimension = dim;
    cell.setting = setting;
    cell.test_mean = evaluate_mean(r.params, music, r.split.test, spec,
                                   tc.weights, tc.rs, tc.rz, tc.num_threads);
    cells.push_back(cell);
    return cell.test_mean;
  };

  // shared baseline: recovery weight 1.0 == volume 1:1 == sinc on
  TrainResult base_run = train_model(music, spec, mconfig, base);
  LossBreakdown base_mean =
      evaluate_mean(base_run.params, music, base_run.split.test, spec,
                    base.weights, base.rs, base.rz, base.num_threads);
  cells.push_back({"recovery_weight", "1.0", base_mean});

  for (double w : {1.2, 1.4, 1.6}) {
    TrainConfig tc = base;
    tc.weights.recovery_scale = w;
    char label[16];
    std::snprintf(label, sizeof label, "%.1f", w);
    run_cell("recovery_weight", label, mconfig, tc);
  }

  cells.push_back({"volume_ratio", "1.0:1.0", base_mean});
  for (auto [rs, rz] : {std::pair{0.8, 1.2}, std::pair{0.6, 1.4}}) {
    TrainConfig tc = base;
    tc.rs = rs;
    tc.rz = rz;
    char label[16];
    std::snprintf(label, sizeof label, "%.1f:%.1f", rs, rz);
    run_cell("volume_ratio", label, mconfig, tc);
  }

  cells.push_back({"sinc", "on", base_mean});
  ModelConfig no_sinc = mconfig;
  no_sinc.use_sinc = false;
  run_cell("sinc", "off", no_sinc, base);

  return cells;
}

namespace {

void write_csv_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed for " + path);
}

std::string breakdown_csv(const LossBreakdown& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g", b.target,
                b.recovery, b.amplitude, b.variance, b.total);
  return buf;
}

}  // namespace

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history) {
  std::string out = "epoch,split,target,recovery,amplitude,variance,total\n";
  for (const auto& row : history) {
    out += std::to_string(row.epoch) + ",train," +
           breakdown_csv(row.train_mean) + "\n";
    out += std::to_string(row.epoch) + ",valid," +
           breakdown_csv(row.valid_mean) + "\n";
  }
  write_csv_atomic(path, out);
}

void write_ablation_csv(const std::string& path,
                        const std::vector<AblationCell>& cells) {
  std::string out = "dimension,setting,target,recovery,amplitude,variance,total\n";
  for (const auto& c : cells)
    out += c.dimension + "," + c.setting + "," + breakdown_csv(c.test_mean) + "\n";
  write_csv_atomic(path, out);
}

}  // namespace sonomix
