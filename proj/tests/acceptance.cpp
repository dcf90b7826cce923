// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sonomix/commands.hpp"
#include "sonomix/dsp.hpp"
#include "sonomix/loss_graph.hpp"
#include "sonomix/mixer.hpp"
#include "sonomix/rng.hpp"
#include "sonomix/sensing.hpp"
#include "sonomix/train.hpp"

using namespace sonomix;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Criterion> g_results;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::fprintf(stderr, "[acceptance] %d %s: %s (%s)\n", id, name.c_str(),
               pass ? "pass" : "FAIL", detail.c_str());
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

const WindowSpec kWin{};

SensingSpec sine_spec() {
  SensingSpec s;
  s.kind = Waveform::kSine;
  return s;
}

SensingSpec chirp_spec() {
  SensingSpec s;
  s.kind = Waveform::kChirp;
  return s;
}

std::vector<RealWindow> corpus_windows(double seconds, std::uint64_t seed) {
  auto music = synth_music(MusicKind::kLowTones, seconds, seed);
  std::vector<RealWindow> windows;
  for (auto& f : frame_stream(music.samples, kWin))
    if (!f.padded) windows.push_back(dequantize(quantize(f.samples)));
  return windows;
}

TrainConfig sine_train_config() {
  TrainConfig tc;
  tc.weights.gamma = 0.0;
  tc.seed = 42;
  return tc;
}

// ---------------------------------------------------------------------------

void criterion_1_amplitude_floor() {
  RealWindow mixed(kWin.size);
  for (int i = 0; i < kWin.size; ++i) mixed[i] = (i % 2 == 0) ? 32767.0 : -32767.0;
  const double q = q_loss(mixed);
  const double expected = 1.0 - 1.0 / std::sqrt(512.0);
  const bool pass = std::abs(q - expected) < 1e-6 &&
                    std::abs(q - 0.9558) < 3e-4 && std::abs(q - 0.9560) < 3e-4;
  record(1, "amplitude-loss floor", pass,
         fmt("q=%.9f expected=%.9f", q, expected));
}

void criterion_2_loss_identities() {
  const RealWindow x = gen_sine(sine_spec(), kWin, 0);
  const Spectrum cx = rfft_mag(x, kWin);
  const TargetBins bins = target_bins_for(sine_spec(), kWin);
  auto [target, recovery] = p_loss(cx, cx, bins);

  TargetBins two;
  two.bins = {100, 101};
  Spectrum equal;
  equal.mags.assign(kWin.half(), 0.0);
  equal.mags[100] = equal.mags[101] = 0.42;
  const double s = s_loss(equal, two);

  const bool pass =
      std::abs(target) < 1e-9 && std::abs(recovery) < 1e-9 && std::abs(s) < 1e-9;
  record(2, "loss identity suite", pass,
         fmt("target=%.2e recovery=%.2e s=%.2e", target, recovery, s));
}

void criterion_3_gradient_oracle() {
  Rng seeds(1001);
  double worst = 0.0;
  int trials = 0;

  // per-op adjoint checks
  for (int trial = 0; trial < 100; ++trial) {
    ad::Graph g;
    std::mt19937 dummy;  // deterministic tensors via Rng below
    Rng rng(seeds.raw());
    auto tensor = [&](int r, int c, double lo, double hi) {
      ad::Tensor t(r, c);
      for (double& v : t.data) v = rng.uniform(lo, hi);
      return t;
    };
    ad::NodeId x = g.leaf(tensor(2, 6, 0.2, 1.5), true);
    ad::NodeId y = g.leaf(tensor(2, 6, 0.2, 1.5), true);
    ad::NodeId branch;
    switch (trial % 8) {
      case 0: branch = g.mul(g.tanh(x), g.sigmoid(y)); break;
      case 1: branch = g.sub(g.scale(x, 1.7), y); break;
      case 2: branch = g.magnitude(x, y); break;
      case 3: branch = g.magnitude(g.sub(x, y)); break;
      case 4: branch = g.concat_rows(g.tanh(x), y); break;
      case 5: branch = g.mul(x, g.add(x, y)); break;
      case 6: branch = g.tanh(g.add(x, g.scale(y, 0.5))); break;
      default: branch = g.sigmoid(g.mul(x, y)); break;
    }
    ad::NodeId out = (trial % 2 == 0) ? g.l2_norm(branch) : g.mean(branch);
    worst = std::max(worst, ad::grad_check(g, out, x));
    worst = std::max(worst, ad::grad_check(g, out, y));
    trials += 2;
  }

  // conv + reductions
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng(seeds.raw());
    ad::Graph g;
    ad::Tensor in(2, 16), w(3, 10), b(1, 3);
    for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : b.data) v = rng.uniform(-1.0, 1.0);
    ad::NodeId ni = g.leaf(in, true), nw = g.leaf(w, true), nb = g.leaf(b, true);
    ad::NodeId out =
        (trial % 2 == 0)
            ? g.l2_norm(g.tanh(g.conv1d(ni, nw, nb, 5, 1 + trial % 3)))
            : g.stddev(g.tanh(g.conv1d(ni, nw, nb, 5, 1)));
    worst = std::max(worst, ad::grad_check(g, out, ni));
    worst = std::max(worst, ad::grad_check(g, out, nw));
    worst = std::max(worst, ad::grad_check(g, out, nb));
    trials += 3;
  }

  // every sub-loss against a free xhat vector
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(seeds.raw());
    const SensingSpec spec = (trial % 2 == 0) ? sine_spec() : chirp_spec();
    const RealWindow x = sensing_window(spec, kWin, trial);
    RealWindow xhat(kWin.size), z(kWin.size);
    for (auto& v : xhat) v = rng.uniform(-0.4, 0.4) * kPcmMax;
    for (auto& v : z)
      v = static_cast<double>(quantize_sample(rng.uniform(-0.4, 0.4) * kPcmMax));

    ad::Graph g;
    ad::NodeId xh = g.leaf(ad::Tensor::from_vector(xhat), true);
    ad::NodeId zn = g.leaf(ad::Tensor::from_vector(z));
    ad::NodeId mixed = g.add(xh, zn);
    LossWeights weights;
    if (spec.kind == Waveform::kSine) weights.gamma = 0.0;
    LossNodes nodes =
        build_loss_graph(g, xh, mixed, rfft_mag(x, kWin),
                         target_bins_for(spec, kWin), weights, spec.kind, kWin);
    for (ad::NodeId node : {nodes.target, nodes.recovery, nodes.amplitude,
                            nodes.variance, nodes.total}) {
      if (node < 0) continue;
      worst = std::max(worst, ad::grad_check(g, node, xh));
      ++trials;
    }
  }

  // end-to-end: every model parameter tensor through the full objective
  for (auto spec : {sine_spec(), chirp_spec()}) {
    ModelParams params = init_params(ModelConfig{}, 11);
    Rng rng(seeds.raw());
    const RealWindow x = sensing_window(spec, kWin, 0);
    RealWindow z(kWin.size);
    for (auto& v : z)
      v = static_cast<double>(quantize_sample(rng.uniform(-0.4, 0.4) * kPcmMax));
    LossWeights weights;
    if (spec.kind == Waveform::kSine) weights.gamma = 0.0;

    ad::Graph g;
    ModelGraph mg = build_forward_graph(g, params, x, z, false);
    LossNodes nodes =
        build_loss_graph(g, mg.xhat, mg.mixed, rfft_mag(x, kWin),
                         target_bins_for(spec, kWin), weights, spec.kind, kWin);
    for (const auto& [name, node] : mg.param_nodes) {
      worst = std::max(worst, ad::grad_check(g, nodes.total, node, 1e-4));
      ++trials;
    }
  }

  record(3, "gradient oracle", worst < 1e-5 && trials >= 100,
         fmt("max rel err %.3e over %d trials", worst, trials));
}

void criterion_4_range_guarantee() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    ModelParams p = init_params(ModelConfig{}, trial);
    const double boost = rng.uniform(0.5, 20.0);
    p.for_each([&](const std::string&, ad::Tensor& t) {
      for (double& v : t.data) v *= boost;
    });
    RealWindow x(kWin.size), z(kWin.size);
    for (auto& v : x) v = rng.uniform(-kPcmMax, kPcmMax);
    for (auto& v : z) v = rng.uniform(-kPcmMax, kPcmMax);
    const ForwardResult fwd = forward(x, z, p);
    for (int t = 0; t < kWin.size; ++t)
      worst = std::max(worst, std::abs(fwd.mixed_pre[t]));
  }
  record(4, "range guarantee", worst <= kPcmMax,
         fmt("max |xhat+z| = %.6f over 1000 triples (m=%d)", worst, kPcmMax));
}

void criterion_5_xcorr_shift() {
  const RealWindow chirp = gen_chirp(chirp_spec(), kWin);
  Rng rng(99);
  bool pass = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int k = static_cast<int>(rng.below(512));
    const auto rolled = oracle::roll(chirp, k);
    const auto profile = xcorr_profile(chirp, rolled);
    if (oracle::argmax(profile) != static_cast<std::size_t>(k)) pass = false;
  }
  record(5, "xcorr shift property", pass, "20 random shifts, peak at lag k");
}

void criterion_6_am_sidebands() {
  const Spectrum s = am_sidebands(18750.0, 937.5, 1.0, kWin);
  const double lower = s.mags[190] / s.mags[200];
  const double upper = s.mags[210] / s.mags[200];
  const bool pass =
      std::abs(lower - 0.5) < 1e-3 && std::abs(upper - 0.5) < 1e-3;
  record(6, "AM sideband identity", pass,
         fmt("lsb=%.6f usb=%.6f carrier-normalized", lower, upper));
}

void criterion_7_baseline_db() {
  const RealWindow x = gen_sine(sine_spec(), kWin, 0);
  const auto music = corpus_windows(0.1, 3);
  const RealWindow& z = music.front();

  const auto d2 = mix(x, z, {StrategyKind::kDownscale2}, sine_spec(), kWin);
  const auto d4 = mix(x, z, {StrategyKind::kDownscale4}, sine_spec(), kWin);
  const bool pass = std::abs(d2.sensing_attenuation_db + 6.02) < 0.1 &&
                    std::abs(d4.sensing_attenuation_db + 12.04) < 0.1;
  record(7, "baseline dB checks", pass,
         fmt("down2=%.3f dB down4=%.3f dB", d2.sensing_attenuation_db,
             d4.sensing_attenuation_db));
}

TrainResult criterion_8_training(const std::vector<RealWindow>& corpus) {
  TrainResult result =
      train_model(corpus, sine_spec(), ModelConfig{}, sine_train_config());
  const auto& last = result.history.back();
  const bool pass =
      last.valid_mean.recovery < 0.05 && last.valid_mean.amplitude < 0.97;
  record(8, "desk-scale training", pass,
         fmt("valid recovery=%.5f amplitude=%.5f (10 epochs, %zu windows)",
             last.valid_mean.recovery, last.valid_mean.amplitude,
             corpus.size()));
  return result;
}

void criterion_9_ablations(const std::vector<RealWindow>& corpus) {
  const auto cells =
      run_ablation(corpus, sine_spec(), ModelConfig{}, sine_train_config());

  double recovery_at_1 = -1.0, recovery_at_16 = -1.0;
  double vol_min = 1e30, vol_max = -1e30;
  double sinc_on = -1.0, sinc_off = -1.0;
  for (const auto& c : cells) {
    if (c.dimension == "recovery_weight" && c.setting == "1.0")
      recovery_at_1 = c.test_mean.recovery;
    if (c.dimension == "recovery_weight" && c.setting == "1.6")
      recovery_at_16 = c.test_mean.recovery;
    if (c.dimension == "volume_ratio") {
      vol_min = std::min(vol_min, c.test_mean.total);
      vol_max = std::max(vol_max, c.test_mean.total);
    }
    if (c.dimension == "sinc" && c.setting == "on") sinc_on = c.test_mean.total;
    if (c.dimension == "sinc" && c.setting == "off") sinc_off = c.test_mean.total;
  }

  const bool weight_ok = recovery_at_16 <= recovery_at_1;
  const bool volume_ok = vol_max < 2.0 * vol_min;
  const bool sinc_ok = sinc_on <= sinc_off;
  record(9, "ablation directions", weight_ok && volume_ok && sinc_ok,
         fmt("recovery 1.0:%.5f -> 1.6:%.5f | total range %.4f..%.4f | "
             "sinc on %.4f vs off %.4f",
             recovery_at_1, recovery_at_16, vol_min, vol_max, sinc_on,
             sinc_off));
}

void criterion_10_respiration(const ModelParams& trained) {
  RunConfig config;
  config.sim_seconds = 90.0;
  config.seed = 1;

  bool pass = true;
  std::string detail;
  for (double bpm : {12.0, 15.0, 18.0}) {
    config.ch_bpm = bpm;
    const auto results = run_respiration_scenarios(config, trained);
    double no_music_mae = -1, cognitive_mae = -1, clip_mae = -1;
    double no_music_mean = -1, down4_mean = -1;
    for (const auto& r : results) {
      if (r.scenario == "no_music") {
        no_music_mae = r.mae_bpm;
        no_music_mean = r.series_mean;
      }
      if (r.scenario == "cognitive") cognitive_mae = r.mae_bpm;
      if (r.scenario == "clip") clip_mae = r.mae_bpm;
      if (r.scenario == "down4") down4_mean = r.series_mean;
    }
    const bool ok = no_music_mae < 1.0 && cognitive_mae < 1.0 &&
                    clip_mae >= cognitive_mae &&
                    down4_mean <= 0.3 * no_music_mean;
    pass = pass && ok;
    detail += fmt("[bpm %.0f: none=%.2f cog=%.2f clip=%.2f d4amp=%.2fx] ", bpm,
                  no_music_mae, cognitive_mae, clip_mae,
                  down4_mean / no_music_mean);
  }
  record(10, "closed-loop respiration", pass, detail);
}

void criterion_11_distortion_ordering(const std::vector<RealWindow>& corpus) {
  // Fig. 1's regime is music at playback volume against a full-scale sensing
  // tone, i.e. a heavily overloaded mixer: train and test at the 1:1.4
  // sensing:music ratio from the volume sweep.
  const double rz = 1.4;
  TrainConfig tc = sine_train_config();
  tc.rz = rz;
  const ModelParams trained =
      train_model(corpus, sine_spec(), ModelConfig{}, tc).params;

  const TargetBins bins = target_bins_for(sine_spec(), kWin);
  const auto music = corpus_windows(15.0, 7);

  int compared = 0, cognitive_wins = 0;
  MixerStrategy cog{StrategyKind::kCognitive, &trained};
  for (std::size_t i = 0; i < music.size() && compared < 100; ++i) {
    const RealWindow x = gen_sine(sine_spec(), kWin, i * kWin.size);
    RealWindow z(kWin.size);
    for (int t = 0; t < kWin.size; ++t)
      z[t] = static_cast<double>(quantize_sample(rz * music[i][t]));
    if (overload_fraction(x, z) <= 0.0) continue;  // overloading inputs only
    ++compared;
    const auto clip = mix(x, z, {StrategyKind::kClip}, sine_spec(), kWin);
    const auto adaptive = mix(x, z, cog, sine_spec(), kWin);
    const double d_clip = distortion_energy(clip.mixed, x, bins, kWin);
    const double d_cog = distortion_energy(adaptive.mixed, x, bins, kWin);
    if (d_clip > d_cog) ++cognitive_wins;
  }
  const bool pass = compared == 100 && cognitive_wins >= 95;
  record(11, "distortion ordering", pass,
         fmt("clip > cognitive in %d/%d overloading windows", cognitive_wins,
             compared));
}

void criterion_12_realtime(const ModelParams& trained) {
  const auto music = corpus_windows(6.0, 5);
  const int count = static_cast<int>(music.size());

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  double checksum = 0.0;
  for (int i = 0; i < count; ++i) {
    const RealWindow x = gen_sine(sine_spec(), kWin, i * kWin.size);
    const ForwardResult fwd = forward(x, music[i], trained);
    RealWindow mixed(kWin.size);
    for (int t = 0; t < kWin.size; ++t) mixed[t] = fwd.xhat[t] + music[i][t];
    checksum += quantize(mixed)[0];
  }
  const auto t1 = clock::now();
  (void)checksum;

  const double seconds = std::chrono::duration<double>(t1 - t0).count();
  const double ms_per_window = 1000.0 * seconds / count;
  const double rate = count / seconds;
  const double budget = 1000.0 * 512.0 / 48000.0;  // 10.67 ms
  const bool pass = ms_per_window < budget && rate >= 100.0;
  record(12, "real-time budget", pass,
         fmt("%.3f ms/window (budget %.2f), %.0f windows/s", ms_per_window,
             budget, rate));
}

}  // namespace

int main() {
  criterion_1_amplitude_floor();
  criterion_2_loss_identities();
  criterion_3_gradient_oracle();
  criterion_4_range_guarantee();
  criterion_5_xcorr_shift();
  criterion_6_am_sidebands();
  criterion_7_baseline_db();

  const auto corpus = corpus_windows(20.0, 42);
  TrainResult trained = criterion_8_training(corpus);
  criterion_9_ablations(corpus);
  criterion_10_respiration(trained.params);
  criterion_11_distortion_ordering(corpus);
  criterion_12_realtime(trained.params);

  int failures = 0;
  std::printf("\n=== acceptance criteria ===\n");
  for (const auto& c : g_results) {
    std::printf("%s criterion %2d: %-26s %s\n", c.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), c.detail.c_str());
    if (!c.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
              g_results.size());
  return failures == 0 ? 0 : 1;
}
