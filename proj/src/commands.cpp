#include "sonomix/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "sonomix/dsp.hpp"
#include "sonomix/loss_graph.hpp"

namespace sonomix {

namespace fs = std::filesystem;

namespace {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed for " + path);
}

std::string prepare_out_dir(const RunConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "config_used.txt").string(),
                    config.dump());
  return out_dir;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_checkpoint_matches(const ModelParams& params, const RunConfig& config) {
  const WindowSpec want = config.window();
  if (params.config.window.size != want.size ||
      params.config.window.sample_rate != want.sample_rate)
    throw std::invalid_argument(
        "checkpoint window spec does not match the configured spec");
}

ModelParams cognitive_params_for(const RunConfig& config) {
  if (!config.checkpoint.empty()) {
    ModelParams p = load_checkpoint_file(config.checkpoint);
    check_checkpoint_matches(p, config);
    return p;
  }
  // self-contained: train on the configured synthetic corpus
  auto music = load_music_windows(config, "");
  return train_model(music, config.sensing(), config.model(), config.train())
      .params;
}

}  // namespace

std::vector<RealWindow> load_music_windows(const RunConfig& config,
                                           const std::string& music_path) {
  const WindowSpec win = config.window();
  AudioBuffer buffer;
  if (music_path.empty()) {
    buffer = synth_music(config.music_kind(), config.synth_seconds, config.seed);
  } else {
    buffer = read_wav(music_path);
    if (buffer.sample_rate != win.sample_rate)
      buffer = resample_linear(buffer, win.sample_rate);
  }
  std::vector<RealWindow> windows;
  for (auto& frame : frame_stream(buffer.samples, win))
    if (!frame.padded)
      windows.push_back(dequantize(quantize(frame.samples)));
  if (windows.empty())
    throw std::runtime_error("input shorter than one window");
  return windows;
}

void cmd_generate(const RunConfig& config, const std::string& out_dir) {
  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();
  spec.validate(win);
  prepare_out_dir(config, out_dir);

  const int count =
      std::max(1, static_cast<int>(config.synth_seconds * win.sample_rate) /
                      win.size);
  AudioBuffer out;
  out.sample_rate = win.sample_rate;
  out.samples.reserve(static_cast<std::size_t>(count) * win.size);
  for (int k = 0; k < count; ++k) {
    auto w = sensing_window(spec, win, k);
    out.samples.insert(out.samples.end(), w.begin(), w.end());
  }
  write_wav((fs::path(out_dir) / "sensing.wav").string(), out);

  const Spectrum s = rfft_mag(sensing_window(spec, win, 0), win);
  std::string csv = "bin,hz,mag\n";
  for (std::size_t k = 0; k < s.mags.size(); ++k)
    csv += std::to_string(k) + "," + csv_num(k * s.bin_hz) + "," +
           csv_num(s.mags[k]) + "\n";
  write_file_atomic((fs::path(out_dir) / "sensing_spectrum.csv").string(), csv);
}

void cmd_train(const RunConfig& config, const std::string& music_path,
               const std::string& out_dir) {
  auto music = load_music_windows(config, music_path);
  TrainResult result =
      train_model(music, config.sensing(), config.model(), config.train());
  prepare_out_dir(config, out_dir);
  save_checkpoint((fs::path(out_dir) / "checkpoint.txt").string(), result.params);
  write_history_csv((fs::path(out_dir) / "loss_history.csv").string(),
                    result.history);

  const auto& last = result.history.back();
  std::printf("trained %d epochs on %zu windows\n", config.epochs, music.size());
  std::printf("valid: target=%.4f recovery=%.5f amplitude=%.5f total=%.4f\n",
              last.valid_mean.target, last.valid_mean.recovery,
              last.valid_mean.amplitude, last.valid_mean.total);
}

void cmd_adapt(const RunConfig& config, const std::string& music_path,
               const std::string& out_dir) {
  if (config.checkpoint.empty())
    throw std::invalid_argument("adapt requires checkpoint=PATH");
  ModelParams params = load_checkpoint_file(config.checkpoint);
  check_checkpoint_matches(params, config);

  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();
  auto music = load_music_windows(config, music_path);
  const LossWeights weights = config.weights();

  AudioBuffer mixed_out;
  mixed_out.sample_rate = win.sample_rate;
  std::string csv =
      "window,target,recovery,amplitude,variance,total,peak,latency_ms\n";
  double total_latency_ms = 0.0;

  for (std::size_t i = 0; i < music.size(); ++i) {
    const RealWindow x = sensing_window(spec, win, static_cast<int>(i));
    const RealWindow& z = music[i];

    const auto t0 = std::chrono::steady_clock::now();
    const ForwardResult fwd = forward(x, z, params);
    RealWindow mixed(win.size);
    for (int t = 0; t < win.size; ++t) mixed[t] = fwd.xhat[t] + z[t];
    const PcmWindow pcm = quantize(mixed);
    const auto t1 = std::chrono::steady_clock::now();

    const double latency_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    total_latency_ms += latency_ms;

    const LossBreakdown b = total_loss(x, fwd.xhat, z, spec, win, weights);
    double peak = 0.0;
    for (std::int16_t v : pcm) peak = std::max(peak, std::abs(double(v)));
    csv += std::to_string(i) + "," + csv_num(b.target) + "," +
           csv_num(b.recovery) + "," + csv_num(b.amplitude) + "," +
           csv_num(b.variance) + "," + csv_num(b.total) + "," + csv_num(peak) +
           "," + csv_num(latency_ms) + "\n";
    for (std::int16_t v : pcm) mixed_out.samples.push_back(double(v));
  }

  prepare_out_dir(config, out_dir);
  write_wav((fs::path(out_dir) / "adapted.wav").string(), mixed_out);
  write_file_atomic((fs::path(out_dir) / "adapt_metrics.csv").string(), csv);

  const double mean_ms = total_latency_ms / music.size();
  const double budget_ms = 1000.0 * win.size / win.sample_rate;
  std::printf("mean per-window latency %.3f ms (budget %.2f ms): %s\n", mean_ms,
              budget_ms, mean_ms < budget_ms ? "real-time" : "OVER BUDGET");
}

void cmd_mix_baseline(const RunConfig& config, const std::string& music_path,
                      const std::string& out_dir) {
  const StrategyKind kind = config.strategy_kind();
  if (kind == StrategyKind::kCognitive)
    throw std::invalid_argument(
        "mix-baseline takes clip|down2|down4; use adapt for the model");
  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();
  const TargetBins bins = target_bins_for(spec, win);
  auto music = load_music_windows(config, music_path);

  MixerStrategy strategy{kind};
  strategy.downscale4_uniform = config.down4_uniform;

  AudioBuffer mixed_out;
  mixed_out.sample_rate = win.sample_rate;
  std::string csv = "window,overloaded,peak,attenuation_db,distortion\n";
  for (std::size_t i = 0; i < music.size(); ++i) {
    const RealWindow x = sensing_window(spec, win, static_cast<int>(i));
    const MixResult r = mix(x, music[i], strategy, spec, win);
    csv += std::to_string(i) + "," + std::to_string(r.overloaded ? 1 : 0) +
           "," + csv_num(r.peak_level) + "," +
           csv_num(r.sensing_attenuation_db) + "," +
           csv_num(distortion_energy(r.mixed, x, bins, win)) + "\n";
    for (std::int16_t v : r.mixed) mixed_out.samples.push_back(double(v));
  }

  prepare_out_dir(config, out_dir);
  write_wav((fs::path(out_dir) / "baseline_mixed.wav").string(), mixed_out);
  write_file_atomic((fs::path(out_dir) / "baseline_metrics.csv").string(), csv);
}

void cmd_analyze(const RunConfig& config, const std::string& wav_path,
                 const std::string& out_dir) {
  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();
  AudioBuffer buffer = read_wav(wav_path);
  if (buffer.sample_rate != win.sample_rate)
    buffer = resample_linear(buffer, win.sample_rate);
  auto frames = frame_stream(buffer.samples, win);

  const RealWindow tmpl = sensing_window(spec, win, 0);

  std::string spectrum_csv = "window,bin,hz,mag\n";
  std::string xcorr_csv = "window,lag,value\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Spectrum s = rfft_mag(frames[k].samples, win);
    for (std::size_t b = 0; b < s.mags.size(); ++b)
      spectrum_csv += std::to_string(k) + "," + std::to_string(b) + "," +
                      csv_num(b * s.bin_hz) + "," + csv_num(s.mags[b]) + "\n";
    const auto prof = xcorr_profile(tmpl, frames[k].samples);
    for (std::size_t lag = 0; lag < prof.size(); ++lag)
      xcorr_csv += std::to_string(k) + "," + std::to_string(lag) + "," +
                   csv_num(prof[lag]) + "\n";
  }

  prepare_out_dir(config, out_dir);
  write_file_atomic((fs::path(out_dir) / "spectrum.csv").string(), spectrum_csv);
  write_file_atomic((fs::path(out_dir) / "xcorr.csv").string(), xcorr_csv);
}

std::vector<RespirationScenarioResult> run_respiration_scenarios(
    const RunConfig& config, const ModelParams& cognitive_params) {
  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();
  const TargetBins bins = target_bins_for(spec, win);
  const ChannelSpec channel = config.channel();

  const int count = static_cast<int>(config.sim_seconds * win.sample_rate) /
                    win.size;
  if (count < 1) throw std::invalid_argument("sim_seconds too short");

  // one shared music stream; no_music uses silence
  RunConfig music_config = config;
  music_config.synth_seconds = config.sim_seconds + 1.0;
  auto music = load_music_windows(music_config, "");
  if (static_cast<int>(music.size()) < count)
    throw std::runtime_error("synthetic music shorter than the simulation");

  const std::vector<std::string> scenarios = {"no_music", "cognitive", "clip",
                                              "down2", "down4"};
  std::vector<RespirationScenarioResult> results;
  for (const auto& scenario : scenarios) {
    std::vector<RealWindow> tx(count);
    for (int i = 0; i < count; ++i) {
      const RealWindow x = sensing_window(spec, win, i);
      if (scenario == "no_music") {
        tx[i] = dequantize(quantize(x));
        continue;
      }
      const RealWindow& z = music[i];
      if (scenario == "cognitive") {
        MixerStrategy strat{StrategyKind::kCognitive, &cognitive_params};
        tx[i] = dequantize(mix(x, z, strat, spec, win).mixed);
      } else {
        MixerStrategy strat{strategy_from_name(scenario)};
        tx[i] = dequantize(mix(x, z, strat, spec, win).mixed);
      }
    }

    auto rx = simulate_channel(tx, channel, win, config.seed);
    auto series = breath_series(rx, bins.bins.front(), win);
    auto reports = detect_bpm(series);

    RespirationScenarioResult r;
    r.scenario = scenario;
    r.reports = reports;
    for (auto& [t, bpm] : reports) r.mae_bpm += std::abs(bpm - channel.bpm);
    if (!reports.empty()) r.mae_bpm /= reports.size();
    for (double v : series.values) r.series_mean += v;
    r.series_mean /= series.values.size();
    results.push_back(std::move(r));
  }
  return results;
}

void cmd_respiration_sim(const RunConfig& config, const std::string& out_dir) {
  const ModelParams params = cognitive_params_for(config);
  auto results = run_respiration_scenarios(config, params);

  std::string csv = "scenario,mae_bpm,series_mean\n";
  std::string detail = "scenario,time_s,bpm\n";
  for (const auto& r : results) {
    csv += r.scenario + "," + csv_num(r.mae_bpm) + "," +
           csv_num(r.series_mean) + "\n";
    for (auto& [t, bpm] : r.reports)
      detail += r.scenario + "," + csv_num(t) + "," + csv_num(bpm) + "\n";
    std::printf("%-10s mae=%.3f bpm, series mean=%.4f\n", r.scenario.c_str(),
                r.mae_bpm, r.series_mean);
  }
  prepare_out_dir(config, out_dir);
  write_file_atomic((fs::path(out_dir) / "bpm_report.csv").string(), csv);
  write_file_atomic((fs::path(out_dir) / "bpm_detail.csv").string(), detail);
}

void cmd_bench(const RunConfig& config, const std::string& out_dir) {
  ModelParams params;
  if (!config.checkpoint.empty()) {
    params = load_checkpoint_file(config.checkpoint);
    check_checkpoint_matches(params, config);
  } else {
    params = init_params(config.model(), config.seed);
  }
  const WindowSpec win = config.window();
  const SensingSpec spec = config.sensing();

  RunConfig music_config = config;
  music_config.synth_seconds =
      std::max(1.0, config.bench_windows * win.size / win.sample_rate + 1.0);
  auto music = load_music_windows(music_config, "");
  const int count = std::min<int>(config.bench_windows,
                                  static_cast<int>(music.size()));

  auto run_one = [&](int i) {
    const RealWindow x = sensing_window(spec, win, i);
    const ForwardResult fwd = forward(x, music[i], params);
    RealWindow mixed(win.size);
    for (int t = 0; t < win.size; ++t) mixed[t] = fwd.xhat[t] + music[i][t];
    return quantize(mixed);
  };

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  volatile std::int16_t sink = 0;
  for (int i = 0; i < count; ++i) sink = run_one(i)[0];
  const auto t1 = clock::now();
  (void)sink;
  const double single_s = std::chrono::duration<double>(t1 - t0).count();

  const auto t2 = clock::now();
  {
    std::vector<std::thread> pool;
    const int threads =
        config.threads > 0
            ? config.threads
            : static_cast<int>(std::thread::hardware_concurrency());
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < count; i += threads) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  const auto t3 = clock::now();
  const double parallel_s = std::chrono::duration<double>(t3 - t2).count();

  const double single_rate = count / single_s;
  const double parallel_rate = count / parallel_s;
  const double ms_per_window = 1000.0 * single_s / count;
  const double budget_ms = 1000.0 * win.size / win.sample_rate;
  const int param_bytes = params.scalar_count() * 8;

  std::ostringstream report;
  report << "windows," << count << "\n";
  report << "single_thread_windows_per_s," << csv_num(single_rate) << "\n";
  report << "parallel_windows_per_s," << csv_num(parallel_rate) << "\n";
  report << "ms_per_window," << csv_num(ms_per_window) << "\n";
  report << "budget_ms," << csv_num(budget_ms) << "\n";
  report << "real_time," << (ms_per_window < budget_ms ? 1 : 0) << "\n";
  report << "param_bytes," << param_bytes << "\n";

  prepare_out_dir(config, out_dir);
  write_file_atomic((fs::path(out_dir) / "bench.csv").string(), report.str());
  std::printf("%s", report.str().c_str());
}

void cmd_ablate(const RunConfig& config, const std::string& music_path,
                const std::string& out_dir) {
  auto music = load_music_windows(config, music_path);
  auto cells =
      run_ablation(music, config.sensing(), config.model(), config.train());
  prepare_out_dir(config, out_dir);
  write_ablation_csv((fs::path(out_dir) / "ablation.csv").string(), cells);
  for (const auto& c : cells)
    std::printf("%-16s %-10s total=%.4f recovery=%.5f\n", c.dimension.c_str(),
                c.setting.c_str(), c.test_mean.total, c.test_mean.recovery);
}

}  // namespace sonomix
