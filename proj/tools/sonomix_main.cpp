#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "sonomix/commands.hpp"

namespace {

// exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure
constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;  // key=value
};

sonomix::RunConfig resolve_config(const GlobalArgs& args) {
  sonomix::RunConfig config;
  if (!args.config_path.empty()) config = sonomix::load_config(args.config_path);
  for (const auto& kv : args.overrides) sonomix::apply_config_line(config, kv);
  if (args.seed) config.seed = *args.seed;
  if (args.threads) config.threads = *args.threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ultrasonic sensing / audio coexistence toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  GlobalArgs global;
  app.add_option("--config", global.config_path, "key=value config file");
  app.add_option("--out", global.out_dir, "output directory");
  app.add_option("--seed", global.seed, "override the run seed");
  app.add_option("--threads", global.threads, "worker threads (0 = hardware)");
  app.add_option("--set", global.overrides,
                 "config override key=value (repeatable)");

  std::string music_path, wav_path, checkpoint, strategy, synth_kind;

  auto* generate = app.add_subcommand("generate", "write the sensing waveform");

  auto* train = app.add_subcommand("train", "train the scaling model");
  train->add_option("--music", music_path, "music WAV (default: synthetic)");
  train->add_option("--synth", synth_kind,
                    "synthetic corpus kind (low_tones|tone_cluster|noise_band|"
                    "speech_like)");

  auto* adapt = app.add_subcommand("adapt", "run the model over a music track");
  adapt->add_option("--music", music_path, "music WAV (default: synthetic)");
  adapt->add_option("--checkpoint", checkpoint, "trained checkpoint")
      ->required();

  auto* baseline = app.add_subcommand("mix-baseline", "clip/down2/down4 mixing");
  baseline->add_option("--music", music_path, "music WAV (default: synthetic)");
  baseline->add_option("--strategy", strategy, "clip|down2|down4");

  auto* analyze = app.add_subcommand("analyze", "spectrum + xcorr CSV for a WAV");
  analyze->add_option("wav", wav_path, "input WAV")->required();

  auto* sim = app.add_subcommand("respiration-sim",
                                 "closed-loop breathing simulation");
  sim->add_option("--checkpoint", checkpoint,
                  "trained checkpoint (default: train in place)");

  auto* bench = app.add_subcommand("bench", "forward + mix throughput");
  bench->add_option("--checkpoint", checkpoint, "checkpoint (default: init)");

  auto* ablate = app.add_subcommand("ablate", "loss-weight / volume / sinc grid");
  ablate->add_option("--music", music_path, "music WAV (default: synthetic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    sonomix::RunConfig config = resolve_config(global);
    if (!synth_kind.empty()) config.set("synth_kind", synth_kind);
    if (!strategy.empty()) config.set("strategy", strategy);
    if (!checkpoint.empty()) config.set("checkpoint", checkpoint);

    if (generate->parsed()) sonomix::cmd_generate(config, global.out_dir);
    if (train->parsed()) sonomix::cmd_train(config, music_path, global.out_dir);
    if (adapt->parsed()) sonomix::cmd_adapt(config, music_path, global.out_dir);
    if (baseline->parsed())
      sonomix::cmd_mix_baseline(config, music_path, global.out_dir);
    if (analyze->parsed()) sonomix::cmd_analyze(config, wav_path, global.out_dir);
    if (sim->parsed()) sonomix::cmd_respiration_sim(config, global.out_dir);
    if (bench->parsed()) sonomix::cmd_bench(config, global.out_dir);
    if (ablate->parsed()) sonomix::cmd_ablate(config, music_path, global.out_dir);
    return 0;
  } catch (const sonomix::numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  }
}
