#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sonomix/config.hpp"

namespace sonomix {

// Music windows for a run: a WAV file when `music_path` is non-empty
// (resampled to the configured rate), otherwise the configured synthetic
// corpus. Windows are integral PCM values; a padded final window is dropped.
std::vector<RealWindow> load_music_windows(const RunConfig& config,
                                           const std::string& music_path);

struct RespirationScenarioResult {
  std::string scenario;
  double mae_bpm = 0.0;
  double series_mean = 0.0;  // raw sensing-bin amplitude, pre band-pass
  std::vector<std::pair<double, double>> reports;
};

// Runs {no_music, cognitive, clip, down2, down4} over the same channel seed.
std::vector<RespirationScenarioResult> run_respiration_scenarios(
    const RunConfig& config, const ModelParams& cognitive_params);

// Command entry points; artifacts land in out_dir (created if missing) and
// are written atomically. All throw on failure; the CLI maps exceptions to
// exit codes.
void cmd_generate(const RunConfig& config, const std::string& out_dir);
void cmd_train(const RunConfig& config, const std::string& music_path,
               const std::string& out_dir);
void cmd_adapt(const RunConfig& config, const std::string& music_path,
               const std::string& out_dir);
void cmd_mix_baseline(const RunConfig& config, const std::string& music_path,
                      const std::string& out_dir);
void cmd_analyze(const RunConfig& config, const std::string& wav_path,
                 const std::string& out_dir);
void cmd_respiration_sim(const RunConfig& config, const std::string& out_dir);
void cmd_bench(const RunConfig& config, const std::string& out_dir);
void cmd_ablate(const RunConfig& config, const std::string& music_path,
                const std::string& out_dir);

}  // namespace sonomix
