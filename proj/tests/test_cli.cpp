#include "sonomix/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "sonomix/dsp.hpp"

using namespace sonomix;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sonomix_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig tiny_train_config() {
  RunConfig c;
  c.synth_seconds = 2.0;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("config serialization round-trips and rejects junk") {
  RunConfig c;
  c.set("kind", "chirp");
  c.set("lr", "0.05");
  c.set("use_sinc", "0");
  c.set("seed", "99");
  CHECK(c.kind == "chirp");
  CHECK(c.lr == 0.05);
  CHECK_FALSE(c.use_sinc);

  const std::string dumped = c.dump();
  RunConfig parsed;
  std::istringstream lines(dumped);
  std::string line;
  while (std::getline(lines, line)) apply_config_line(parsed, line);
  CHECK(parsed.dump() == dumped);

  CHECK_THROWS_AS(c.set("volume", "11"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("lr", "fast"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("kind", "square"), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_line(c, "no_equals_here"), std::invalid_argument);

  // comments and blanks are fine
  apply_config_line(c, "# comment");
  apply_config_line(c, "");
}

TEST_CASE("generate then analyze finds the sensing tone") {
  TempDir dir;
  RunConfig c;
  c.synth_seconds = 0.2;
  cmd_generate(c, dir.sub("gen"));
  CHECK(fs::exists(dir.sub("gen") + "/sensing.wav"));
  CHECK(fs::exists(dir.sub("gen") + "/sensing_spectrum.csv"));
  CHECK(fs::exists(dir.sub("gen") + "/config_used.txt"));

  cmd_analyze(c, dir.sub("gen") + "/sensing.wav", dir.sub("ana"));
  const std::string spectrum = slurp(dir.sub("ana") + "/spectrum.csv");

  // window 0's dominant row should be bin 192 with magnitude ~1
  std::istringstream in(spectrum);
  std::string line;
  std::getline(in, line);  // header
  int best_bin = -1;
  double best_mag = -1.0;
  while (std::getline(in, line)) {
    if (line.rfind("0,", 0) != 0) break;
    const auto p1 = line.find(',');
    const auto p2 = line.find(',', p1 + 1);
    const auto p3 = line.find(',', p2 + 1);
    const int bin = std::stoi(line.substr(p1 + 1, p2 - p1 - 1));
    const double mag = std::stod(line.substr(p3 + 1));
    if (mag > best_mag) {
      best_mag = mag;
      best_bin = bin;
    }
  }
  CHECK(best_bin == 192);
  CHECK(best_mag > 0.99);

  CHECK_THROWS_AS(cmd_analyze(c, dir.sub("missing.wav"), dir.sub("ana2")),
                  std::runtime_error);
}

TEST_CASE("train, adapt, baseline pipeline") {
  TempDir dir;
  RunConfig c = tiny_train_config();

  cmd_train(c, "", dir.sub("train"));
  const std::string checkpoint = dir.sub("train") + "/checkpoint.txt";
  REQUIRE(fs::exists(checkpoint));
  REQUIRE(fs::exists(dir.sub("train") + "/loss_history.csv"));

  // history has one train and one valid row per epoch
  {
    std::istringstream in(slurp(dir.sub("train") + "/loss_history.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,split,target,recovery,amplitude,variance,total");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2 * c.epochs);
  }

  SUBCASE("determinism: identical run, identical artifacts") {
    cmd_train(c, "", dir.sub("train2"));
    CHECK(slurp(dir.sub("train2") + "/loss_history.csv") ==
          slurp(dir.sub("train") + "/loss_history.csv"));
    CHECK(slurp(dir.sub("train2") + "/checkpoint.txt") == slurp(checkpoint));
  }

  SUBCASE("adapt stays in range and reports latency") {
    RunConfig ac = c;
    ac.checkpoint = checkpoint;
    cmd_adapt(ac, "", dir.sub("adapt"));
    auto wav = read_wav(dir.sub("adapt") + "/adapted.wav");
    for (double v : wav.samples) {
      CHECK(v <= kPcmMax);
      CHECK(v >= -kPcmMax);
    }
    const std::string metrics = slurp(dir.sub("adapt") + "/adapt_metrics.csv");
    CHECK(metrics.find("latency_ms") != std::string::npos);

    RunConfig mismatched = ac;
    mismatched.window_size = 1024;
    CHECK_THROWS_AS(cmd_adapt(mismatched, "", dir.sub("adapt2")),
                    std::invalid_argument);
  }

  SUBCASE("adapt requires a checkpoint") {
    CHECK_THROWS_AS(cmd_adapt(c, "", dir.sub("adapt3")), std::invalid_argument);
  }

  SUBCASE("baseline emits attenuation near -6 dB for down2") {
    RunConfig bc = c;
    bc.strategy = "down2";
    cmd_mix_baseline(bc, "", dir.sub("base"));
    std::istringstream in(slurp(dir.sub("base") + "/baseline_metrics.csv"));
    std::string line;
    std::getline(in, line);  // header
    REQUIRE(std::getline(in, line));
    // window,overloaded,peak,attenuation_db,distortion
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = line.find(',', pos) + 1;
    const double att = std::stod(line.substr(pos));
    CHECK(att == doctest::Approx(-6.02).epsilon(0.02));

    RunConfig cogc = c;
    cogc.strategy = "cognitive";
    CHECK_THROWS_AS(cmd_mix_baseline(cogc, "", dir.sub("base2")),
                    std::invalid_argument);
  }
}

TEST_CASE("missing music file fails without leaving artifacts") {
  TempDir dir;
  RunConfig c = tiny_train_config();
  CHECK_THROWS_AS(cmd_train(c, dir.sub("nope.wav"), dir.sub("train")),
                  std::runtime_error);
  CHECK_FALSE(fs::exists(dir.sub("train") + "/checkpoint.txt"));
}

TEST_CASE("bench reports positive throughput") {
  TempDir dir;
  RunConfig c;
  c.bench_windows = 40;
  cmd_bench(c, dir.sub("bench"));
  const std::string report = slurp(dir.sub("bench") + "/bench.csv");
  CHECK(report.find("single_thread_windows_per_s") != std::string::npos);
  CHECK(report.find("param_bytes,880") != std::string::npos);
}

TEST_CASE("respiration sim writes per-scenario MAE") {
  TempDir dir;
  RunConfig c = tiny_train_config();
  c.sim_seconds = 40.0;
  c.ch_noise = 2.0;
  cmd_respiration_sim(c, dir.sub("sim"));
  const std::string report = slurp(dir.sub("sim") + "/bpm_report.csv");
  for (const char* name : {"no_music", "cognitive", "clip", "down2", "down4"})
    CHECK(report.find(name) != std::string::npos);
  CHECK(fs::exists(dir.sub("sim") + "/bpm_detail.csv"));
}

TEST_CASE("cli binary maps errors to exit codes") {
  TempDir dir;
  const std::string cli = SONOMIX_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("generate --out " + dir.sub("g") + " --set synth_seconds=0.1") == 0);
  CHECK(run("definitely-not-a-command") != 0);
  // missing checkpoint file -> data error
  CHECK(run("adapt --checkpoint " + dir.sub("nope.txt") + " --out " +
            dir.sub("a")) == 2);
  // bad config value -> usage error
  CHECK(run("generate --set kind=square --out " + dir.sub("b")) == 1);
}

TEST_SUITE_END();
