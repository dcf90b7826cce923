#include "sonomix/audio_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "oracles.hpp"
#include "sonomix/dsp.hpp"
#include "sonomix/rng.hpp"

using namespace sonomix;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("audio_io");

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sonomix_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("wav round-trip at 16-bit mono") {
  TempDir dir;
  Rng rng(4);
  AudioBuffer buf;
  buf.samples.resize(512);
  for (auto& v : buf.samples)
    v = static_cast<double>(quantize_sample(rng.uniform(-kPcmMax, kPcmMax)));

  const auto path = dir.file("roundtrip.wav");
  write_wav(path, buf);
  auto back = read_wav(path);
  CHECK(back.sample_rate == 48000.0);
  CHECK(back.source_bits == 16);
  CHECK(back.samples == buf.samples);
}

TEST_CASE("8-bit input maps to signed 16-bit") {
  TempDir dir;
  // hand-build a tiny 8-bit wav: samples {0, 128, 255}
  std::string bytes;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  bytes += "RIFF";
  u32(36 + 4);
  bytes += "WAVE";
  bytes += "fmt ";
  u32(16);
  u16(1);
  u16(1);
  u32(24000);
  u32(24000);
  u16(1);
  u16(8);
  bytes += "data";
  u32(3);
  bytes.push_back(static_cast<char>(0));
  bytes.push_back(static_cast<char>(128));
  bytes.push_back(static_cast<char>(255));
  bytes.push_back(0);  // pad byte for odd chunk

  const auto path = dir.file("eight.wav");
  std::ofstream(path, std::ios::binary).write(bytes.data(), bytes.size());

  auto buf = read_wav(path);
  CHECK(buf.sample_rate == 24000.0);
  CHECK(buf.source_bits == 8);
  REQUIRE(buf.samples.size() == 3);
  CHECK(buf.samples[0] == (0 - 128) * 256);
  CHECK(buf.samples[1] == 0);
  CHECK(buf.samples[2] == (255 - 128) * 256);
}

TEST_CASE("reader rejects malformed input") {
  TempDir dir;
  const auto path = dir.file("bad.wav");

  std::ofstream(path, std::ios::binary) << "RIFFxx";
  CHECK_THROWS_AS(read_wav(path), std::runtime_error);

  AudioBuffer buf;
  buf.samples.assign(64, 0.0);
  write_wav(dir.file("ok.wav"), buf);
  // truncate the valid file mid-data
  {
    std::ifstream in(dir.file("ok.wav"), std::ios::binary);
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    std::ofstream(path, std::ios::binary)
        .write(contents.data(), static_cast<std::streamsize>(contents.size() - 40));
  }
  CHECK_THROWS_AS(read_wav(path), std::runtime_error);

  CHECK_THROWS_AS(read_wav(dir.file("missing.wav")), std::runtime_error);
}

TEST_CASE("resample_linear identities") {
  AudioBuffer buf;
  buf.sample_rate = 48000.0;
  buf.samples = {1.0, 2.0, 3.0, 4.0};
  auto same = resample_linear(buf, 48000.0);
  CHECK(same.samples == buf.samples);

  AudioBuffer constant;
  constant.sample_rate = 24000.0;
  constant.samples.assign(100, 5.0);
  auto up = resample_linear(constant, 48000.0);
  CHECK(up.sample_rate == 48000.0);
  CHECK(up.samples.size() == 200);
  for (double v : up.samples) CHECK(v == doctest::Approx(5.0));
  CHECK(up.samples.front() == 5.0);
}

TEST_CASE("resample_linear preserves a tone within one bin") {
  const double f = 1000.0;
  AudioBuffer buf;
  buf.sample_rate = 24000.0;
  buf.samples.resize(2048);
  for (std::size_t i = 0; i < buf.samples.size(); ++i)
    buf.samples[i] =
        10000.0 * std::sin(2.0 * std::numbers::pi * f * i / buf.sample_rate);

  auto up = resample_linear(buf, 48000.0);
  WindowSpec win{};
  RealWindow w(up.samples.begin(), up.samples.begin() + win.size);
  auto mags = oracle::naive_onesided_mags(w, kPcmMax);
  const std::size_t peak = oracle::argmax(mags);
  const double expected_bin = f / win.bin_hz();
  CHECK(std::abs(static_cast<double>(peak) - expected_bin) <= 1.0);
}

TEST_CASE("resample_linear keeps energy below the original Nyquist") {
  // music-like tonal content; first-order interpolation cannot hit -40 dB for
  // content parked right at the source Nyquist, but comfortably does here
  auto music = synth_music(MusicKind::kLowTones, 0.2, 3);
  AudioBuffer down;
  down.sample_rate = 24000.0;
  down.samples.assign(music.samples.begin(), music.samples.begin() + 4096);
  auto up = resample_linear(down, 48000.0);

  // Hann-windowed periodogram: the measurement floor must sit well under the
  // -40 dB requirement, which a rectangular window's leakage would mask
  const std::size_t n = 2048;
  std::vector<double> w(up.samples.begin() + 1024,
                        up.samples.begin() + 1024 + n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  auto spec = oracle::naive_dft(w);
  double below = 0.0, above = 0.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double p = std::norm(spec[k]);
    if (k * 48000.0 / n < 12000.0) below += p;
    else above += p;
  }
  // imaging products stay at least 40 dB under the kept band
  CHECK(above < below * 1e-4);
}

TEST_CASE("synth_music determinism, headroom, and band limit") {
  for (auto kind : {MusicKind::kLowTones, MusicKind::kToneCluster,
                    MusicKind::kNoiseBand, MusicKind::kSpeechLike}) {
    auto a = synth_music(kind, 0.25, 11);
    auto b = synth_music(kind, 0.25, 11);
    CHECK(a.samples == b.samples);

    double peak = 0.0;
    for (double v : a.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 0.7 * kPcmMax);

    // energy above 16 kHz under 1%
    WindowSpec win{};
    double lo = 0.0, hi = 0.0;
    for (std::size_t start = 0; start + win.size <= a.samples.size();
         start += win.size) {
      RealWindow w(a.samples.begin() + start, a.samples.begin() + start + win.size);
      auto spec = rfft_mag(w, win);
      for (std::size_t k = 0; k < spec.mags.size(); ++k) {
        const double p = spec.mags[k] * spec.mags[k];
        if (k * win.bin_hz() >= 16000.0) hi += p;
        else lo += p;
      }
    }
    CHECK(hi < 0.01 * (hi + lo));
  }
  CHECK_THROWS_AS(synth_music(MusicKind::kLowTones, 0.0, 1), std::invalid_argument);
}

TEST_CASE("music kind names round-trip") {
  for (auto kind : {MusicKind::kLowTones, MusicKind::kToneCluster,
                    MusicKind::kNoiseBand, MusicKind::kSpeechLike})
    CHECK(music_kind_from_name(music_kind_name(kind)) == kind);
  CHECK_THROWS_AS(music_kind_from_name("polka"), std::invalid_argument);
}

TEST_SUITE_END();
