#include "sonomix/audio_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sonomix/dsp.hpp"
#include "sonomix/rng.hpp"

namespace sonomix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSynthPeak = 0.7 * kPcmMax;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
  return static_cast<std::uint8_t>(s[off]) |
         (static_cast<std::uint8_t>(s[off + 1]) << 8) |
         (static_cast<std::uint8_t>(s[off + 2]) << 16) |
         (static_cast<std::uint8_t>(s[off + 3]) << 24);
}

std::uint16_t get_u16(const std::string& s, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(s[off]) |
                                    (static_cast<std::uint8_t>(s[off + 1]) << 8));
}

// peak-normalize in place
void normalize_peak(std::vector<double>& v, double peak) {
  double maxabs = 0.0;
  for (double s : v) maxabs = std::max(maxabs, std::abs(s));
  if (maxabs <= 0.0) return;
  const double g = peak / maxabs;
  for (double& s : v) s *= g;
}

// Soft-knee compression toward the crest factor of produced music (~1.5).
// Uncompressed tone sums have crest factors near 3, which leaves far more
// mixing headroom than any real track would.
void compress_soft(std::vector<double>& v, double drive) {
  double maxabs = 0.0;
  for (double s : v) maxabs = std::max(maxabs, std::abs(s));
  if (maxabs <= 0.0) return;
  const double norm = std::tanh(drive);
  for (double& s : v) s = std::tanh(drive * s / maxabs) / norm;
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("read_wav: not a RIFF/WAVE file: " + path);

  AudioBuffer buf;
  bool have_fmt = false, have_data = false;
  int bits = 0;

  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const std::string id = bytes.substr(off, 4);
    const std::uint32_t size = get_u32(bytes, off + 4);
    off += 8;
    if (off + size > bytes.size())
      throw std::runtime_error("read_wav: truncated chunk " + id);

    if (id == "fmt ") {
      if (size < 16) throw std::runtime_error("read_wav: short fmt chunk");
      const std::uint16_t format = get_u16(bytes, off);
      const std::uint16_t channels = get_u16(bytes, off + 2);
      const std::uint32_t rate = get_u32(bytes, off + 4);
      bits = get_u16(bytes, off + 14);
      if (format != 1)
        throw std::runtime_error(
            "read_wav: compressed/non-PCM format code not supported");
      if (channels != 1)
        throw std::runtime_error("read_wav: only mono input is supported");
      if (bits != 8 && bits != 16)
        throw std::runtime_error("read_wav: only 8- or 16-bit PCM supported");
      buf.sample_rate = static_cast<double>(rate);
      buf.source_bits = bits;
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt)
        throw std::runtime_error("read_wav: data chunk before fmt chunk");
      if (bits == 16) {
        if (size % 2 != 0) throw std::runtime_error("read_wav: odd data size");
        buf.samples.resize(size / 2);
        for (std::size_t i = 0; i < buf.samples.size(); ++i) {
          const std::uint16_t raw = get_u16(bytes, off + 2 * i);
          buf.samples[i] = static_cast<double>(static_cast<std::int16_t>(raw));
        }
      } else {
        buf.samples.resize(size);
        for (std::size_t i = 0; i < buf.samples.size(); ++i) {
          const int v = static_cast<std::uint8_t>(bytes[off + i]);
          buf.samples[i] = static_cast<double>((v - 128) * 256);
        }
      }
      have_data = true;
    } else {
      throw std::runtime_error("read_wav: unexpected chunk '" + id +
                               "' (plain fmt+data PCM expected)");
    }
    off += size + (size % 2);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("read_wav: missing fmt or data chunk");
  return buf;
}

void write_wav(const std::string& path, const AudioBuffer& buffer) {
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(buffer.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  const std::uint32_t rate = static_cast<std::uint32_t>(buffer.sample_rate);
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);        // bits
  out += "data";
  put_u32(out, data_size);
  for (double s : buffer.samples) {
    const std::int16_t q = quantize_sample(s);
    put_u16(out, static_cast<std::uint16_t>(q));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("write_wav: cannot open " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_wav: write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("write_wav: rename failed for " + path);
}

AudioBuffer resample_linear(const AudioBuffer& buffer, double target_hz) {
  if (target_hz <= 0.0)
    throw std::invalid_argument("resample_linear: target rate must be > 0");
  if (buffer.samples.empty() || buffer.sample_rate == target_hz) return buffer;

  const double ratio = buffer.sample_rate / target_hz;
  const std::size_t n_in = buffer.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::round(static_cast<double>(n_in) / ratio));

  AudioBuffer out;
  out.sample_rate = target_hz;
  out.source_bits = buffer.source_bits;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), n_in - 1);
    const std::size_t hi = std::min(lo + 1, n_in - 1);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] =
        buffer.samples[lo] * (1.0 - frac) + buffer.samples[hi] * frac;
  }
  return out;
}

MusicKind music_kind_from_name(const std::string& name) {
  if (name == "low_tones") return MusicKind::kLowTones;
  if (name == "tone_cluster") return MusicKind::kToneCluster;
  if (name == "noise_band") return MusicKind::kNoiseBand;
  if (name == "speech_like") return MusicKind::kSpeechLike;
  throw std::invalid_argument("unknown music kind: " + name);
}

std::string music_kind_name(MusicKind kind) {
  switch (kind) {
    case MusicKind::kLowTones: return "low_tones";
    case MusicKind::kToneCluster: return "tone_cluster";
    case MusicKind::kNoiseBand: return "noise_band";
    case MusicKind::kSpeechLike: return "speech_like";
  }
  return "?";
}

AudioBuffer synth_music(MusicKind kind, double duration_s, std::uint64_t seed) {
  if (duration_s <= 0.0)
    throw std::invalid_argument("synth_music: duration must be > 0");
  const double fs = 48000.0;
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * fs));
  Rng rng(seed ^ (static_cast<std::uint64_t>(kind) << 56));

  AudioBuffer buf;
  buf.sample_rate = fs;
  buf.samples.assign(n, 0.0);
  auto& s = buf.samples;

  switch (kind) {
    case MusicKind::kLowTones: {
      for (int tone = 0; tone < 3; ++tone) {
        const double f = rng.uniform(80.0, 800.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double amp = rng.uniform(0.4, 1.0);
        for (std::size_t i = 0; i < n; ++i)
          s[i] += amp * std::sin(kTwoPi * f * static_cast<double>(i) / fs + phase);
      }
      break;
    }
    case MusicKind::kToneCluster: {
      for (int tone = 0; tone < 5; ++tone) {
        const double f = rng.uniform(1000.0, 6000.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double amp = rng.uniform(0.3, 1.0);
        for (std::size_t i = 0; i < n; ++i)
          s[i] += amp * std::sin(kTwoPi * f * static_cast<double>(i) / fs + phase);
      }
      break;
    }
    case MusicKind::kNoiseBand: {
      std::vector<double> noise(n);
      for (auto& v : noise) v = rng.normal();
      WindowSpec design{512, fs};
      FirKernel lp = sinc_low_pass(8000.0, 301, design);
      s = convolve_same(noise, lp.taps);
      break;
    }
    case MusicKind::kSpeechLike: {
      // syllable-style bursts of a few mid tones over a soft noise floor
      std::vector<double> envelope(n, 0.0);
      std::size_t pos = 0;
      while (pos < n) {
        const std::size_t on = static_cast<std::size_t>(rng.uniform(0.08, 0.3) * fs);
        const std::size_t offdur = static_cast<std::size_t>(rng.uniform(0.05, 0.25) * fs);
        const std::size_t ramp = static_cast<std::size_t>(0.01 * fs);
        for (std::size_t i = 0; i < on && pos + i < n; ++i) {
          double e = 1.0;
          if (i < ramp) e = static_cast<double>(i) / ramp;
          if (on - i < ramp) e = std::min(e, static_cast<double>(on - i) / ramp);
          envelope[pos + i] = e;
        }
        pos += on + offdur;
      }
      for (int tone = 0; tone < 3; ++tone) {
        const double f = rng.uniform(150.0, 3000.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double amp = rng.uniform(0.3, 1.0);
        for (std::size_t i = 0; i < n; ++i)
          s[i] += envelope[i] * amp *
                  std::sin(kTwoPi * f * static_cast<double>(i) / fs + phase);
      }
      for (std::size_t i = 0; i < n; ++i) s[i] += 0.02 * rng.normal();
      WindowSpec design{512, fs};
      FirKernel lp = sinc_low_pass(6000.0, 201, design);
      s = convolve_same(s, lp.taps);
      break;
    }
  }
  compress_soft(s, 4.5);
  // compression harmonics of the upper tones could reach past 16 kHz; keep
  // the corpus strictly clear of the sensing band
  WindowSpec post{512, fs};
  FirKernel guard = sinc_low_pass(13000.0, 301, post);
  s = convolve_same(s, guard.taps);
  normalize_peak(s, kSynthPeak);
  return buf;
}

}  // namespace sonomix
