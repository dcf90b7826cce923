#include "sonomix/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sonomix {

namespace {

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad number: " + v);
  return d;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  const int i = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad integer: " + v);
  return i;
}

std::uint64_t to_u64(const std::string& v) {
  std::size_t pos = 0;
  const unsigned long long u = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad integer: " + v);
  return u;
}

bool to_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("bad boolean: " + v);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"window_size", [](RunConfig& c, const std::string& v) { c.window_size = to_int(v); }},
      {"sample_rate", [](RunConfig& c, const std::string& v) { c.sample_rate = to_double(v); }},
      {"kind", [](RunConfig& c, const std::string& v) {
         if (v != "sine" && v != "chirp") throw std::invalid_argument("kind must be sine|chirp");
         c.kind = v;
       }},
      {"f_hz", [](RunConfig& c, const std::string& v) { c.f_hz = to_double(v); }},
      {"f0_hz", [](RunConfig& c, const std::string& v) { c.f0_hz = to_double(v); }},
      {"f1_hz", [](RunConfig& c, const std::string& v) { c.f1_hz = to_double(v); }},
      {"amplitude", [](RunConfig& c, const std::string& v) { c.amplitude = to_double(v); }},
      {"phase", [](RunConfig& c, const std::string& v) { c.phase = to_double(v); }},
      {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = to_double(v); }},
      {"beta", [](RunConfig& c, const std::string& v) { c.beta = to_double(v); }},
      {"gamma", [](RunConfig& c, const std::string& v) { c.gamma = to_double(v); }},
      {"recovery_scale", [](RunConfig& c, const std::string& v) { c.recovery_scale = to_double(v); }},
      {"recovery_mode", [](RunConfig& c, const std::string& v) {
         if (v != "per_bin_abs" && v != "vector_l2")
           throw std::invalid_argument("recovery_mode must be per_bin_abs|vector_l2");
         c.recovery_mode = v;
       }},
      {"num_blocks", [](RunConfig& c, const std::string& v) { c.num_blocks = to_int(v); }},
      {"hidden_channels", [](RunConfig& c, const std::string& v) { c.hidden_channels = to_int(v); }},
      {"kernel_size", [](RunConfig& c, const std::string& v) { c.kernel_size = to_int(v); }},
      {"dilation", [](RunConfig& c, const std::string& v) { c.dilation = to_int(v); }},
      {"sinc_lo_hz", [](RunConfig& c, const std::string& v) { c.sinc_lo_hz = to_double(v); }},
      {"sinc_hi_hz", [](RunConfig& c, const std::string& v) { c.sinc_hi_hz = to_double(v); }},
      {"sinc_taps", [](RunConfig& c, const std::string& v) { c.sinc_taps = to_int(v); }},
      {"use_sinc", [](RunConfig& c, const std::string& v) { c.use_sinc = to_bool(v); }},
      {"learn_sinc", [](RunConfig& c, const std::string& v) { c.learn_sinc = to_bool(v); }},
      {"gate_mode", [](RunConfig& c, const std::string& v) {
         if (v != "tanh_sigmoid" && v != "tanh_tanh")
           throw std::invalid_argument("gate_mode must be tanh_sigmoid|tanh_tanh");
         c.gate_mode = v;
       }},
      {"lr", [](RunConfig& c, const std::string& v) { c.lr = to_double(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = to_int(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.batch_size = to_int(v); }},
      {"adam_beta1", [](RunConfig& c, const std::string& v) { c.adam_beta1 = to_double(v); }},
      {"adam_beta2", [](RunConfig& c, const std::string& v) { c.adam_beta2 = to_double(v); }},
      {"adam_epsilon", [](RunConfig& c, const std::string& v) { c.adam_epsilon = to_double(v); }},
      {"rs", [](RunConfig& c, const std::string& v) { c.rs = to_double(v); }},
      {"rz", [](RunConfig& c, const std::string& v) { c.rz = to_double(v); }},
      {"strategy", [](RunConfig& c, const std::string& v) {
         strategy_from_name(v);  // validates
         c.strategy = v;
       }},
      {"down4_uniform", [](RunConfig& c, const std::string& v) { c.down4_uniform = to_bool(v); }},
      {"synth_kind", [](RunConfig& c, const std::string& v) {
         music_kind_from_name(v);  // validates
         c.synth_kind = v;
       }},
      {"synth_seconds", [](RunConfig& c, const std::string& v) { c.synth_seconds = to_double(v); }},
      {"ch_static_gain", [](RunConfig& c, const std::string& v) { c.ch_static_gain = to_double(v); }},
      {"ch_reflector_gain", [](RunConfig& c, const std::string& v) { c.ch_reflector_gain = to_double(v); }},
      {"ch_base_delay", [](RunConfig& c, const std::string& v) { c.ch_base_delay = to_double(v); }},
      {"ch_breath_amp_m", [](RunConfig& c, const std::string& v) { c.ch_breath_amp_m = to_double(v); }},
      {"ch_bpm", [](RunConfig& c, const std::string& v) { c.ch_bpm = to_double(v); }},
      {"ch_noise", [](RunConfig& c, const std::string& v) { c.ch_noise = to_double(v); }},
      {"sim_seconds", [](RunConfig& c, const std::string& v) { c.sim_seconds = to_double(v); }},
      {"bench_windows", [](RunConfig& c, const std::string& v) { c.bench_windows = to_int(v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
      {"threads", [](RunConfig& c, const std::string& v) { c.threads = to_int(v); }},
      {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint = v; }},
  };

  const auto it = setters.find(key);
  if (it == setters.end())
    throw std::invalid_argument("unknown config key: " + key);
  it->second(*this, value);
}

std::string RunConfig::dump() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "window_size=" << window_size << "\n";
  out << "sample_rate=" << num(sample_rate) << "\n";
  out << "kind=" << kind << "\n";
  out << "f_hz=" << num(f_hz) << "\n";
  out << "f0_hz=" << num(f0_hz) << "\n";
  out << "f1_hz=" << num(f1_hz) << "\n";
  out << "amplitude=" << num(amplitude) << "\n";
  out << "phase=" << num(phase) << "\n";
  out << "alpha=" << num(alpha) << "\n";
  out << "beta=" << num(beta) << "\n";
  out << "gamma=" << num(gamma) << "\n";
  out << "recovery_scale=" << num(recovery_scale) << "\n";
  out << "recovery_mode=" << recovery_mode << "\n";
  out << "num_blocks=" << num_blocks << "\n";
  out << "hidden_channels=" << hidden_channels << "\n";
  out << "kernel_size=" << kernel_size << "\n";
  out << "dilation=" << dilation << "\n";
  out << "sinc_lo_hz=" << num(sinc_lo_hz) << "\n";
  out << "sinc_hi_hz=" << num(sinc_hi_hz) << "\n";
  out << "sinc_taps=" << sinc_taps << "\n";
  out << "use_sinc=" << (use_sinc ? 1 : 0) << "\n";
  out << "learn_sinc=" << (learn_sinc ? 1 : 0) << "\n";
  out << "gate_mode=" << gate_mode << "\n";
  out << "lr=" << num(lr) << "\n";
  out << "epochs=" << epochs << "\n";
  out << "batch_size=" << batch_size << "\n";
  out << "adam_beta1=" << num(adam_beta1) << "\n";
  out << "adam_beta2=" << num(adam_beta2) << "\n";
  out << "adam_epsilon=" << num(adam_epsilon) << "\n";
  out << "rs=" << num(rs) << "\n";
  out << "rz=" << num(rz) << "\n";
  out << "strategy=" << strategy << "\n";
  out << "down4_uniform=" << (down4_uniform ? 1 : 0) << "\n";
  out << "synth_kind=" << synth_kind << "\n";
  out << "synth_seconds=" << num(synth_seconds) << "\n";
  out << "ch_static_gain=" << num(ch_static_gain) << "\n";
  out << "ch_reflector_gain=" << num(ch_reflector_gain) << "\n";
  out << "ch_base_delay=" << num(ch_base_delay) << "\n";
  out << "ch_breath_amp_m=" << num(ch_breath_amp_m) << "\n";
  out << "ch_bpm=" << num(ch_bpm) << "\n";
  out << "ch_noise=" << num(ch_noise) << "\n";
  out << "sim_seconds=" << num(sim_seconds) << "\n";
  out << "bench_windows=" << bench_windows << "\n";
  out << "seed=" << seed << "\n";
  out << "threads=" << threads << "\n";
  out << "checkpoint=" << checkpoint << "\n";
  return out.str();
}

WindowSpec RunConfig::window() const {
  WindowSpec w;
  w.size = window_size;
  w.sample_rate = sample_rate;
  return w;
}

SensingSpec RunConfig::sensing() const {
  SensingSpec s;
  s.kind = kind == "sine" ? Waveform::kSine : Waveform::kChirp;
  s.freq_hz = f_hz;
  s.f0_hz = f0_hz;
  s.f1_hz = f1_hz;
  s.amplitude = amplitude;
  s.phase = phase;
  return s;
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.window = window();
  m.num_blocks = num_blocks;
  m.hidden_channels = hidden_channels;
  m.kernel_size = kernel_size;
  m.dilation = dilation;
  m.sinc_lo_hz = sinc_lo_hz;
  m.sinc_hi_hz = sinc_hi_hz;
  m.sinc_taps = sinc_taps;
  m.use_sinc = use_sinc;
  m.learn_sinc = learn_sinc;
  m.gate_mode =
      gate_mode == "tanh_tanh" ? GateMode::kTanhTanh : GateMode::kTanhSigmoid;
  return m;
}

LossWeights RunConfig::weights() const {
  LossWeights w;
  w.alpha = alpha;
  w.beta = beta;
  w.gamma = kind == "sine" ? 0.0 : gamma;
  w.recovery_scale = recovery_scale;
  w.recovery_mode = recovery_mode == "vector_l2" ? RecoveryMode::kVectorL2
                                                 : RecoveryMode::kPerBinAbs;
  return w;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.learning_rate = lr;
  t.adam = {adam_beta1, adam_beta2, adam_epsilon};
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.weights = weights();
  t.seed = seed;
  t.rs = rs;
  t.rz = rz;
  t.num_threads = threads;
  return t;
}

ChannelSpec RunConfig::channel() const {
  ChannelSpec c;
  c.static_path_gain = ch_static_gain;
  c.reflector_gain = ch_reflector_gain;
  c.base_delay_samples = ch_base_delay;
  c.breath_amplitude_m = ch_breath_amp_m;
  c.bpm = ch_bpm;
  c.noise_level = ch_noise;
  return c;
}

StrategyKind RunConfig::strategy_kind() const {
  return strategy_from_name(strategy);
}

MusicKind RunConfig::music_kind() const {
  return music_kind_from_name(synth_kind);
}

void apply_config_line(RunConfig& config, const std::string& line) {
  const std::string t = trim(line);
  if (t.empty() || t[0] == '#') return;
  const auto eq = t.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config line is not key=value: " + t);
  config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  RunConfig config;
  std::string line;
  while (std::getline(in, line)) apply_config_line(config, line);
  return config;
}

}  // namespace sonomix
