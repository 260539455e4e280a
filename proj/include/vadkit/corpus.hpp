#pragma once

// Seeded synthetic corpus: digital silence, white and pink ambient noise,
// gated harmonic speech surrogates, and their mixtures at fixed SNRs. Every
// clip is written with a label sidecar and listed in manifest.json.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"
#include "vadkit/eval.hpp"
#include "vadkit/json_io.hpp"
#include "vadkit/mixer.hpp"
#include "vadkit/vad.hpp"

namespace vadkit {

/// Parameters of one speech-surrogate clip.
struct SurrogateSpec {
  double duration_s = 6.2;
  int sample_rate_hz = kDefaultSampleRateHz;
  std::vector<Interval> gates;  // active spans; these are the ground-truth labels
  double f0_hz = 150.0;
  double band_low_hz = 350.0;  // harmonics kept inside [band_low, band_high]
  double band_high_hz = 1400.0;
  double am_rate_hz = 4.0;     // syllabic modulation
  double am_depth = 0.5;
  double ramp_s = 0.01;        // raised-cosine on/off ramps, inside each gate
  double peak = 0.5;
};

/// Harmonic tone complex, amplitude modulated, switched on only inside the
/// gates. Harmonic k has amplitude 1/k and phase pi k^2 / N (low crest factor).
inline AudioBuffer speech_surrogate(const SurrogateSpec& spec) {
  const std::size_t n = samples_for_duration(spec.duration_s, spec.sample_rate_hz);
  const double fs = static_cast<double>(spec.sample_rate_hz);
  std::vector<int> harmonics;
  for (int k = 1; k * spec.f0_hz <= spec.band_high_hz; ++k) {
    if (k * spec.f0_hz >= spec.band_low_hz) harmonics.push_back(k);
  }
  if (harmonics.empty()) throw Error(ErrorCode::InvalidConfig, "no harmonic of f0 falls inside the surrogate band");

  std::vector<double> out(n, 0.0);
  const double count = static_cast<double>(harmonics.size());
  for (const Interval& gate : spec.gates) {
    const auto begin = std::min(n, samples_for_duration(gate.start_s, spec.sample_rate_hz));
    const auto end = std::min(n, samples_for_duration(gate.end_s, spec.sample_rate_hz));
    const double ramp = std::min(spec.ramp_s, 0.5 * (gate.end_s - gate.start_s));
    for (std::size_t i = begin; i < end; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double into = t - gate.start_s;
      const double left = gate.end_s - t;
      double env = 1.0;
      if (ramp > 0.0 && into < ramp) env = 0.5 - 0.5 * std::cos(M_PI * into / ramp);
      if (ramp > 0.0 && left < ramp) env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * left / ramp));
      env *= 1.0 - spec.am_depth * 0.5 * (1.0 - std::cos(2.0 * M_PI * spec.am_rate_hz * into));
      double s = 0.0;
      for (int k : harmonics) {
        const double phase = M_PI * static_cast<double>(k * k) / count;
        s += std::sin(2.0 * M_PI * k * spec.f0_hz * t + phase) / k;
      }
      out[i] = env * s;
    }
  }
  AudioBuffer buf(std::move(out), spec.sample_rate_hz);
  if (peak_abs(buf) > 0.0) buf = peak_normalize(buf, spec.peak);
  return buf;
}

namespace detail {

/// Standard normal deviates from a 64-bit Mersenne Twister via Box-Muller.
/// The standard library's distributions are implementation-defined, so the
/// transform is spelled out to keep corpora identical across toolchains.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail

inline AudioBuffer white_noise(std::size_t n, int rate_hz, double rms, std::uint64_t seed) {
  detail::GaussianSource g(seed);
  std::vector<double> out(n);
  for (double& s : out) s = rms * g.next();
  return AudioBuffer(std::move(out), rate_hz);
}

/// Pink (1/f) noise using Paul Kellet's refined filter on white noise,
/// rescaled to the requested RMS.
inline AudioBuffer pink_noise(std::size_t n, int rate_hz, double rms, std::uint64_t seed) {
  detail::GaussianSource g(seed);
  std::vector<double> out(n);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  for (double& s : out) {
    const double w = g.next();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    s = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  AudioBuffer buf(std::move(out), rate_hz);
  const double p = mean_power(buf);
  if (p > 0.0) {
    const double gain = rms / std::sqrt(p);
    for (double& s : buf.samples) s *= gain;
  }
  return buf;
}

/// Writes `audio` as FLOAT32 WAV with its label sidecar next to it. `extra`
/// keys are merged into the sidecar.
inline LabeledClip write_labeled_clip(const AudioBuffer& audio, const std::filesystem::path& path,
                                      const LabelSidecar& sidecar, const std::string& note,
                                      const json& extra = json::object()) {
  write_wav(audio, path, WavFormat::Float32);
  json side = sidecar;
  side["duration_s"] = audio.duration_s();
  for (const auto& item : extra.items()) side[item.key()] = item.value();
  write_json_file(sidecar_path(path), side);
  return {path, sidecar.speech_intervals, note};
}

/// Renders a speech surrogate and writes it with labels equal to its gates.
inline LabeledClip write_surrogate_clip(const SurrogateSpec& spec, const std::filesystem::path& path) {
  LabelSidecar side;
  side.speech_source = path.filename().string();
  side.speech_intervals = spec.gates;
  return write_labeled_clip(speech_surrogate(spec), path, side, "harmonic speech surrogate");
}

struct CorpusOptions {
  int sample_rate_hz = kDefaultSampleRateHz;
  double clip_duration_s = 6.2;
  // Gate boundaries are placed on this grid so frame-level ground truth is
  // unambiguous at the default analysis window.
  double gate_grid_s = kDefaultWindowLengthS;
  double ambient_rms = 0.05;
  std::vector<double> mix_snrs_db{20.0, 10.0, 5.0, 0.0};
};

/// Random gate schedule on the options' grid: 2-3 spans of 3-6 grid units,
/// separated by at least 2 units of silence, starting no earlier than unit 1.
inline std::vector<Interval> random_gates(detail::GaussianSource& rng, const CorpusOptions& opt) {
  const auto units = static_cast<std::uint64_t>(std::floor(opt.clip_duration_s / opt.gate_grid_s + 1e-9));
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng.raw() % (hi - lo + 1); };
  std::vector<Interval> gates;
  std::uint64_t cursor = pick(1, 2);
  const std::uint64_t spans = pick(2, 3);
  for (std::uint64_t s = 0; s < spans; ++s) {
    const std::uint64_t len = pick(3, 6);
    if (cursor + len > units) break;
    gates.push_back({static_cast<double>(cursor) * opt.gate_grid_s, static_cast<double>(cursor + len) * opt.gate_grid_s});
    cursor += len + pick(2, 3);
  }
  return gates;
}

/// Writes the corpus into `out_dir` (created if needed) and returns its
/// manifest entries. Same seed and options give byte-identical files.
inline std::vector<LabeledClip> generate_corpus(std::uint64_t seed, const std::filesystem::path& out_dir,
                                                const CorpusOptions& opt = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + out_dir.string() + "': " + ec.message());

  detail::GaussianSource rng(seed);
  const std::size_t n = samples_for_duration(opt.clip_duration_s, opt.sample_rate_hz);
  std::vector<LabeledClip> clips;

  const json generator{{"generator",
                        {{"seed", seed}, {"sample_rate_hz", opt.sample_rate_hz}, {"gate_grid_s", opt.gate_grid_s}}}};
  auto emit = [&](const std::string& name, const AudioBuffer& audio, const LabelSidecar& sidecar,
                  const std::string& note) {
    clips.push_back(write_labeled_clip(audio, out_dir / (name + ".wav"), sidecar, note, generator));
  };

  const AudioBuffer silence(std::vector<double>(n, 0.0), opt.sample_rate_hz);
  emit("silence", silence, {"", std::nullopt, std::nullopt, {}}, "digital silence");

  const AudioBuffer white = white_noise(n, opt.sample_rate_hz, opt.ambient_rms, rng.raw());
  const AudioBuffer pink = pink_noise(n, opt.sample_rate_hz, opt.ambient_rms, rng.raw());
  emit("ambient_white", white, {"", std::string("ambient_white.wav"), std::nullopt, {}}, "white noise ambient");
  emit("ambient_pink", pink, {"", std::string("ambient_pink.wav"), std::nullopt, {}}, "pink noise ambient");

  struct Voice {
    std::string name;
    AudioBuffer audio;
    std::vector<Interval> gates;
  };
  std::vector<Voice> voices;
  for (const char* name : {"speech_a", "speech_b"}) {
    SurrogateSpec s;
    s.duration_s = opt.clip_duration_s;
    s.sample_rate_hz = opt.sample_rate_hz;
    s.gates = random_gates(rng, opt);
    s.f0_hz = 110.0 + static_cast<double>(rng.raw() % 111);  // 110..220 Hz
    s.am_rate_hz = 3.0 + static_cast<double>(rng.raw() % 3);
    AudioBuffer audio = speech_surrogate(s);
    emit(name, audio, {std::string(name) + ".wav", std::nullopt, std::nullopt, s.gates},
         "harmonic speech surrogate, f0 " + std::to_string(static_cast<int>(s.f0_hz)) + " Hz");
    voices.push_back({name, std::move(audio), s.gates});
  }

  const std::pair<const char*, const AudioBuffer*> ambients[] = {{"white", &white}, {"pink", &pink}};
  for (std::size_t v = 0; v < voices.size(); ++v) {
    const auto& [amb_name, amb] = ambients[v % 2];
    for (double snr : opt.mix_snrs_db) {
      const std::string name = "mix_" + voices[v].name + "_" + amb_name + "_snr" + std::to_string(static_cast<int>(snr));
      const AudioBuffer mixed = mix(voices[v].audio, *amb, MixSpec::at_snr(snr));
      emit(name, mixed,
           {voices[v].name + ".wav", "ambient_" + std::string(amb_name) + ".wav", snr, voices[v].gates},
           "mixture at " + std::to_string(static_cast<int>(snr)) + " dB SNR");
    }
  }

  write_manifest(out_dir / "manifest.json", clips);
  return clips;
}

}  // namespace vadkit
