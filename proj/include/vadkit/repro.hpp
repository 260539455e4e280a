#pragma once

// End-to-end regeneration of the figure data: corpus -> threshold tuning ->
// mix -> detect -> spectrograms of speech, ambient, mixed and detected speech.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/config.hpp"
#include "vadkit/corpus.hpp"
#include "vadkit/eval.hpp"
#include "vadkit/filter_design.hpp"
#include "vadkit/json_io.hpp"
#include "vadkit/mixer.hpp"
#include "vadkit/spectro.hpp"
#include "vadkit/vad.hpp"

namespace vadkit {

inline const std::vector<double>& repro_threshold_grid_db() {
  static const std::vector<double> grid{3, 6, 9, 12, 15, 18, 21, 24, 30, 40, 60, 90};
  return grid;
}

inline constexpr double kReproMixSnrDb = 10.0;

struct ReproOutcome {
  CliConfig config;  // effective, after tuning
  SweepEntry tuning;
  VadResult detection;
  double mixed_isolation_db = 0.0;
  double detected_isolation_db = 0.0;
};

/// Writes a CSV header comment carrying the effective configuration.
inline void write_config_comment(std::ostream& out, const CliConfig& config) {
  out << "# config: " << json(config).dump() << '\n';
}

inline ReproOutcome repro_figures(std::uint64_t seed, const std::filesystem::path& out_dir, CliConfig config,
                                  bool tune_threshold = true, unsigned jobs = 1) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create '" + out_dir.string() + "': " + ec.message());

  CorpusOptions opts;
  opts.sample_rate_hz = config.sample_rate_hz;
  const auto corpus_dir = out_dir / "corpus";
  const std::vector<LabeledClip> corpus = generate_corpus(seed, corpus_dir, opts);
  const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());

  ReproOutcome outcome;
  if (tune_threshold) {
    const std::vector<LoadedClip> loaded = load_clips(corpus, config.sample_rate_hz);
    const std::vector<double> windows{config.vad.window_length_s};
    const SweepResult sw = sweep(loaded, windows, repro_threshold_grid_db(), cascade, config.vad, jobs);
    outcome.tuning = sw.best;
    config.vad.snr_threshold_db = sw.best.snr_threshold_db;
  }
  outcome.config = config;

  // Mix step.
  const AudioBuffer speech = read_wav(corpus_dir / "speech_a.wav").first;
  const AudioBuffer ambient = read_wav(corpus_dir / "ambient_white.wav").first;
  const AudioBuffer mixed = mix(speech, ambient, MixSpec::at_snr(kReproMixSnrDb));
  write_wav(mixed, out_dir / "mixed.wav", WavFormat::Float32);
  LabelSidecar side;
  side.speech_source = "corpus/speech_a.wav";
  side.ambient_source = "corpus/ambient_white.wav";
  side.target_snr_db = kReproMixSnrDb;
  if (auto labels = read_sidecar_if_present(corpus_dir / "speech_a.wav")) side.speech_intervals = labels->speech_intervals;
  json side_json = side;
  side_json["config"] = config;
  write_json_file(sidecar_path(out_dir / "mixed.wav"), side_json);

  // Detect step.
  const AudioBuffer filtered = apply(cascade, mixed);
  outcome.detection = detect_filtered(filtered, config.vad);
  json det = outcome.detection;
  det["effective_config"] = config;
  write_json_file(out_dir / "detection.json", det);

  // Waveform plus binary decision track, one row per sample.
  {
    std::ofstream f(out_dir / "fig3_waveform.csv");
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write fig3_waveform.csv");
    write_config_comment(f, config);
    f << "time_s,mixed,decision\n";
    const AudioBuffer track = gate_to_intervals(AudioBuffer(std::vector<double>(mixed.size(), 1.0), mixed.sample_rate_hz),
                                                outcome.detection.intervals);
    char line[80];
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      std::snprintf(line, sizeof line, "%.6f,%.8f,%d\n", static_cast<double>(i) / mixed.sample_rate_hz,
                    mixed.samples[i], track.samples[i] > 0.5 ? 1 : 0);
      f << line;
    }
  }
  {
    std::ofstream f(out_dir / "fig3_frames.csv");
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write fig3_frames.csv");
    write_config_comment(f, config);
    write_frames_csv(outcome.detection, f);
  }

  // Spectrograms.
  const AudioBuffer detected = gate_to_intervals(filtered, outcome.detection.intervals);
  const std::pair<const char*, const AudioBuffer*> panels[] = {
      {"speech", &speech}, {"ambient", &ambient}, {"mixed", &mixed}, {"detected", &detected}};
  json isolation = json::object();
  for (const auto& [name, audio] : panels) {
    const SpectrogramMatrix m = spectrogram(*audio, config.fft_size, config.spectrogram_hop);
    {
      std::ofstream f(out_dir / (std::string("fig4_") + name + ".csv"));
      if (!f) throw Error(ErrorCode::IoFailure, std::string("cannot write fig4_") + name + ".csv");
      write_config_comment(f, config);
      write_spectrogram_csv(m, f);
    }
    write_spectrogram_pgm(m, out_dir / (std::string("fig4_") + name + ".pgm"));
    const double iso = band_isolation_db(m, config.low_cutoff_hz, config.high_cutoff_hz);
    isolation[name] = iso;
    if (std::string(name) == "mixed") outcome.mixed_isolation_db = iso;
    if (std::string(name) == "detected") outcome.detected_isolation_db = iso;
  }

  json summary{{"seed", seed},
               {"config", config},
               {"tuned", tune_threshold ? json(outcome.tuning) : json(nullptr)},
               {"mix_snr_db", kReproMixSnrDb},
               {"intervals", outcome.detection.intervals},
               {"band_isolation_db", isolation}};
  write_json_file(out_dir / "repro.json", summary);
  return outcome;
}

}  // namespace vadkit
