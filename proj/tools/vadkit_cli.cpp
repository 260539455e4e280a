// vadkit: command-line front end for the detection pipeline.
//
// Exit codes: 0 success, 2 bad input (unreadable/malformed files, invalid
// flags or configuration), 1 internal error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include("CLI11.hpp")
#include "CLI11.hpp"
#else
#include <CLI/CLI.hpp>
#endif
#include "vadkit/vadkit.hpp"

namespace fs = std::filesystem;
using namespace vadkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitBadInput = 2;

/// Flags shared by every subcommand that touches the pipeline configuration.
struct ConfigFlags {
  std::string config_path;
  std::optional<int> sample_rate;
  std::optional<int> order;
  std::optional<double> low_hz;
  std::optional<double> high_hz;
  std::optional<double> window_s;
  std::optional<double> threshold_db;
  std::optional<double> hop_s;
  std::optional<double> noise_percentile;
  std::optional<std::size_t> fft;
  std::optional<std::size_t> spec_hop;

  void attach(CLI::App* app, bool with_spectrogram = false) {
    app->add_option("--config", config_path, "JSON configuration file; flags override its values");
    app->add_option("--sample-rate", sample_rate, "Working sample rate in Hz (default 16000)");
    app->add_option("--order", order, "Overall bandpass order, even (default 4)");
    app->add_option("--low", low_hz, "Lower passband edge in Hz (default 300)");
    app->add_option("--high", high_hz, "Upper passband edge in Hz (default 1500)");
    app->add_option("--window", window_s, "Analysis window length in s (default 0.31)");
    app->add_option("--threshold", threshold_db, "SNR threshold in dB (default 90)");
    app->add_option("--hop", hop_s, "Frame hop in s (default: window length)");
    app->add_option("--noise-percentile", noise_percentile, "Noise floor quantile in (0,1) (default 0.10)");
    if (with_spectrogram) {
      app->add_option("--fft", fft, "Spectrogram FFT size, power of two (default 1024)");
      app->add_option("--spec-hop", spec_hop, "Spectrogram hop in samples (default 512)");
    }
  }

  CliConfig resolve() const {
    CliConfig c = config_path.empty() ? CliConfig{} : load_config(config_path);
    if (sample_rate) c.sample_rate_hz = *sample_rate;
    if (order) c.filter_order = *order;
    if (low_hz) c.low_cutoff_hz = *low_hz;
    if (high_hz) c.high_cutoff_hz = *high_hz;
    if (window_s) c.vad.window_length_s = *window_s;
    if (threshold_db) c.vad.snr_threshold_db = *threshold_db;
    if (hop_s) c.vad.hop_length_s = *hop_s;
    if (noise_percentile) c.vad.noise_percentile = *noise_percentile;
    if (fft) c.fft_size = *fft;
    if (spec_hop) c.spectrogram_hop = *spec_hop;
    c.validate();
    return c;
  }
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string("bad number '") + item + "' in " + what);
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " list is empty");
  return out;
}

AudioBuffer load_at_rate(const fs::path& path, int rate) { return resample(read_wav(path).first, rate); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  return f;
}

// -- detect ------------------------------------------------------------------

struct DetectArgs {
  ConfigFlags cfg;
  std::string input;
  std::string out;
  std::string frames_csv;
};

int run_detect(const DetectArgs& a) {
  const CliConfig config = a.cfg.resolve();
  const AudioBuffer audio = load_at_rate(a.input, config.sample_rate_hz);
  const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());
  const VadResult result = detect(audio, cascade, config.vad);

  json j = result;
  j["input"] = a.input;
  j["effective_config"] = config;
  write_json_file(a.out, j);
  if (!a.frames_csv.empty()) {
    auto f = open_out(a.frames_csv);
    write_config_comment(f, config);
    write_frames_csv(result, f);
  }

  std::size_t speech_frames = 0;
  for (const auto& fr : result.frames) speech_frames += fr.is_speech ? 1 : 0;
  std::printf("%s: %.3f s, noise floor %.2f dB, %zu/%zu speech frames, %zu interval(s)\n", a.input.c_str(),
              result.duration_s, result.noise_power_db, speech_frames, result.frames.size(), result.intervals.size());
  for (const Interval& iv : result.intervals) std::printf("  %.3f - %.3f s\n", iv.start_s, iv.end_s);
  return kExitOk;
}

// -- mix ---------------------------------------------------------------------

struct MixArgs {
  ConfigFlags cfg;
  std::string speech;
  std::string ambient;
  std::optional<double> snr_db;
  std::optional<double> gain;
  std::optional<double> normalize;
  std::optional<double> duration_s;
  std::string format = "float32";
  std::string out;
};

int run_mix(const MixArgs& a) {
  const CliConfig config = a.cfg.resolve();
  AudioBuffer speech = load_at_rate(a.speech, config.sample_rate_hz);
  AudioBuffer ambient = load_at_rate(a.ambient, config.sample_rate_hz);
  const double duration = a.duration_s.value_or(speech.duration_s());
  if (!(duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "mix duration must be positive");
  speech = truncate_to(speech, duration);
  ambient = truncate_to(ambient, duration);

  MixSpec spec;
  spec.target_snr_db = a.snr_db;
  spec.ambient_gain = a.gain;
  spec.normalize_peak = a.normalize;
  const AudioBuffer mixed = mix(speech, ambient, spec);
  write_wav(mixed, a.out, a.format == "pcm16" ? WavFormat::Pcm16 : WavFormat::Float32);

  LabelSidecar side;
  side.speech_source = a.speech;
  side.ambient_source = a.ambient;
  side.target_snr_db = a.snr_db;
  if (auto labels = read_sidecar_if_present(a.speech)) {
    for (Interval iv : labels->speech_intervals) {
      if (iv.start_s >= duration) continue;
      iv.end_s = std::min(iv.end_s, duration);
      side.speech_intervals.push_back(iv);
    }
  }
  json j = side;
  if (a.gain) j["ambient_gain"] = *a.gain;
  j["duration_s"] = mixed.duration_s();
  j["config"] = config;
  write_json_file(sidecar_path(a.out), j);
  std::printf("wrote %s (%.3f s, %zu labeled interval(s))\n", a.out.c_str(), mixed.duration_s(),
              side.speech_intervals.size());
  return kExitOk;
}

// -- spectrogram ---------------------------------------------------------------

struct SpectrogramArgs {
  ConfigFlags cfg;
  std::string input;
  std::string out;
  std::string format;  // csv | json | pgm; inferred from --out when empty
  std::string stage = "raw";
};

int run_spectrogram(const SpectrogramArgs& a) {
  const CliConfig config = a.cfg.resolve();
  AudioBuffer audio = load_at_rate(a.input, config.sample_rate_hz);
  if (a.stage != "raw") {
    const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());
    const AudioBuffer filtered = apply(cascade, audio);
    audio = a.stage == "filtered" ? filtered : gate_to_intervals(filtered, detect_filtered(filtered, config.vad).intervals);
  }
  const SpectrogramMatrix m = spectrogram(audio, config.fft_size, config.spectrogram_hop);

  std::string format = a.format;
  if (format.empty()) {
    const std::string ext = fs::path(a.out).extension().string();
    format = ext == ".json" ? "json" : ext == ".pgm" ? "pgm" : "csv";
  }
  if (format == "json") {
    json j = spectrogram_to_json(m);
    j["meta"]["stage"] = a.stage;
    j["meta"]["config"] = config;
    write_json_file(a.out, j);
  } else if (format == "pgm") {
    write_spectrogram_pgm(m, a.out);
  } else {
    auto f = open_out(a.out);
    write_config_comment(f, config);
    write_spectrogram_csv(m, f);
  }
  std::printf("wrote %s (%zu frames x %zu bins, %s)\n", a.out.c_str(), m.frame_count(), m.bin_count(), format.c_str());
  return kExitOk;
}

// -- filter-dump -------------------------------------------------------------

struct FilterDumpArgs {
  ConfigFlags cfg;
  std::string out;
  std::string response_csv;
  std::size_t points = 1601;
};

int run_filter_dump(const FilterDumpArgs& a) {
  const CliConfig config = a.cfg.resolve();
  const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());
  json j = cascade;
  j["max_pole_magnitude"] = cascade.max_pole_magnitude();
  j["effective_config"] = config;
  write_json_file(a.out, j);
  if (!a.response_csv.empty()) {
    auto f = open_out(a.response_csv);
    write_config_comment(f, config);
    write_response_csv(cascade, a.points, f);
  }
  std::printf("%zu section(s); |H| at %.1f Hz = %.3f dB, at %.1f Hz = %.3f dB\n", cascade.sections.size(),
              config.low_cutoff_hz, frequency_response(cascade, config.low_cutoff_hz), config.high_cutoff_hz,
              frequency_response(cascade, config.high_cutoff_hz));
  return kExitOk;
}

// -- eval / sweep ------------------------------------------------------------

struct EvalArgs {
  ConfigFlags cfg;
  std::string manifest;
  std::string out;
  std::string csv;
};

int run_eval(const EvalArgs& a) {
  const CliConfig config = a.cfg.resolve();
  const std::vector<LoadedClip> clips = load_clips(read_manifest(a.manifest), config.sample_rate_hz);
  const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());
  const EvalSummary summary = evaluate(clips, cascade, config.vad);

  json per_clip = json::array();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    per_clip.push_back(json{{"audio_path", clips[i].label.audio_path.generic_string()},
                            {"report", summary.clips[i].report},
                            {"intervals", summary.clips[i].result.intervals}});
  }
  write_json_file(a.out, json{{"effective_config", config}, {"total", summary.total}, {"clips", per_clip}});
  if (!a.csv.empty()) {
    auto f = open_out(a.csv);
    write_config_comment(f, config);
    f << "audio_path,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const EvalReport& r = summary.clips[i].report;
      f << clips[i].label.audio_path.generic_string() << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn
        << ',' << r.accuracy << ',' << r.precision << ',' << r.recall << ',' << r.f1 << '\n';
    }
  }
  const EvalReport& t = summary.total;
  std::printf("%zu clip(s), %zu frames: tp %zu fp %zu tn %zu fn %zu  acc %.4f prec %.4f rec %.4f f1 %.4f\n",
              clips.size(), t.total(), t.tp, t.fp, t.tn, t.fn, t.accuracy, t.precision, t.recall, t.f1);
  return kExitOk;
}

struct SweepArgs {
  ConfigFlags cfg;
  std::string manifest;
  std::string windows = "0.2,0.31,0.5";
  std::string thresholds = "3,6,9,12,15,18,21,24,30,40,60,90";
  std::string out;
  std::string csv;
  unsigned jobs = 1;
};

int run_sweep(const SweepArgs& a) {
  const CliConfig config = a.cfg.resolve();
  const std::vector<double> windows = parse_list(a.windows, "--windows");
  const std::vector<double> thresholds = parse_list(a.thresholds, "--thresholds");
  const std::vector<LoadedClip> clips = load_clips(read_manifest(a.manifest), config.sample_rate_hz);
  const BiquadCascade cascade = design_butterworth_bandpass(config.filter_spec());
  const SweepResult result = sweep(clips, windows, thresholds, cascade, config.vad, a.jobs);

  json j = result;
  j["effective_config"] = config;
  write_json_file(a.out, j);
  if (!a.csv.empty()) {
    auto f = open_out(a.csv);
    write_config_comment(f, config);
    write_sweep_csv(result, f);
  }
  std::printf("%zu grid point(s); best window %.3f s, threshold %.2f dB, f1 %.4f\n", result.grid.size(),
              result.best.window_length_s, result.best.snr_threshold_db, result.best.report.f1);
  return kExitOk;
}

// -- gen-corpus / repro-figures ---------------------------------------------

struct CorpusArgs {
  ConfigFlags cfg;
  std::uint64_t seed = 42;
  std::string out;
};

int run_gen_corpus(const CorpusArgs& a) {
  const CliConfig config = a.cfg.resolve();
  CorpusOptions opts;
  opts.sample_rate_hz = config.sample_rate_hz;
  const auto clips = generate_corpus(a.seed, a.out, opts);
  std::printf("wrote %zu clip(s) and manifest.json to %s\n", clips.size(), a.out.c_str());
  return kExitOk;
}

struct ReproArgs {
  ConfigFlags cfg;
  std::uint64_t seed = 42;
  std::string out;
  unsigned jobs = 1;
};

int run_repro(const ReproArgs& a) {
  const CliConfig config = a.cfg.resolve();
  const bool tune = !a.cfg.threshold_db.has_value();
  const ReproOutcome r = repro_figures(a.seed, a.out, config, tune, a.jobs);
  std::printf("threshold %.2f dB%s; %zu interval(s); band isolation mixed %.2f dB, detected %.2f dB\n",
              r.config.vad.snr_threshold_db, tune ? " (tuned)" : "", r.detection.intervals.size(),
              r.mixed_isolation_db, r.detected_isolation_db);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vadkit: band-limited energy voice activity detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vadkit 0.1.0");

  DetectArgs detect_args;
  auto* detect_cmd = app.add_subcommand("detect", "Run detection on a WAV file and write the result as JSON");
  detect_cmd->add_option("input", detect_args.input, "Input WAV file")->required();
  detect_cmd->add_option("--out", detect_args.out, "Output JSON path")->required();
  detect_cmd->add_option("--frames-csv", detect_args.frames_csv, "Also write per-frame decisions as CSV");
  detect_args.cfg.attach(detect_cmd);

  MixArgs mix_args;
  auto* mix_cmd = app.add_subcommand("mix", "Mix speech and ambient WAV files at a target SNR or gain");
  mix_cmd->add_option("--speech", mix_args.speech, "Speech WAV")->required();
  mix_cmd->add_option("--ambient", mix_args.ambient, "Ambient WAV")->required();
  auto* snr_opt = mix_cmd->add_option("--snr", mix_args.snr_db, "Target speech-to-ambient SNR in dB");
  auto* gain_opt = mix_cmd->add_option("--gain", mix_args.gain, "Fixed ambient gain");
  snr_opt->excludes(gain_opt);
  mix_cmd->add_option("--normalize", mix_args.normalize, "Peak-normalize the mixture to this level");
  mix_cmd->add_option("--duration", mix_args.duration_s, "Common clip length in s (default: speech length)");
  mix_cmd->add_option("--format", mix_args.format, "Output sample format")->check(CLI::IsMember({"pcm16", "float32"}));
  mix_cmd->add_option("--out", mix_args.out, "Output WAV; labels go to <out>.labels.json")->required();
  mix_args.cfg.attach(mix_cmd);

  SpectrogramArgs spec_args;
  auto* spec_cmd = app.add_subcommand("spectrogram", "Write an STFT magnitude spectrogram as CSV, JSON or PGM");
  spec_cmd->add_option("input", spec_args.input, "Input WAV file")->required();
  spec_cmd->add_option("--out", spec_args.out, "Output path")->required();
  spec_cmd->add_option("--format", spec_args.format, "csv, json or pgm (default: from --out extension)")
      ->check(CLI::IsMember({"csv", "json", "pgm"}));
  spec_cmd->add_option("--stage", spec_args.stage, "Pipeline stage to analyse")
      ->check(CLI::IsMember({"raw", "filtered", "detected"}));
  spec_args.cfg.attach(spec_cmd, true);

  FilterDumpArgs dump_args;
  auto* dump_cmd = app.add_subcommand("filter-dump", "Write the designed bandpass cascade and its response");
  dump_cmd->add_option("--out", dump_args.out, "Output JSON path")->required();
  dump_cmd->add_option("--response-csv", dump_args.response_csv, "Also write freq_hz,magnitude_db CSV");
  dump_cmd->add_option("--points", dump_args.points, "Response sweep points (default 1601)");
  dump_args.cfg.attach(dump_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score detection on a labeled manifest");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest JSON")->required();
  eval_cmd->add_option("--out", eval_args.out, "Report JSON path")->required();
  eval_cmd->add_option("--csv", eval_args.csv, "Also write a per-clip CSV");
  eval_args.cfg.attach(eval_cmd);

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid-search window length and SNR threshold");
  sweep_cmd->add_option("--manifest", sweep_args.manifest, "Manifest JSON")->required();
  sweep_cmd->add_option("--windows", sweep_args.windows, "Comma-separated window lengths in s");
  sweep_cmd->add_option("--thresholds", sweep_args.thresholds, "Comma-separated thresholds in dB");
  sweep_cmd->add_option("--out", sweep_args.out, "Sweep JSON path")->required();
  sweep_cmd->add_option("--csv", sweep_args.csv, "Also write the grid as CSV");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep_args.cfg.attach(sweep_cmd);

  CorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("gen-corpus", "Generate the seeded synthetic labeled corpus");
  corpus_cmd->add_option("--seed", corpus_args.seed, "RNG seed (default 42)");
  corpus_cmd->add_option("--out", corpus_args.out, "Output directory")->required();
  corpus_args.cfg.attach(corpus_cmd);

  ReproArgs repro_args;
  auto* repro_cmd = app.add_subcommand("repro-figures", "Regenerate waveform/decision and spectrogram figure data");
  repro_cmd->add_option("--seed", repro_args.seed, "RNG seed (default 42)");
  repro_cmd->add_option("--out", repro_args.out, "Output directory")->required();
  repro_cmd->add_option("--jobs", repro_args.jobs, "Worker threads for threshold tuning")->check(CLI::PositiveNumber);
  repro_args.cfg.attach(repro_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (*detect_cmd) return run_detect(detect_args);
    if (*mix_cmd) return run_mix(mix_args);
    if (*spec_cmd) return run_spectrogram(spec_args);
    if (*dump_cmd) return run_filter_dump(dump_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*sweep_cmd) return run_sweep(sweep_args);
    if (*corpus_cmd) return run_gen_corpus(corpus_args);
    if (*repro_cmd) return run_repro(repro_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "vadkit: %s\n", e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vadkit: internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
