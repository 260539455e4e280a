#pragma once

// JSON and CSV encodings of the library's result types, plus the manifest
// and label-sidecar file formats.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vadkit/error.hpp"
#include "vadkit/eval.hpp"
#include "vadkit/filter_design.hpp"
#include "vadkit/spectro.hpp"
#include "vadkit/vad.hpp"

namespace vadkit {

using json = nlohmann::ordered_json;

// -- core types ---------------------------------------------------------------

inline void to_json(json& j, const Interval& iv) { j = json{{"start_s", iv.start_s}, {"end_s", iv.end_s}}; }

inline void from_json(const json& j, Interval& iv) {
  j.at("start_s").get_to(iv.start_s);
  j.at("end_s").get_to(iv.end_s);
}

inline void to_json(json& j, const VadConfig& c) {
  j = json{{"window_length_s", c.window_length_s},
           {"snr_threshold_db", c.snr_threshold_db},
           {"hop_length_s", c.hop_s()},
           {"noise_percentile", c.noise_percentile},
           {"energy_floor", c.energy_floor}};
}

inline void to_json(json& j, const FrameDecision& f) {
  j = json{{"index", f.index},
           {"start_s", f.start_s},
           {"energy_db", f.energy_db},
           {"snr_db", f.snr_db},
           {"is_speech", f.is_speech}};
}

inline void to_json(json& j, const VadResult& r) {
  j = json{{"config", r.config},
           {"duration_s", r.duration_s},
           {"noise_power_db", r.noise_power_db},
           {"intervals", r.intervals},
           {"frames", r.frames}};
}

inline void to_json(json& j, const FilterSpec& s) {
  j = json{{"order", s.order},
           {"low_cutoff_hz", s.low_cutoff_hz},
           {"high_cutoff_hz", s.high_cutoff_hz},
           {"sample_rate_hz", s.sample_rate_hz}};
}

inline void to_json(json& j, const BiquadSection& s) {
  j = json{{"b0", s.b0}, {"b1", s.b1}, {"b2", s.b2}, {"a1", s.a1}, {"a2", s.a2}};
}

inline void from_json(const json& j, BiquadSection& s) {
  j.at("b0").get_to(s.b0);
  j.at("b1").get_to(s.b1);
  j.at("b2").get_to(s.b2);
  j.at("a1").get_to(s.a1);
  j.at("a2").get_to(s.a2);
}

inline void to_json(json& j, const BiquadCascade& c) { j = json{{"spec", c.spec}, {"sections", c.sections}}; }

inline void to_json(json& j, const EvalReport& r) {
  j = json{{"tp", r.tp},
           {"fp", r.fp},
           {"tn", r.tn},
           {"fn", r.fn},
           {"total", r.total()},
           {"accuracy", r.accuracy},
           {"precision", r.precision},
           {"recall", r.recall},
           {"f1", r.f1},
           {"config", r.config}};
}

inline void to_json(json& j, const SweepEntry& e) {
  j = json{{"window_s", e.window_length_s}, {"threshold_db", e.snr_threshold_db}, {"report", e.report}};
}

inline void to_json(json& j, const SweepResult& r) { j = json{{"best", r.best}, {"grid", r.grid}}; }

inline json spectrogram_to_json(const SpectrogramMatrix& m) {
  json meta{{"fft_size", m.fft_size},
            {"hop_samples", m.hop_samples},
            {"sample_rate_hz", m.sample_rate_hz},
            {"window", "hann"},
            {"frames", m.frame_count()},
            {"bins", m.bin_count()},
            {"floor_db", kSpectrogramFloorDb}};
  return json{{"meta", std::move(meta)}, {"rows", m.magnitudes_db}};
}

// -- files ------------------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Ground-truth sidecar stored next to each generated or mixed clip.
struct LabelSidecar {
  std::string speech_source;
  std::optional<std::string> ambient_source;
  std::optional<double> target_snr_db;
  std::vector<Interval> speech_intervals;
};

inline void to_json(json& j, const LabelSidecar& s) {
  j = json{{"speech_source", s.speech_source},
           {"ambient_source", s.ambient_source ? json(*s.ambient_source) : json(nullptr)},
           {"target_snr_db", s.target_snr_db ? json(*s.target_snr_db) : json(nullptr)},
           {"speech_intervals", s.speech_intervals}};
}

inline void from_json(const json& j, LabelSidecar& s) {
  s.speech_source = j.value("speech_source", std::string{});
  if (j.contains("ambient_source") && !j["ambient_source"].is_null()) s.ambient_source = j["ambient_source"].get<std::string>();
  if (j.contains("target_snr_db") && !j["target_snr_db"].is_null()) s.target_snr_db = j["target_snr_db"].get<double>();
  s.speech_intervals = j.at("speech_intervals").get<std::vector<Interval>>();
}

/// `clip.wav` -> `clip.labels.json`
inline std::filesystem::path sidecar_path(const std::filesystem::path& audio_path) {
  std::filesystem::path p = audio_path;
  p.replace_extension(".labels.json");
  return p;
}

inline std::optional<LabelSidecar> read_sidecar_if_present(const std::filesystem::path& audio_path) {
  const auto p = sidecar_path(audio_path);
  if (!std::filesystem::exists(p)) return std::nullopt;
  try {
    return read_json_file(p).get<LabelSidecar>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "bad label sidecar '" + p.string() + "': " + e.what());
  }
}

/// Manifest entries store audio paths relative to the manifest's directory.
inline void write_manifest(const std::filesystem::path& path, const std::vector<LabeledClip>& clips) {
  const auto base = path.parent_path();
  json arr = json::array();
  for (const LabeledClip& c : clips) {
    const auto rel = base.empty() ? c.audio_path : c.audio_path.lexically_relative(base);
    arr.push_back(json{{"audio_path", rel.generic_string()},
                       {"speech_intervals", c.speech_intervals},
                       {"source_note", c.source_note}});
  }
  write_json_file(path, arr);
}

inline std::vector<LabeledClip> read_manifest(const std::filesystem::path& path) {
  const json arr = read_json_file(path);
  if (!arr.is_array()) throw Error(ErrorCode::InvalidConfig, "manifest '" + path.string() + "' must be a JSON list");
  std::vector<LabeledClip> clips;
  try {
    for (const json& e : arr) {
      LabeledClip c;
      std::filesystem::path audio = e.at("audio_path").get<std::string>();
      c.audio_path = audio.is_absolute() ? audio : path.parent_path() / audio;
      c.speech_intervals = e.at("speech_intervals").get<std::vector<Interval>>();
      c.source_note = e.value("source_note", std::string{});
      clips.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "bad manifest entry in '" + path.string() + "': " + e.what());
  }
  return clips;
}

// -- CSV --------------------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace detail

inline void write_frames_csv(const VadResult& r, std::ostream& out) {
  out << "index,start_s,energy_db,snr_db,is_speech\n";
  for (const FrameDecision& f : r.frames) {
    out << f.index << ',' << detail::fmt_double(f.start_s) << ',' << detail::fmt_double(f.energy_db) << ','
        << detail::fmt_double(f.snr_db) << ',' << (f.is_speech ? 1 : 0) << '\n';
  }
}

inline void write_sweep_csv(const SweepResult& r, std::ostream& out) {
  out << "window_s,threshold_db,tp,fp,tn,fn,accuracy,precision,recall,f1\n";
  for (const SweepEntry& e : r.grid) {
    const EvalReport& m = e.report;
    out << detail::fmt_double(e.window_length_s) << ',' << detail::fmt_double(e.snr_threshold_db) << ',' << m.tp
        << ',' << m.fp << ',' << m.tn << ',' << m.fn << ',' << detail::fmt_double(m.accuracy) << ','
        << detail::fmt_double(m.precision) << ',' << detail::fmt_double(m.recall) << ','
        << detail::fmt_double(m.f1) << '\n';
  }
}

/// Uniform sweep of the cascade's response from 0 Hz to Nyquist, with the
/// two band edges always included.
inline void write_response_csv(const BiquadCascade& c, std::size_t points, std::ostream& out) {
  const double nyq = c.spec.nyquist_hz();
  const std::size_t n = std::max<std::size_t>(points, 2);
  std::vector<double> freqs;
  freqs.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    freqs.push_back(i + 1 == n ? nyq : nyq * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  freqs.push_back(c.spec.low_cutoff_hz);
  freqs.push_back(c.spec.high_cutoff_hz);
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());

  out << "freq_hz,magnitude_db\n";
  for (double f : freqs) out << detail::fmt_double(f) << ',' << detail::fmt_double(frequency_response(c, f)) << '\n';
}

}  // namespace vadkit
