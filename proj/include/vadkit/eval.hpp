#pragma once

// Frame-level scoring against labeled intervals and the (window x threshold)
// grid sweep used to tune the detector.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"
#include "vadkit/filter_design.hpp"
#include "vadkit/vad.hpp"

namespace vadkit {

/// Audio file plus its ground-truth speech intervals.
struct LabeledClip {
  std::filesystem::path audio_path;
  std::vector<Interval> speech_intervals;
  std::string source_note;
};

/// A clip already decoded (and resampled) to the working rate.
struct LoadedClip {
  LabeledClip label;
  AudioBuffer audio;
};

struct EvalReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  VadConfig config;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }

  /// Recomputes the derived metrics; a ratio with a zero denominator is 0.
  void update_metrics() {
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    accuracy = ratio(d(tp + tn), d(total()));
    precision = ratio(d(tp), d(tp + fp));
    recall = ratio(d(tp), d(tp + fn));
    f1 = ratio(2.0 * d(tp), d(2 * tp + fp + fn));
  }

  EvalReport& operator+=(const EvalReport& other) {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    update_metrics();
    return *this;
  }
};

inline bool same_counts(const EvalReport& a, const EvalReport& b) {
  return a.tp == b.tp && a.fp == b.fp && a.tn == b.tn && a.fn == b.fn;
}

struct SweepEntry {
  double window_length_s = 0.0;
  double snr_threshold_db = 0.0;
  EvalReport report;
};

struct SweepResult {
  std::vector<SweepEntry> grid;  // windows outer, thresholds inner
  SweepEntry best;
};

namespace detail {

inline constexpr double kTimeEps = 1e-9;

inline void check_truth(std::span<const Interval> truth, double duration_s, const std::string& what) {
  double prev_end = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Interval& iv = truth[i];
    if (!(iv.start_s >= -kTimeEps && iv.end_s > iv.start_s && iv.end_s <= duration_s + kTimeEps)) {
      throw Error(ErrorCode::LabelOutOfRange, what + ": interval [" + std::to_string(iv.start_s) + ", " +
                                                  std::to_string(iv.end_s) + "] outside clip of " +
                                                  std::to_string(duration_s) + " s");
    }
    if (i > 0 && iv.start_s < prev_end - kTimeEps) {
      throw Error(ErrorCode::LabelOutOfRange, what + ": intervals overlap or are unsorted");
    }
    prev_end = iv.end_s;
  }
}

}  // namespace detail

/// Ground truth per frame: speech iff at least half of the frame's window
/// overlaps the labeled intervals.
inline std::vector<bool> truth_frames(std::span<const FrameDecision> frames, std::span<const Interval> truth,
                                      double window_length_s) {
  std::vector<bool> out(frames.size(), false);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double lo = frames[i].start_s;
    const double hi = lo + window_length_s;
    double overlap = 0.0;
    for (const Interval& iv : truth) overlap += std::max(0.0, std::min(hi, iv.end_s) - std::max(lo, iv.start_s));
    out[i] = overlap >= 0.5 * window_length_s - detail::kTimeEps;
  }
  return out;
}

inline EvalReport score(const VadResult& result, std::span<const Interval> truth, const std::string& what = "clip") {
  detail::check_truth(truth, result.duration_s, what);
  const std::vector<bool> expected = truth_frames(result.frames, truth, result.config.window_length_s);
  EvalReport r;
  r.config = result.config;
  for (std::size_t i = 0; i < result.frames.size(); ++i) {
    const bool pred = result.frames[i].is_speech;
    if (pred && expected[i]) ++r.tp;
    else if (pred) ++r.fp;
    else if (expected[i]) ++r.fn;
    else ++r.tn;
  }
  r.update_metrics();
  return r;
}

inline EvalReport score(const VadResult& result, const LabeledClip& truth) {
  return score(result, truth.speech_intervals, truth.audio_path.string());
}

/// Decodes each clip and brings it to `rate_hz`.
inline std::vector<LoadedClip> load_clips(std::span<const LabeledClip> clips, int rate_hz) {
  std::vector<LoadedClip> out;
  out.reserve(clips.size());
  for (const LabeledClip& c : clips) {
    AudioBuffer audio = read_wav(c.audio_path).first;
    out.push_back({c, resample(audio, rate_hz)});
  }
  return out;
}

struct ClipEvaluation {
  VadResult result;
  EvalReport report;
};

struct EvalSummary {
  std::vector<ClipEvaluation> clips;
  EvalReport total;
};

/// Runs detection on every clip and aggregates confusion counts.
inline EvalSummary evaluate(std::span<const LoadedClip> clips, const BiquadCascade& cascade, const VadConfig& config) {
  EvalSummary summary;
  summary.total.config = config;
  for (const LoadedClip& clip : clips) {
    VadResult result = detect(clip.audio, cascade, config);
    EvalReport report = score(result, clip.label);
    summary.total += report;
    summary.clips.push_back({std::move(result), report});
  }
  summary.total.update_metrics();
  return summary;
}

/// Higher f1 wins; ties go to the lower threshold, then the shorter window.
inline bool better_sweep_entry(const SweepEntry& a, const SweepEntry& b) {
  if (a.report.f1 != b.report.f1) return a.report.f1 > b.report.f1;
  if (a.snr_threshold_db != b.snr_threshold_db) return a.snr_threshold_db < b.snr_threshold_db;
  return a.window_length_s < b.window_length_s;
}

/// Evaluates every (window, threshold) pair over all clips. Each clip is
/// filtered once; frame energies are computed once per window. Windows are
/// distributed over `jobs` threads and results land in fixed grid slots, so
/// the output does not depend on the job count.
inline SweepResult sweep(std::span<const LoadedClip> clips, std::span<const double> windows,
                         std::span<const double> thresholds, const BiquadCascade& cascade,
                         const VadConfig& base = {}, unsigned jobs = 1) {
  if (clips.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one clip");
  if (windows.empty() || thresholds.empty()) throw Error(ErrorCode::InvalidConfig, "sweep grids must be non-empty");

  std::vector<AudioBuffer> filtered;
  filtered.reserve(clips.size());
  for (const LoadedClip& c : clips) filtered.push_back(apply(cascade, c.audio));

  SweepResult out;
  out.grid.resize(windows.size() * thresholds.size());

  auto run_window = [&](std::size_t wi) {
    VadConfig config = base;
    config.window_length_s = windows[wi];
    config.hop_length_s.reset();
    std::vector<std::vector<double>> energies;
    energies.reserve(clips.size());
    try {
      config.validate();
      for (const AudioBuffer& f : filtered) energies.push_back(frame_energies_db(f, config));
    } catch (const Error& e) {
      throw Error(e.code(), "window " + std::to_string(windows[wi]) + " s: " + e.what());
    }
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
      config.snr_threshold_db = thresholds[ti];
      SweepEntry& entry = out.grid[wi * thresholds.size() + ti];
      entry.window_length_s = windows[wi];
      entry.snr_threshold_db = thresholds[ti];
      entry.report = EvalReport{};
      entry.report.config = config;
      try {
        config.validate();
        for (std::size_t c = 0; c < clips.size(); ++c) {
          const VadResult r = classify_energies(energies[c], filtered[c].duration_s(), config);
          entry.report += score(r, clips[c].label);
        }
      } catch (const Error& e) {
        throw Error(e.code(), "window " + std::to_string(windows[wi]) + " s, threshold " +
                                  std::to_string(thresholds[ti]) + " dB: " + e.what());
      }
      entry.report.update_metrics();
    }
  };

  const unsigned workers = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(windows.size())));
  if (workers == 1) {
    for (std::size_t wi = 0; wi < windows.size(); ++wi) run_window(wi);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(windows.size());
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t wi = next++; wi < windows.size(); wi = next++) {
          try {
            run_window(wi);
          } catch (...) {
            failures[wi] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  out.best = out.grid.front();
  for (const SweepEntry& e : out.grid) {
    if (better_sweep_entry(e, out.best)) out.best = e;
  }
  return out;
}

}  // namespace vadkit
