#pragma once

// Noise-power energy detector: frame the band-limited signal, estimate a
// noise floor from the quiet end of the frame-energy distribution, and flag
// frames whose energy clears the floor by the SNR threshold.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"
#include "vadkit/filter_design.hpp"

namespace vadkit {

inline constexpr double kDefaultWindowLengthS = 0.31;
inline constexpr double kDefaultSnrThresholdDb = 90.0;
inline constexpr double kDefaultNoisePercentile = 0.10;
inline constexpr double kDefaultEnergyFloor = 1e-10;

struct VadConfig {
  double window_length_s = kDefaultWindowLengthS;
  double snr_threshold_db = kDefaultSnrThresholdDb;
  std::optional<double> hop_length_s;  // unset: equal to the window (no overlap)
  double noise_percentile = kDefaultNoisePercentile;
  double energy_floor = kDefaultEnergyFloor;

  double hop_s() const noexcept { return hop_length_s.value_or(window_length_s); }

  void validate() const {
    if (!(window_length_s > 0.0) || !std::isfinite(window_length_s)) {
      throw Error(ErrorCode::InvalidConfig, "window length must be positive");
    }
    const double hop = hop_s();
    if (!(hop > 0.0 && hop <= window_length_s)) {
      throw Error(ErrorCode::InvalidConfig, "hop must satisfy 0 < hop <= window, got " + std::to_string(hop));
    }
    if (!(noise_percentile > 0.0 && noise_percentile < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "noise percentile must lie in (0, 1)");
    }
    if (!(energy_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "energy floor must be positive");
    if (std::isnan(snr_threshold_db)) throw Error(ErrorCode::InvalidConfig, "threshold is NaN");
  }
};

struct FrameDecision {
  std::size_t index = 0;
  double start_s = 0.0;
  double energy_db = 0.0;
  double snr_db = 0.0;
  bool is_speech = false;

  friend bool operator==(const FrameDecision&, const FrameDecision&) = default;
};

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  double length_s() const noexcept { return end_s - start_s; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct VadResult {
  std::vector<FrameDecision> frames;
  std::vector<Interval> intervals;
  double noise_power_db = 0.0;
  VadConfig config;
  double duration_s = 0.0;  // of the analysed signal
};

/// Sample geometry of the frame grid for a given buffer length and rate.
struct FrameGrid {
  std::size_t window_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t count = 0;

  static FrameGrid make(std::size_t signal_length, int rate_hz, const VadConfig& config) {
    if (signal_length == 0) throw Error(ErrorCode::EmptySignal, "cannot frame an empty signal");
    config.validate();
    FrameGrid g;
    const double fs = static_cast<double>(rate_hz);
    g.window_samples = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.window_length_s * fs)));
    g.hop_samples = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.hop_s() * fs)));
    g.count = (signal_length + g.hop_samples - 1) / g.hop_samples;
    return g;
  }

  std::size_t start(std::size_t frame) const noexcept { return frame * hop_samples; }
};

/// Slices the signal into frames; frame i covers [i*hop, i*hop + window)
/// samples, zero-padded past the end of the signal.
inline std::vector<std::vector<double>> frame_signal(const AudioBuffer& buffer, const VadConfig& config) {
  const FrameGrid grid = FrameGrid::make(buffer.size(), buffer.sample_rate_hz, config);
  std::vector<std::vector<double>> frames;
  frames.reserve(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) {
    std::vector<double> frame(grid.window_samples, 0.0);
    const std::size_t begin = grid.start(i);
    const std::size_t end = std::min(buffer.size(), begin + grid.window_samples);
    std::copy(buffer.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              buffer.samples.begin() + static_cast<std::ptrdiff_t>(end), frame.begin());
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// 10 log10(max(mean(x^2), floor)).
inline double frame_energy_db(std::span<const double> frame, double floor) {
  double power = 0.0;
  if (!frame.empty()) {
    for (double x : frame) power += x * x;
    power /= static_cast<double>(frame.size());
  }
  return 10.0 * std::log10(std::max(power, floor));
}

/// Nearest-rank `noise_percentile` quantile of the frame energies, clamped
/// below at the energy floor.
inline double estimate_noise_floor_db(std::span<const double> energies_db, const VadConfig& config) {
  if (energies_db.empty()) throw Error(ErrorCode::NoFrames, "noise floor needs at least one frame");
  std::vector<double> sorted(energies_db.begin(), energies_db.end());
  const auto n = sorted.size();
  const auto rank = static_cast<std::size_t>(std::ceil(config.noise_percentile * static_cast<double>(n)));
  const std::size_t idx = std::min(n, std::max<std::size_t>(rank, 1)) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  return std::max(sorted[idx], 10.0 * std::log10(config.energy_floor));
}

/// Maximal runs of speech frames as [first.start, last.start + window].
inline std::vector<Interval> merge_intervals(std::span<const FrameDecision> frames, const VadConfig& config) {
  std::vector<Interval> out;
  std::optional<std::size_t> run_start;
  for (std::size_t i = 0; i <= frames.size(); ++i) {
    const bool speech = i < frames.size() && frames[i].is_speech;
    if (speech && !run_start) run_start = i;
    if (!speech && run_start) {
      out.push_back({frames[*run_start].start_s, frames[i - 1].start_s + config.window_length_s});
      run_start.reset();
    }
  }
  return out;
}

/// Frame energies of an already-filtered signal on the config's frame grid.
inline std::vector<double> frame_energies_db(const AudioBuffer& filtered, const VadConfig& config) {
  const FrameGrid grid = FrameGrid::make(filtered.size(), filtered.sample_rate_hz, config);
  std::vector<double> energies(grid.count);
  std::vector<double> padded(grid.window_samples, 0.0);
  for (std::size_t i = 0; i < grid.count; ++i) {
    const std::size_t begin = grid.start(i);
    const std::size_t available = std::min(grid.window_samples, filtered.size() - begin);
    std::span<const double> frame(filtered.samples.data() + begin, available);
    if (available < grid.window_samples) {
      std::fill(padded.begin(), padded.end(), 0.0);
      std::copy(frame.begin(), frame.end(), padded.begin());
      frame = padded;
    }
    energies[i] = frame_energy_db(frame, config.energy_floor);
  }
  return energies;
}

/// Threshold decision and interval merge over precomputed frame energies.
inline VadResult classify_energies(std::span<const double> energies_db, double duration_s, const VadConfig& config) {
  VadResult result;
  result.config = config;
  result.duration_s = duration_s;
  result.noise_power_db = estimate_noise_floor_db(energies_db, config);
  result.frames.reserve(energies_db.size());
  const double hop = config.hop_s();
  for (std::size_t i = 0; i < energies_db.size(); ++i) {
    FrameDecision d;
    d.index = i;
    d.start_s = static_cast<double>(i) * hop;
    d.energy_db = energies_db[i];
    d.snr_db = energies_db[i] - result.noise_power_db;
    d.is_speech = d.snr_db >= config.snr_threshold_db;
    result.frames.push_back(d);
  }
  result.intervals = merge_intervals(result.frames, config);
  return result;
}

/// Detection on a signal that has already been band-limited.
inline VadResult detect_filtered(const AudioBuffer& filtered, const VadConfig& config) {
  const std::vector<double> energies = frame_energies_db(filtered, config);
  return classify_energies(energies, filtered.duration_s(), config);
}

/// Full pipeline: bandpass -> frame -> energy -> noise floor -> SNR
/// threshold -> interval merge.
inline VadResult detect(const AudioBuffer& buffer, const BiquadCascade& cascade, const VadConfig& config) {
  if (buffer.empty()) throw Error(ErrorCode::EmptySignal, "cannot run detection on an empty signal");
  config.validate();
  return detect_filtered(apply(cascade, buffer), config);
}

/// Per-sample mask of the intervals, used to gate a signal down to its
/// detected speech.
inline AudioBuffer gate_to_intervals(const AudioBuffer& buffer, std::span<const Interval> intervals) {
  AudioBuffer out(std::vector<double>(buffer.size(), 0.0), buffer.sample_rate_hz);
  const double fs = static_cast<double>(buffer.sample_rate_hz);
  auto to_sample = [&](double t) {
    return std::min(buffer.size(), static_cast<std::size_t>(std::max(0LL, std::llround(t * fs))));
  };
  for (const Interval& iv : intervals) {
    for (std::size_t i = to_sample(iv.start_s); i < to_sample(iv.end_s); ++i) out.samples[i] = buffer.samples[i];
  }
  return out;
}

}  // namespace vadkit
