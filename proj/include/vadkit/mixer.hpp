#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"

namespace vadkit {

/// Exactly one of `target_snr_db` / `ambient_gain` must be set.
struct MixSpec {
  std::optional<double> target_snr_db;
  std::optional<double> ambient_gain;
  std::optional<double> normalize_peak;

  static MixSpec at_snr(double snr_db, std::optional<double> peak = std::nullopt) {
    return MixSpec{snr_db, std::nullopt, peak};
  }
  static MixSpec with_gain(double gain, std::optional<double> peak = std::nullopt) {
    return MixSpec{std::nullopt, gain, peak};
  }

  void validate() const {
    if (target_snr_db.has_value() == ambient_gain.has_value()) {
      throw Error(ErrorCode::InvalidConfig, "exactly one of target SNR or ambient gain must be given");
    }
    if (target_snr_db && !std::isfinite(*target_snr_db)) throw Error(ErrorCode::InvalidConfig, "target SNR must be finite");
    if (ambient_gain && !(*ambient_gain >= 0.0 && std::isfinite(*ambient_gain))) {
      throw Error(ErrorCode::InvalidConfig, "ambient gain must be finite and non-negative");
    }
    if (normalize_peak && !(*normalize_peak > 0.0 && *normalize_peak <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "normalize peak must lie in (0, 1]");
    }
  }
};

/// Gain applied to the ambient component so that
/// 10 log10(P_speech / (g^2 P_ambient)) equals `target_snr_db`.
inline double ambient_gain_for_snr(double speech_power, double ambient_power, double target_snr_db) {
  if (speech_power <= 0.0 || ambient_power <= 0.0) {
    throw Error(ErrorCode::SilentComponent, "target-SNR mixing needs non-silent speech and ambient inputs");
  }
  return std::sqrt(speech_power / (ambient_power * std::pow(10.0, target_snr_db / 10.0)));
}

/// speech + g * ambient, optionally peak-normalized afterwards. Power is
/// measured over the full clip.
inline AudioBuffer mix(const AudioBuffer& speech, const AudioBuffer& ambient, const MixSpec& spec) {
  spec.validate();
  if (speech.sample_rate_hz != ambient.sample_rate_hz) {
    throw Error(ErrorCode::RateMismatch, "speech at " + std::to_string(speech.sample_rate_hz) + " Hz, ambient at " +
                                             std::to_string(ambient.sample_rate_hz) + " Hz");
  }
  if (speech.size() != ambient.size()) {
    throw Error(ErrorCode::LengthMismatch, "speech has " + std::to_string(speech.size()) + " samples, ambient has " +
                                               std::to_string(ambient.size()));
  }
  const double gain = spec.ambient_gain
                          ? *spec.ambient_gain
                          : ambient_gain_for_snr(mean_power(speech), mean_power(ambient), *spec.target_snr_db);
  AudioBuffer out = speech;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += gain * ambient.samples[i];
  if (spec.normalize_peak && !out.empty()) out = peak_normalize(out, *spec.normalize_peak);
  return out;
}

}  // namespace vadkit
