#pragma once

// Shared configuration for the command-line tools. Read from JSON; any key
// may be omitted, in which case the default applies.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "vadkit/error.hpp"
#include "vadkit/filter_design.hpp"
#include "vadkit/json_io.hpp"
#include "vadkit/spectro.hpp"
#include "vadkit/vad.hpp"

namespace vadkit {

struct CliConfig {
  int sample_rate_hz = kDefaultSampleRateHz;
  int filter_order = kDefaultFilterOrder;
  double low_cutoff_hz = kDefaultLowCutoffHz;
  double high_cutoff_hz = kDefaultHighCutoffHz;
  VadConfig vad;
  std::size_t fft_size = kDefaultFftSize;
  std::size_t spectrogram_hop = kDefaultSpectrogramHop;

  FilterSpec filter_spec() const { return FilterSpec{filter_order, low_cutoff_hz, high_cutoff_hz, sample_rate_hz}; }

  void validate() const {
    if (sample_rate_hz <= 0) throw Error(ErrorCode::InvalidConfig, "sample_rate_hz must be positive");
    try {
      filter_spec().validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    vad.validate();
    if (!detail::is_power_of_two(fft_size)) throw Error(ErrorCode::InvalidConfig, "spectrogram fft must be a power of two");
    if (spectrogram_hop == 0) throw Error(ErrorCode::InvalidConfig, "spectrogram hop must be positive");
  }
};

inline void to_json(json& j, const CliConfig& c) {
  j = json{{"sample_rate_hz", c.sample_rate_hz},
           {"filter", {{"order", c.filter_order}, {"low_hz", c.low_cutoff_hz}, {"high_hz", c.high_cutoff_hz}}},
           {"vad",
            {{"window_s", c.vad.window_length_s},
             {"threshold_db", c.vad.snr_threshold_db},
             {"hop_s", c.vad.hop_length_s ? json(*c.vad.hop_length_s) : json(nullptr)},  // null: same as window
             {"noise_percentile", c.vad.noise_percentile},
             {"energy_floor", c.vad.energy_floor}}},
           {"spectrogram", {{"fft", c.fft_size}, {"hop", c.spectrogram_hop}}}};
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) throw Error(ErrorCode::InvalidConfig, "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_if_present(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) obj.at(key).get_to(target);
}

}  // namespace detail

/// Overlays the values present in `j` onto `base`.
inline CliConfig apply_config_json(CliConfig base, const json& j) {
  using detail::read_if_present;
  try {
    detail::reject_unknown_keys(j, {"sample_rate_hz", "filter", "vad", "spectrogram"}, "config");
    read_if_present(j, "sample_rate_hz", base.sample_rate_hz);
    if (j.contains("filter")) {
      const json& f = j["filter"];
      detail::reject_unknown_keys(f, {"order", "low_hz", "high_hz"}, "config.filter");
      read_if_present(f, "order", base.filter_order);
      read_if_present(f, "low_hz", base.low_cutoff_hz);
      read_if_present(f, "high_hz", base.high_cutoff_hz);
    }
    if (j.contains("vad")) {
      const json& v = j["vad"];
      detail::reject_unknown_keys(v, {"window_s", "threshold_db", "hop_s", "noise_percentile", "energy_floor"},
                                  "config.vad");
      read_if_present(v, "window_s", base.vad.window_length_s);
      read_if_present(v, "threshold_db", base.vad.snr_threshold_db);
      if (v.contains("hop_s") && !v["hop_s"].is_null()) base.vad.hop_length_s = v["hop_s"].get<double>();
      read_if_present(v, "noise_percentile", base.vad.noise_percentile);
      read_if_present(v, "energy_floor", base.vad.energy_floor);
    }
    if (j.contains("spectrogram")) {
      const json& s = j["spectrogram"];
      detail::reject_unknown_keys(s, {"fft", "hop"}, "config.spectrogram");
      read_if_present(s, "fft", base.fft_size);
      read_if_present(s, "hop", base.spectrogram_hop);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  return base;
}

inline CliConfig load_config(const std::filesystem::path& path) {
  return apply_config_json(CliConfig{}, read_json_file(path));
}

}  // namespace vadkit
