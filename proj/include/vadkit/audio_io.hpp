#pragma once

// WAV decode/encode and the buffer-conditioning steps every pipeline stage
// relies on: resampling to a common rate, truncation/padding to a common
// length, and peak normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "vadkit/error.hpp"

namespace vadkit {

/// Canonical working rate of the pipeline.
inline constexpr int kDefaultSampleRateHz = 16000;

/// Mono signal with its sample rate. Samples are dimensionless amplitudes
/// with a nominal range of [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRateHz;

  AudioBuffer() = default;
  AudioBuffer(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate_hz(rate) {
    if (rate <= 0) {
      throw Error(ErrorCode::InvalidRate, "sample rate must be positive, got " + std::to_string(rate));
    }
  }

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

struct WavMetadata {
  int channel_count = 1;
  int bits_per_sample = 16;
  int sample_rate_hz = kDefaultSampleRateHz;
  std::size_t frame_count = 0;
};

enum class WavFormat { Pcm16, Float32 };

namespace detail {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint16_t load_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void store_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void store_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>((v >> shift) & 0xFF));
}

inline void store_tag(std::vector<unsigned char>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

inline bool tag_is(const unsigned char* p, const char (&tag)[5]) { return std::memcmp(p, tag, 4) == 0; }

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for '" + path.string() + "'");
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

inline double bessel_i0(double x) {
  // Power series; converges quickly for the argument range used by Kaiser windows.
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= half_sq / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Decodes a RIFF/WAVE file holding PCM16 or FLOAT32 data and downmixes it to
/// mono by averaging channels. Unknown chunks are skipped.
inline std::pair<AudioBuffer, WavMetadata> read_wav(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = detail::read_file_bytes(path);
  const std::string where = " in '" + path.string() + "'";
  if (bytes.size() < 12 || !detail::tag_is(bytes.data(), "RIFF") || !detail::tag_is(bytes.data() + 8, "WAVE")) {
    throw Error(ErrorCode::MalformedWav, "missing RIFF/WAVE header" + where);
  }

  bool have_fmt = false;
  std::uint16_t format = 0;
  WavMetadata meta;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t chunk_size = detail::load_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body) {
      throw Error(ErrorCode::MalformedWav, "chunk size exceeds file length" + where);
    }
    if (detail::tag_is(chunk, "fmt ")) {
      if (chunk_size < 16) throw Error(ErrorCode::MalformedWav, "fmt chunk too short" + where);
      const unsigned char* f = bytes.data() + body;
      format = detail::load_u16(f);
      meta.channel_count = detail::load_u16(f + 2);
      meta.sample_rate_hz = static_cast<int>(detail::load_u32(f + 4));
      meta.bits_per_sample = detail::load_u16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (chunk_size < 40) throw Error(ErrorCode::MalformedWav, "extensible fmt chunk too short" + where);
        format = detail::load_u16(f + 24);
      }
      have_fmt = true;
    } else if (detail::tag_is(chunk, "data")) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1U);
  }

  if (!have_fmt) throw Error(ErrorCode::MalformedWav, "no fmt chunk" + where);
  if (data == nullptr) throw Error(ErrorCode::MalformedWav, "no data chunk" + where);
  if (format != detail::kFormatPcm && format != detail::kFormatFloat) {
    throw Error(ErrorCode::UnsupportedFormat, "compression code " + std::to_string(format) + where);
  }
  if ((format == detail::kFormatPcm && meta.bits_per_sample != 16) ||
      (format == detail::kFormatFloat && meta.bits_per_sample != 32)) {
    throw Error(ErrorCode::UnsupportedFormat,
                std::to_string(meta.bits_per_sample) + "-bit samples for code " + std::to_string(format) + where);
  }
  if (meta.channel_count < 1) throw Error(ErrorCode::MalformedWav, "zero channels" + where);
  if (meta.sample_rate_hz <= 0) throw Error(ErrorCode::MalformedWav, "zero sample rate" + where);

  const std::size_t bytes_per_sample = static_cast<std::size_t>(meta.bits_per_sample) / 8;
  const std::size_t block = bytes_per_sample * static_cast<std::size_t>(meta.channel_count);
  if (data_size % block != 0) {
    throw Error(ErrorCode::MalformedWav, "data chunk is not a whole number of frames" + where);
  }
  meta.frame_count = data_size / block;

  std::vector<double> mono(meta.frame_count, 0.0);
  const double inv_channels = 1.0 / static_cast<double>(meta.channel_count);
  for (std::size_t i = 0; i < meta.frame_count; ++i) {
    double acc = 0.0;
    for (int c = 0; c < meta.channel_count; ++c) {
      const unsigned char* p = data + i * block + static_cast<std::size_t>(c) * bytes_per_sample;
      if (format == detail::kFormatPcm) {
        acc += static_cast<double>(static_cast<std::int16_t>(detail::load_u16(p))) / 32768.0;
      } else {
        const std::uint32_t bits = detail::load_u32(p);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v)) throw Error(ErrorCode::MalformedWav, "non-finite float sample" + where);
        acc += static_cast<double>(v);
      }
    }
    mono[i] = meta.channel_count == 1 ? acc : acc * inv_channels;
  }
  return {AudioBuffer(std::move(mono), meta.sample_rate_hz), meta};
}

/// Encodes a mono buffer. PCM16 rejects samples outside [-1, 1]; FLOAT32
/// stores each sample rounded to single precision.
inline void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path, WavFormat format) {
  const bool pcm = format == WavFormat::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::size_t data_size = buffer.size() * (bits / 8);
  if (data_size > 0xFFFFFFFFULL - 36) throw Error(ErrorCode::OutOfRange, "buffer too long for a WAV file");

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::store_tag(out, "RIFF");
  detail::store_u32(out, static_cast<std::uint32_t>(36 + data_size));
  detail::store_tag(out, "WAVE");
  detail::store_tag(out, "fmt ");
  detail::store_u32(out, 16);
  detail::store_u16(out, pcm ? detail::kFormatPcm : detail::kFormatFloat);
  detail::store_u16(out, 1);
  detail::store_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz));
  detail::store_u32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz) * (bits / 8));
  detail::store_u16(out, static_cast<std::uint16_t>(bits / 8));
  detail::store_u16(out, bits);
  detail::store_tag(out, "data");
  detail::store_u32(out, static_cast<std::uint32_t>(data_size));

  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double s = buffer.samples[i];
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::OutOfRange, "non-finite sample at index " + std::to_string(i));
    }
    if (pcm) {
      if (std::abs(s) > 1.0) {
        throw Error(ErrorCode::OutOfRange, "sample " + std::to_string(s) + " at index " + std::to_string(i) +
                                               " exceeds PCM16 range");
      }
      const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      detail::store_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      detail::store_u32(out, u);
    }
  }
  detail::write_file_bytes(path, out);
}

/// Polyphase windowed-sinc resampler (Kaiser window, beta 8.6, 64 taps per
/// phase). Each phase is normalized to unit DC gain. Samples outside the
/// input are treated as zero.
inline AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz) {
  if (target_rate_hz <= 0) {
    throw Error(ErrorCode::InvalidRate, "target rate must be positive, got " + std::to_string(target_rate_hz));
  }
  if (target_rate_hz == buffer.sample_rate_hz) return buffer;

  constexpr int kTaps = 64;
  constexpr int kHalf = kTaps / 2;
  constexpr double kBeta = 8.6;

  const std::int64_t g = std::gcd(static_cast<std::int64_t>(buffer.sample_rate_hz), std::int64_t{target_rate_hz});
  const std::int64_t up = target_rate_hz / g;
  const std::int64_t down = buffer.sample_rate_hz / g;
  const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double i0_beta = detail::bessel_i0(kBeta);

  auto phase_taps = [&](std::int64_t phase) {
    std::array<double, kTaps> taps{};
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double sum = 0.0;
    for (int k = 0; k < kTaps; ++k) {
      const double offset = static_cast<double>(k - kHalf + 1) - frac;
      const double r = offset / static_cast<double>(kHalf);
      const double w = std::abs(r) < 1.0 ? detail::bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta : 0.0;
      taps[k] = cutoff * detail::sinc(cutoff * offset) * w;
      sum += taps[k];
    }
    for (double& t : taps) t /= sum;
    return taps;
  };

  // Cache phase tables when the phase count is modest; otherwise compute on demand.
  constexpr std::int64_t kMaxCachedPhases = 4096;
  std::vector<std::array<double, kTaps>> table;
  if (up <= kMaxCachedPhases) {
    table.reserve(static_cast<std::size_t>(up));
    for (std::int64_t p = 0; p < up; ++p) table.push_back(phase_taps(p));
  }

  const auto n_in = static_cast<std::int64_t>(buffer.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  std::vector<double> out(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const std::array<double, kTaps> taps = table.empty() ? phase_taps(phase) : table[static_cast<std::size_t>(phase)];
    double acc = 0.0;
    for (int k = 0; k < kTaps; ++k) {
      const std::int64_t j = base + k - kHalf + 1;
      if (j >= 0 && j < n_in) acc += taps[k] * buffer.samples[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  return AudioBuffer(std::move(out), target_rate_hz);
}

/// Number of samples spanned by `duration_s` at `rate_hz`, floored. A tiny
/// tolerance absorbs binary representation error (0.31 * 16000 etc.).
inline std::size_t samples_for_duration(double duration_s, int rate_hz) {
  return static_cast<std::size_t>(std::floor(duration_s * static_cast<double>(rate_hz) + 1e-9));
}

/// Cuts the buffer to floor(duration * rate) samples, zero-padding when the
/// input is shorter.
inline AudioBuffer truncate_to(const AudioBuffer& buffer, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::OutOfRange, "duration must be positive, got " + std::to_string(duration_s));
  }
  AudioBuffer out = buffer;
  out.samples.resize(samples_for_duration(duration_s, buffer.sample_rate_hz), 0.0);
  return out;
}

inline double peak_abs(const AudioBuffer& buffer) {
  double peak = 0.0;
  for (double s : buffer.samples) peak = std::max(peak, std::abs(s));
  return peak;
}

/// Scales the buffer so its largest absolute sample equals `target_peak`.
/// All-zero input is returned unchanged.
inline AudioBuffer peak_normalize(const AudioBuffer& buffer, double target_peak) {
  if (buffer.empty()) throw Error(ErrorCode::EmptySignal, "cannot normalize an empty buffer");
  if (!(target_peak > 0.0 && target_peak <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "target peak must lie in (0, 1], got " + std::to_string(target_peak));
  }
  const double peak = peak_abs(buffer);
  if (peak == 0.0) return buffer;
  AudioBuffer out = buffer;
  const double gain = target_peak / peak;
  for (double& s : out.samples) s *= gain;
  // Pin the extreme sample so the post-condition holds exactly.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (std::abs(buffer.samples[i]) == peak) out.samples[i] = std::copysign(target_peak, buffer.samples[i]);
  }
  return out;
}

/// Average power (mean squared amplitude); zero for an empty buffer.
inline double mean_power(const AudioBuffer& buffer) {
  if (buffer.empty()) return 0.0;
  double acc = 0.0;
  for (double s : buffer.samples) acc += s * s;
  return acc / static_cast<double>(buffer.size());
}

}  // namespace vadkit
