#pragma once

// Hann-windowed STFT magnitude spectrograms in dB, plus plain-text and PGM
// emitters so the output can be inspected without a plotting stack.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"

namespace vadkit {

inline constexpr std::size_t kDefaultFftSize = 1024;
inline constexpr std::size_t kDefaultSpectrogramHop = 512;
inline constexpr double kSpectrogramFloorDb = -120.0;

struct SpectrogramMatrix {
  std::vector<std::vector<double>> magnitudes_db;  // [frame][bin]
  std::size_t fft_size = kDefaultFftSize;
  std::size_t hop_samples = kDefaultSpectrogramHop;
  int sample_rate_hz = kDefaultSampleRateHz;

  std::size_t frame_count() const noexcept { return magnitudes_db.size(); }
  std::size_t bin_count() const noexcept { return fft_size / 2 + 1; }
  double bin_hz(std::size_t k) const noexcept {
    return static_cast<double>(k) * sample_rate_hz / static_cast<double>(fft_size);
  }
  double frame_time_s(std::size_t t) const noexcept {
    return static_cast<double>(t * hop_samples) / sample_rate_hz;
  }
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace detail

/// Frame t covers samples [t*hop, t*hop + fft_size); the tail is zero-padded
/// to complete the last frame. Magnitudes are amplitude-scaled by 2/sum(w)
/// so a full-scale sinusoid on a bin center reads about 0 dB.
inline SpectrogramMatrix spectrogram(const AudioBuffer& buffer, std::size_t fft_size = kDefaultFftSize,
                                     std::size_t hop_samples = kDefaultSpectrogramHop) {
  if (!detail::is_power_of_two(fft_size)) {
    throw Error(ErrorCode::InvalidFft, "fft size " + std::to_string(fft_size) + " is not a power of two");
  }
  if (hop_samples == 0) throw Error(ErrorCode::InvalidFft, "hop must be at least one sample");
  if (buffer.empty()) throw Error(ErrorCode::EmptySignal, "cannot analyse an empty signal");

  SpectrogramMatrix m;
  m.fft_size = fft_size;
  m.hop_samples = hop_samples;
  m.sample_rate_hz = buffer.sample_rate_hz;

  const std::size_t n = buffer.size();
  const std::size_t frames = n <= fft_size ? 1 : 1 + (n - fft_size + hop_samples - 1) / hop_samples;
  const std::vector<double> window = detail::hann_window(fft_size);
  double window_sum = 0.0;
  for (double w : window) window_sum += w;
  const double scale = 2.0 / window_sum;

  m.magnitudes_db.assign(frames, std::vector<double>(m.bin_count(), kSpectrogramFloorDb));
  std::vector<std::complex<double>> work(fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t begin = t * hop_samples;
    for (std::size_t i = 0; i < fft_size; ++i) {
      const std::size_t idx = begin + i;
      work[i] = idx < n ? buffer.samples[idx] * window[i] : 0.0;
    }
    detail::fft_inplace(work);
    auto& row = m.magnitudes_db[t];
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double mag = std::abs(work[k]) * scale;
      row[k] = mag > 0.0 ? std::max(20.0 * std::log10(mag), kSpectrogramFloorDb) : kSpectrogramFloorDb;
    }
  }
  return m;
}

/// Ratio, in dB, of mean cell power inside [low_hz, high_hz] to mean cell
/// power outside it. Cells are averaged in linear power over all frames.
inline double band_isolation_db(const SpectrogramMatrix& m, double low_hz, double high_hz) {
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_n = 0, out_n = 0;
  for (const auto& row : m.magnitudes_db) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      const double p = std::pow(10.0, row[k] / 10.0);
      const double f = m.bin_hz(k);
      if (f >= low_hz && f <= high_hz) {
        in_sum += p;
        ++in_n;
      } else {
        out_sum += p;
        ++out_n;
      }
    }
  }
  if (in_n == 0 || out_n == 0) throw Error(ErrorCode::OutOfRange, "band split leaves one side empty");
  return 10.0 * std::log10((in_sum / static_cast<double>(in_n)) / (out_sum / static_cast<double>(out_n)));
}

/// Long-format CSV: time_s,freq_hz,magnitude_db.
inline void write_spectrogram_csv(const SpectrogramMatrix& m, std::ostream& out) {
  out << "time_s,freq_hz,magnitude_db\n";
  char line[96];
  for (std::size_t t = 0; t < m.frame_count(); ++t) {
    for (std::size_t k = 0; k < m.bin_count(); ++k) {
      std::snprintf(line, sizeof line, "%.6f,%.4f,%.4f\n", m.frame_time_s(t), m.bin_hz(k), m.magnitudes_db[t][k]);
      out << line;
    }
  }
}

/// Binary PGM (P5); time runs left to right, frequency bottom to top.
/// Intensity maps [floor_db, ceil_db] linearly onto 0..255.
inline void write_spectrogram_pgm(const SpectrogramMatrix& m, const std::filesystem::path& path,
                                  double floor_db = -100.0, double ceil_db = 0.0) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  const std::size_t width = m.frame_count();
  const std::size_t height = m.bin_count();
  out << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> row(width);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t k = height - 1 - y;
    for (std::size_t t = 0; t < width; ++t) {
      const double v = (m.magnitudes_db[t][k] - floor_db) / (ceil_db - floor_db);
      row[t] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path.string() + "'");
}

}  // namespace vadkit
