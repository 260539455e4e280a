#pragma once

// Butterworth bandpass design as a cascade of second-order sections:
// analog lowpass prototype -> prewarped lowpass-to-bandpass mapping ->
// bilinear transform -> pole pairing into biquads.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "vadkit/audio_io.hpp"
#include "vadkit/error.hpp"

namespace vadkit {

inline constexpr int kDefaultFilterOrder = 4;
inline constexpr double kDefaultLowCutoffHz = 300.0;
inline constexpr double kDefaultHighCutoffHz = 1500.0;

/// Reported in place of -inf for structural zeros of the response.
inline constexpr double kResponseFloorDb = -300.0;

struct FilterSpec {
  int order = kDefaultFilterOrder;  // overall bandpass order
  double low_cutoff_hz = kDefaultLowCutoffHz;
  double high_cutoff_hz = kDefaultHighCutoffHz;
  int sample_rate_hz = kDefaultSampleRateHz;

  double nyquist_hz() const noexcept { return 0.5 * sample_rate_hz; }

  void validate() const {
    if (sample_rate_hz <= 0) throw Error(ErrorCode::InvalidSpec, "sample rate must be positive");
    if (order < 2 || order % 2 != 0) {
      throw Error(ErrorCode::InvalidSpec, "order must be even and >= 2, got " + std::to_string(order));
    }
    if (!(low_cutoff_hz > 0.0 && low_cutoff_hz < high_cutoff_hz && high_cutoff_hz < nyquist_hz())) {
      throw Error(ErrorCode::InvalidSpec, "need 0 < low (" + std::to_string(low_cutoff_hz) + ") < high (" +
                                              std::to_string(high_cutoff_hz) + ") < Nyquist (" +
                                              std::to_string(nyquist_hz()) + ")");
    }
  }

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const {
    const std::complex<double> z_inv2 = z_inv * z_inv;
    return (b0 + b1 * z_inv + b2 * z_inv2) / (1.0 + a1 * z_inv + a2 * z_inv2);
  }

  /// Largest pole magnitude of 1 + a1 z^-1 + a2 z^-2.
  double max_pole_magnitude() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2, 0.0));
    const std::complex<double> p1 = 0.5 * (-a1 + disc);
    const std::complex<double> p2 = 0.5 * (-a1 - disc);
    return std::max(std::abs(p1), std::abs(p2));
  }

  friend bool operator==(const BiquadSection&, const BiquadSection&) = default;
};

struct BiquadCascade {
  std::vector<BiquadSection> sections;
  FilterSpec spec;

  double max_pole_magnitude() const {
    double m = 0.0;
    for (const auto& s : sections) m = std::max(m, s.max_pole_magnitude());
    return m;
  }
};

namespace detail {

using cplx = std::complex<double>;

/// Gain-normalizes a section with poles p, conj(p) (or two real poles) and
/// zeros at z = +1 and z = -1 to unit magnitude at z_ref.
inline BiquadSection make_bandpass_section(cplx p1, cplx p2, cplx z_ref_inv) {
  BiquadSection s;
  s.b0 = 1.0;
  s.b1 = 0.0;
  s.b2 = -1.0;
  s.a1 = -(p1 + p2).real();
  s.a2 = (p1 * p2).real();
  const double mag = std::abs(s.response(z_ref_inv));
  s.b0 /= mag;
  s.b2 /= mag;
  return s;
}

}  // namespace detail

/// Designs the digital Butterworth bandpass for `spec`. Band edges land at
/// -3 dB exactly (prewarped), zeros sit at DC and Nyquist, and each section
/// has unit gain at the digital center frequency.
inline BiquadCascade design_butterworth_bandpass(const FilterSpec& spec) {
  using detail::cplx;
  spec.validate();

  const double fs = static_cast<double>(spec.sample_rate_hz);
  const int proto_order = spec.order / 2;
  const double w_lo = 2.0 * fs * std::tan(M_PI * spec.low_cutoff_hz / fs);
  const double w_hi = 2.0 * fs * std::tan(M_PI * spec.high_cutoff_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  std::vector<cplx> digital_poles;
  digital_poles.reserve(static_cast<std::size_t>(spec.order));
  for (int k = 1; k <= proto_order; ++k) {
    const double theta = M_PI * static_cast<double>(2 * k + proto_order - 1) / static_cast<double>(2 * proto_order);
    const cplx proto = std::polar(1.0, theta);
    // s^2 - proto*bw*s + w0^2 = 0
    const cplx pb = proto * bw;
    const cplx root = std::sqrt(pb * pb - 4.0 * w0_sq);
    for (const cplx s : {0.5 * (pb + root), 0.5 * (pb - root)}) {
      digital_poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
    }
  }

  // Split into upper-half-plane complex poles (each paired with its
  // conjugate) and real poles (paired with each other).
  constexpr double kImagEps = 1e-12;
  std::vector<cplx> upper;
  std::vector<double> real_poles;
  for (const cplx& p : digital_poles) {
    if (std::abs(p.imag()) <= kImagEps) {
      real_poles.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(real_poles.begin(), real_poles.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });

  struct PolePair {
    cplx p1, p2;
  };
  std::vector<PolePair> pairs;
  for (const cplx& p : upper) pairs.push_back({p, std::conj(p)});
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) pairs.push_back({real_poles[i], real_poles[i + 1]});
  if (pairs.size() != static_cast<std::size_t>(proto_order)) {
    throw Error(ErrorCode::InvalidSpec, "pole pairing failed for order " + std::to_string(spec.order));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const PolePair& a, const PolePair& b) {
    return std::max(std::abs(a.p1), std::abs(a.p2)) > std::max(std::abs(b.p1), std::abs(b.p2));
  });

  const double center_rad = 2.0 * std::atan(std::sqrt(w0_sq) / (2.0 * fs));
  const cplx z_ref_inv = std::polar(1.0, -center_rad);

  BiquadCascade cascade;
  cascade.spec = spec;
  for (const PolePair& pp : pairs) cascade.sections.push_back(detail::make_bandpass_section(pp.p1, pp.p2, z_ref_inv));
  return cascade;
}

/// 20 log10 |H(e^{j 2 pi f / fs})| as the sum of per-section dB values,
/// floored at kResponseFloorDb.
inline double frequency_response(const BiquadCascade& cascade, double freq_hz) {
  const double fs = static_cast<double>(cascade.spec.sample_rate_hz);
  if (!(freq_hz >= 0.0 && freq_hz <= 0.5 * fs)) {
    throw Error(ErrorCode::OutOfRange, "frequency " + std::to_string(freq_hz) + " Hz outside [0, Nyquist]");
  }
  std::complex<double> z_inv;
  if (freq_hz == 0.0) {
    z_inv = 1.0;
  } else if (freq_hz == 0.5 * fs) {
    z_inv = -1.0;
  } else {
    z_inv = std::polar(1.0, -2.0 * M_PI * freq_hz / fs);
  }
  double total_db = 0.0;
  for (const auto& section : cascade.sections) {
    const double mag = std::abs(section.response(z_inv));
    if (mag == 0.0) return kResponseFloorDb;
    total_db += 20.0 * std::log10(mag);
  }
  return std::max(total_db, kResponseFloorDb);
}

/// Causal, zero-initial-state filtering through each section in transposed
/// direct form II.
inline AudioBuffer apply(const BiquadCascade& cascade, const AudioBuffer& buffer) {
  if (buffer.sample_rate_hz != cascade.spec.sample_rate_hz) {
    throw Error(ErrorCode::RateMismatch, "buffer at " + std::to_string(buffer.sample_rate_hz) +
                                             " Hz, filter designed for " +
                                             std::to_string(cascade.spec.sample_rate_hz) + " Hz");
  }
  AudioBuffer out = buffer;
  for (const auto& s : cascade.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& x : out.samples) {
      const double y = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * y + z2;
      z2 = s.b2 * x - s.a2 * y;
      x = y;
    }
  }
  return out;
}

}  // namespace vadkit
