#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "vadkit/filter_design.hpp"

using namespace vadkit;
using Catch::Matchers::WithinAbs;

namespace {

const BiquadCascade& default_cascade() {
  static const BiquadCascade c = design_butterworth_bandpass(FilterSpec{});
  return c;
}

double steady_state_gain_db(const BiquadCascade& c, double f) {
  const double fs = c.spec.sample_rate_hz;
  const std::size_t n = static_cast<std::size_t>(3 * fs);
  const auto x = oracle::sine(f, 0.5, fs, n);
  const AudioBuffer y = apply(c, AudioBuffer(x, c.spec.sample_rate_hz));
  const double a = oracle::tone_amplitude(y.samples, f, fs, n / 2, n);
  return 20.0 * std::log10(a / 0.5);
}

}  // namespace

TEST_CASE("default design matches the closed-form analog Butterworth response", "[filter][oracle]") {
  const BiquadCascade& c = default_cascade();
  REQUIRE(c.sections.size() == 2);
  for (double f = 5.0; f < 8000.0; f += 37.0) {
    const double expected = oracle::butterworth_bandpass_db(f, 300.0, 1500.0, 4, 16000.0);
    if (expected < -200.0) continue;
    REQUIRE_THAT(frequency_response(c, f), WithinAbs(expected, 1e-6));
    REQUIRE_THAT(oracle::polynomial_response_db(c, f), WithinAbs(expected, 1e-6));
  }
}

TEST_CASE("band edges sit at -3 dB", "[filter]") {
  const BiquadCascade& c = default_cascade();
  CHECK_THAT(frequency_response(c, 300.0), WithinAbs(-3.0103, 0.1));
  CHECK_THAT(frequency_response(c, 1500.0), WithinAbs(-3.0103, 0.1));
  CHECK_THAT(frequency_response(c, 300.0), WithinAbs(-10.0 * std::log10(2.0), 1e-9));
  CHECK_THAT(frequency_response(c, 1500.0), WithinAbs(-10.0 * std::log10(2.0), 1e-9));
}

TEST_CASE("stopband attenuation at 50 Hz and 6 kHz", "[filter]") {
  const BiquadCascade& c = default_cascade();
  CHECK(frequency_response(c, 50.0) <= -20.0);
  CHECK(frequency_response(c, 6000.0) <= -20.0);
  CHECK_THAT(frequency_response(c, 50.0), WithinAbs(-34.81, 0.01));
  CHECK_THAT(frequency_response(c, 6000.0), WithinAbs(-39.74, 0.01));
}

TEST_CASE("DC and Nyquist are structural zeros", "[filter]") {
  const BiquadCascade& c = default_cascade();
  CHECK(frequency_response(c, 0.0) == kResponseFloorDb);
  CHECK(frequency_response(c, 8000.0) == kResponseFloorDb);
}

TEST_CASE("peak of the passband sits at the geometric center", "[filter]") {
  const BiquadCascade& c = default_cascade();
  // Digital center: bilinear image of the analog center sqrt(Wl Wh).
  const double fs = 16000.0;
  const double w0 = std::sqrt(2 * fs * std::tan(M_PI * 300 / fs) * 2 * fs * std::tan(M_PI * 1500 / fs));
  const double f0 = fs / M_PI * std::atan(w0 / (2 * fs));
  CHECK_THAT(f0, WithinAbs(677.17, 0.01));
  CHECK_THAT(frequency_response(c, f0), WithinAbs(0.0, 1e-9));
  double best = -1e9;
  for (double f = 300.0; f <= 1500.0; f += 0.5) best = std::max(best, frequency_response(c, f));
  CHECK(best <= 1e-9);
  // The unwarped geometric mean of the edges is within a hair of the peak.
  CHECK_THAT(frequency_response(c, std::sqrt(300.0 * 1500.0)), WithinAbs(best, 0.05));
}

TEST_CASE("response stays monotonic on the skirts", "[filter]") {
  const BiquadCascade& c = default_cascade();
  double prev = frequency_response(c, 1.0);
  for (double f = 2.0; f <= 600.0; f += 1.0) {
    const double r = frequency_response(c, f);
    REQUIRE(r >= prev);
    prev = r;
  }
  prev = frequency_response(c, 800.0);
  for (double f = 801.0; f < 8000.0; f += 1.0) {
    const double r = frequency_response(c, f);
    REQUIRE(r <= prev);
    prev = r;
  }
}

TEST_CASE("all poles are strictly inside the unit circle", "[filter][stability]") {
  CHECK(default_cascade().max_pole_magnitude() < 1.0);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int rates[] = {8000, 16000, 22050, 44100, 48000};
  for (int trial = 0; trial < 300; ++trial) {
    FilterSpec s;
    s.sample_rate_hz = rates[trial % 5];
    s.order = 2 * (1 + trial % 5);
    const double ny = s.nyquist_hz();
    s.low_cutoff_hz = 20.0 + u(rng) * (0.8 * ny);
    s.high_cutoff_hz = s.low_cutoff_hz + 10.0 + u(rng) * (0.97 * ny - s.low_cutoff_hz);
    const BiquadCascade c = design_butterworth_bandpass(s);
    REQUIRE(c.sections.size() == static_cast<std::size_t>(s.order / 2));
    REQUIRE(c.max_pole_magnitude() < 1.0 - 1e-9);
  }
}

TEST_CASE("higher orders keep -3 dB edges and steepen", "[filter]") {
  for (int order : {2, 6, 8}) {
    FilterSpec s;
    s.order = order;
    const BiquadCascade c = design_butterworth_bandpass(s);
    CHECK(c.sections.size() == static_cast<std::size_t>(order / 2));
    CHECK_THAT(frequency_response(c, 300.0), WithinAbs(-3.0103, 1e-3));
    CHECK_THAT(frequency_response(c, 1500.0), WithinAbs(-3.0103, 1e-3));
    for (double f : {50.0, 120.0, 2500.0, 6000.0}) {
      REQUIRE_THAT(frequency_response(c, f), WithinAbs(oracle::butterworth_bandpass_db(f, 300, 1500, order, 16000), 1e-6));
    }
  }
  const double r4 = frequency_response(default_cascade(), 100.0);
  FilterSpec s8;
  s8.order = 8;
  CHECK(frequency_response(design_butterworth_bandpass(s8), 100.0) < r4);
}

TEST_CASE("invalid specifications are rejected", "[filter][errors]") {
  auto code = [](FilterSpec s) {
    try {
      design_butterworth_bandpass(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoFailure;
  };
  FilterSpec s;
  s.low_cutoff_hz = 1500;
  s.high_cutoff_hz = 300;
  CHECK(code(s) == ErrorCode::InvalidSpec);
  s = {};
  s.high_cutoff_hz = 8000;
  CHECK(code(s) == ErrorCode::InvalidSpec);
  s = {};
  s.low_cutoff_hz = 0;
  CHECK(code(s) == ErrorCode::InvalidSpec);
  s = {};
  s.order = 3;
  CHECK(code(s) == ErrorCode::InvalidSpec);
  s = {};
  s.order = 0;
  CHECK(code(s) == ErrorCode::InvalidSpec);
  s = {};
  s.sample_rate_hz = 0;
  CHECK(code(s) == ErrorCode::InvalidSpec);
}

TEST_CASE("frequency_response rejects frequencies outside [0, Nyquist]", "[filter][errors]") {
  CHECK_THROWS_AS(frequency_response(default_cascade(), -1.0), Error);
  CHECK_THROWS_AS(frequency_response(default_cascade(), 8000.5), Error);
}

TEST_CASE("identity section passes the signal through", "[filter][apply]") {
  BiquadCascade c;
  c.spec = FilterSpec{};
  c.sections.push_back(BiquadSection{});
  const AudioBuffer x(oracle::uniform_noise(1000, 0.7, 4), 16000);
  CHECK(apply(c, x) == x);
  CHECK(frequency_response(c, 1234.0) == 0.0);
}

TEST_CASE("apply on zeros yields zeros", "[filter][apply]") {
  const AudioBuffer z(std::vector<double>(16000, 0.0), 16000);
  for (double s : apply(default_cascade(), z).samples) REQUIRE(s == 0.0);
  CHECK(apply(default_cascade(), AudioBuffer({}, 16000)).empty());
}

TEST_CASE("apply rejects a buffer at a different rate", "[filter][apply][errors]") {
  try {
    apply(default_cascade(), AudioBuffer({0.0}, 44100));
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RateMismatch);
  }
}

TEST_CASE("apply matches a naive direct-form-I filter", "[filter][apply][oracle]") {
  const auto x = oracle::uniform_noise(20000, 0.9, 12);
  const AudioBuffer y = apply(default_cascade(), AudioBuffer(x, 16000));
  const auto ref = oracle::filter_direct_form_1(default_cascade(), x);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(y.samples[i], WithinAbs(ref[i], 1e-12));
}

TEST_CASE("apply is linear and time invariant", "[filter][apply][invariant]") {
  const BiquadCascade& c = default_cascade();
  const auto x1 = oracle::uniform_noise(8000, 1.0, 21);
  const auto x2 = oracle::uniform_noise(8000, 1.0, 22);
  const double a = 0.37, b = -1.9;
  std::vector<double> combo(x1.size());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x1[i] + b * x2[i];
  const auto y1 = apply(c, AudioBuffer(x1, 16000)).samples;
  const auto y2 = apply(c, AudioBuffer(x2, 16000)).samples;
  const auto yc = apply(c, AudioBuffer(combo, 16000)).samples;
  for (std::size_t i = 0; i < combo.size(); ++i) REQUIRE_THAT(yc[i], WithinAbs(a * y1[i] + b * y2[i], 1e-9));

  for (std::size_t shift : {1u, 17u, 500u}) {
    std::vector<double> delayed(shift, 0.0);
    delayed.insert(delayed.end(), x1.begin(), x1.end());
    const auto yd = apply(c, AudioBuffer(delayed, 16000)).samples;
    for (std::size_t i = 0; i < x1.size(); ++i) REQUIRE_THAT(yd[i + shift], WithinAbs(y1[i], 1e-9));
  }
}

TEST_CASE("steady-state tone gain agrees with frequency_response", "[filter][apply][oracle]") {
  const BiquadCascade& c = default_cascade();
  const double freqs[] = {60, 100, 150, 200, 250, 300, 400, 500, 600, 670,
                          800, 1000, 1200, 1400, 1500, 1800, 2200, 3000, 4500, 6000};
  for (double f : freqs) {
    INFO("f = " << f);
    REQUIRE_THAT(steady_state_gain_db(c, f), WithinAbs(frequency_response(c, f), 0.2));
  }
  CHECK(steady_state_gain_db(c, 50.0) <= -20.0);
  CHECK_THAT(steady_state_gain_db(c, 670.0), WithinAbs(0.0, 0.5));
}
