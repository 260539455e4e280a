#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "vadkit/audio_io.hpp"
#include "vadkit/spectro.hpp"

namespace fs = std::filesystem;
using namespace vadkit;
using Catch::Matchers::WithinAbs;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vadkit_test_audio_io";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}
void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) b.push_back((v >> s) & 0xFF);
}
void put_tag(std::vector<unsigned char>& b, const char* t) { b.insert(b.end(), t, t + 4); }

/// Hand-assembled WAV with arbitrary format fields and interleaved payload.
std::vector<unsigned char> make_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                    std::uint16_t bits, const std::vector<unsigned char>& payload,
                                    bool with_list_chunk = false) {
  std::vector<unsigned char> b;
  put_tag(b, "RIFF");
  put_u32(b, 0);  // patched below
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, format);
  put_u16(b, channels);
  put_u32(b, rate);
  put_u32(b, rate * channels * bits / 8);
  put_u16(b, channels * bits / 8);
  put_u16(b, bits);
  if (with_list_chunk) {
    put_tag(b, "LIST");
    put_u32(b, 5);
    b.insert(b.end(), {'I', 'N', 'F', 'O', 'x', 0});  // odd size plus pad byte
  }
  put_tag(b, "data");
  put_u32(b, static_cast<std::uint32_t>(payload.size()));
  b.insert(b.end(), payload.begin(), payload.end());
  const std::uint32_t riff = static_cast<std::uint32_t>(b.size() - 8);
  std::memcpy(b.data() + 4, &riff, 4);
  return b;
}

void dump(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

ErrorCode error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected vadkit::Error");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("read_wav decodes a silent PCM16 second", "[audio_io][read_wav]") {
  const auto p = temp_path("zeros.wav");
  write_wav(AudioBuffer(std::vector<double>(16000, 0.0), 16000), p, WavFormat::Pcm16);
  const auto [buf, meta] = read_wav(p);
  CHECK(buf.sample_rate_hz == 16000);
  CHECK(buf.size() == 16000);
  CHECK(meta.frame_count == 16000);
  CHECK(meta.bits_per_sample == 16);
  CHECK(meta.channel_count == 1);
  for (double s : buf.samples) REQUIRE(s == 0.0);
}

TEST_CASE("read_wav downmixes channels by their mean", "[audio_io][read_wav]") {
  SECTION("symmetric PCM16 stereo cancels") {
    std::vector<unsigned char> payload;
    for (int i = 0; i < 100; ++i) {
      put_u16(payload, static_cast<std::uint16_t>(16384));                      // +0.5
      put_u16(payload, static_cast<std::uint16_t>(static_cast<std::int16_t>(-16384)));  // -0.5
    }
    const auto p = temp_path("stereo16.wav");
    dump(p, make_wav(1, 2, 8000, 16, payload));
    const auto [buf, meta] = read_wav(p);
    CHECK(meta.channel_count == 2);
    CHECK(meta.frame_count == 100);
    CHECK(buf.sample_rate_hz == 8000);
    for (double s : buf.samples) REQUIRE(s == 0.0);
  }
  SECTION("float32 three-channel average") {
    std::vector<unsigned char> payload;
    const float vals[3] = {0.25f, 0.5f, -0.15f};
    for (int i = 0; i < 10; ++i) {
      for (float v : vals) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        put_u32(payload, u);
      }
    }
    const auto p = temp_path("tri32.wav");
    dump(p, make_wav(3, 3, 22050, 32, payload, true));
    const auto [buf, meta] = read_wav(p);
    CHECK(meta.channel_count == 3);
    const double expected = (0.25 + 0.5 + static_cast<double>(-0.15f)) / 3.0;
    for (double s : buf.samples) REQUIRE_THAT(s, WithinAbs(expected, 1e-15));
  }
}

TEST_CASE("PCM16 round trip stays within one quantization step", "[audio_io][roundtrip]") {
  const std::vector<double> tone = oracle::sine(440.0, 0.8, 16000, 16000);
  const auto p = temp_path("sine16.wav");
  write_wav(AudioBuffer(tone, 16000), p, WavFormat::Pcm16);
  const auto back = read_wav(p).first;
  REQUIRE(back.size() == tone.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < tone.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - tone[i]));
  CHECK(worst <= std::ldexp(1.0, -15));

  SECTION("constant 0.25") {
    write_wav(AudioBuffer(std::vector<double>(64, 0.25), 16000), p, WavFormat::Pcm16);
    for (double s : read_wav(p).first.samples) REQUIRE_THAT(s, WithinAbs(0.25, std::ldexp(1.0, -15)));
  }
  SECTION("full scale clamps to the largest code") {
    write_wav(AudioBuffer({1.0, -1.0}, 16000), p, WavFormat::Pcm16);
    const auto b = read_wav(p).first;
    CHECK_THAT(b.samples[0], WithinAbs(1.0, std::ldexp(1.0, -15)));
    CHECK(b.samples[1] == -1.0);
  }
}

TEST_CASE("FLOAT32 round trip is bit exact", "[audio_io][roundtrip]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::vector<double> x(5000);
  for (double& v : x) v = dist(rng);
  const auto p1 = temp_path("f32a.wav");
  const auto p2 = temp_path("f32b.wav");
  write_wav(AudioBuffer(x, 44100), p1, WavFormat::Float32);
  const auto [back, meta] = read_wav(p1);
  CHECK(meta.bits_per_sample == 32);
  CHECK(back.sample_rate_hz == 44100);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(back.samples[i] == static_cast<double>(static_cast<float>(x[i])));
  // Values already representable in single precision survive unchanged, byte for byte.
  write_wav(back, p2, WavFormat::Float32);
  CHECK(file_bytes(p1) == file_bytes(p2));
  CHECK(read_wav(p2).first == back);
}

TEST_CASE("empty buffer writes a valid zero-frame file", "[audio_io][write_wav]") {
  const auto p = temp_path("empty.wav");
  for (auto fmt : {WavFormat::Pcm16, WavFormat::Float32}) {
    write_wav(AudioBuffer({}, 16000), p, fmt);
    const auto [buf, meta] = read_wav(p);
    CHECK(buf.empty());
    CHECK(meta.frame_count == 0);
    CHECK(file_bytes(p).size() == 44);
  }
}

TEST_CASE("write_wav rejects out-of-range and non-finite samples", "[audio_io][write_wav][errors]") {
  const auto p = temp_path("bad.wav");
  CHECK(error_code_of([&] { write_wav(AudioBuffer({0.0, 1.0001}, 16000), p, WavFormat::Pcm16); }) ==
        ErrorCode::OutOfRange);
  CHECK(error_code_of([&] { write_wav(AudioBuffer({NAN}, 16000), p, WavFormat::Float32); }) == ErrorCode::OutOfRange);
  CHECK(error_code_of([&] { write_wav(AudioBuffer({0.0}, 16000), "/nonexistent-dir/x.wav", WavFormat::Pcm16); }) ==
        ErrorCode::IoFailure);
  // Float32 accepts values beyond unit range.
  CHECK_NOTHROW(write_wav(AudioBuffer({2.5}, 16000), p, WavFormat::Float32));
}

TEST_CASE("read_wav error classes", "[audio_io][read_wav][errors]") {
  const auto p = temp_path("broken.wav");
  SECTION("missing file") {
    CHECK(error_code_of([] { read_wav("/definitely/not/here.wav"); }) == ErrorCode::IoFailure);
  }
  SECTION("not a RIFF file") {
    dump(p, {'h', 'e', 'l', 'l', 'o'});
    CHECK(error_code_of([&] { read_wav(p); }) == ErrorCode::MalformedWav);
  }
  SECTION("data chunk overruns the file") {
    auto b = make_wav(1, 1, 16000, 16, {0, 0, 0, 0});
    b.resize(b.size() - 2);
    dump(p, b);
    CHECK(error_code_of([&] { read_wav(p); }) == ErrorCode::MalformedWav);
  }
  SECTION("partial frame") {
    dump(p, make_wav(1, 2, 16000, 16, {0, 0, 0, 0, 0, 0}));
    CHECK(error_code_of([&] { read_wav(p); }) == ErrorCode::MalformedWav);
  }
  SECTION("compressed payload") {
    dump(p, make_wav(2, 1, 16000, 16, {0, 0}));
    CHECK(error_code_of([&] { read_wav(p); }) == ErrorCode::UnsupportedFormat);
  }
  SECTION("24-bit PCM") {
    dump(p, make_wav(1, 1, 16000, 24, {0, 0, 0}));
    CHECK(error_code_of([&] { read_wav(p); }) == ErrorCode::UnsupportedFormat);
  }
}

TEST_CASE("resample", "[audio_io][resample]") {
  SECTION("same rate is the identity") {
    const AudioBuffer in(oracle::uniform_noise(1234, 0.5, 3), 16000);
    CHECK(resample(in, 16000) == in);
  }
  SECTION("invalid target rate") {
    CHECK(error_code_of([] { resample(AudioBuffer({0.0}, 16000), 0); }) == ErrorCode::InvalidRate);
    CHECK(error_code_of([] { resample(AudioBuffer({0.0}, 16000), -8000); }) == ErrorCode::InvalidRate);
  }
  SECTION("1 kHz tone 48 kHz -> 16 kHz keeps its STFT peak at 1 kHz") {
    const AudioBuffer in(oracle::sine(1000.0, 0.5, 48000, 48000), 48000);
    const AudioBuffer out = resample(in, 16000);
    CHECK(out.sample_rate_hz == 16000);
    CHECK(std::abs(out.duration_s() - in.duration_s()) <= 1.0 / 16000);
    const SpectrogramMatrix m = spectrogram(out, 1024, 512);
    const double bin_hz = 16000.0 / 1024;
    for (std::size_t t = 1; t + 1 < m.frame_count(); ++t) {
      const auto& row = m.magnitudes_db[t];
      const auto k = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      REQUIRE(std::abs(m.bin_hz(k) - 1000.0) <= bin_hz);
    }
  }
  SECTION("DC at 44.1 kHz stays DC at 16 kHz") {
    const AudioBuffer in(std::vector<double>(44100, 0.5), 44100);
    const AudioBuffer out = resample(in, 16000);
    REQUIRE(out.size() == 16000);
    for (std::size_t i = 64; i + 64 < out.size(); ++i) REQUIRE_THAT(out.samples[i], WithinAbs(0.5, 1e-3));
  }
  SECTION("output duration within one output period") {
    for (auto [from, to, n] : {std::tuple{44100, 16000, 1001}, {8000, 16000, 777}, {16000, 22050, 1601}, {48000, 44100, 999}}) {
      const AudioBuffer out = resample(AudioBuffer(std::vector<double>(n, 0.1), from), to);
      CHECK(std::abs(out.duration_s() - static_cast<double>(n) / from) <= 1.0 / to);
    }
  }
  SECTION("up-then-down preserves a tone") {
    const AudioBuffer in(oracle::sine(700.0, 0.5, 16000, 32000), 16000);
    const AudioBuffer back = resample(resample(in, 44100), 16000);
    const SpectrogramMatrix a = spectrogram(in), b = spectrogram(back);
    const std::size_t t = a.frame_count() / 2;
    auto peak = [&](const SpectrogramMatrix& m) {
      const auto& row = m.magnitudes_db[t];
      return static_cast<long>(std::max_element(row.begin(), row.end()) - row.begin());
    };
    CHECK(std::abs(peak(a) - peak(b)) <= 1);
  }
  SECTION("deterministic") {
    const AudioBuffer in(oracle::uniform_noise(3000, 0.5, 11), 22050);
    CHECK(resample(in, 16000) == resample(in, 16000));
  }
}

TEST_CASE("truncate_to", "[audio_io][truncate]") {
  const AudioBuffer two_s(oracle::uniform_noise(32000, 0.5, 5), 16000);
  SECTION("prefix") {
    const AudioBuffer out = truncate_to(two_s, 1.0);
    REQUIRE(out.size() == 16000);
    CHECK(std::equal(out.samples.begin(), out.samples.end(), two_s.samples.begin()));
  }
  SECTION("zero pad") {
    const AudioBuffer half(oracle::uniform_noise(8000, 0.5, 6), 16000);
    const AudioBuffer out = truncate_to(half, 1.0);
    REQUIRE(out.size() == 16000);
    CHECK(std::equal(half.samples.begin(), half.samples.end(), out.samples.begin()));
    for (std::size_t i = 8000; i < 16000; ++i) REQUIRE(out.samples[i] == 0.0);
  }
  SECTION("own duration is identity; idempotent") {
    CHECK(truncate_to(two_s, 2.0) == two_s);
    CHECK(truncate_to(truncate_to(two_s, 0.77), 0.77) == truncate_to(two_s, 0.77));
  }
  SECTION("non-integer product floors") {
    CHECK(truncate_to(two_s, 0.31).size() == 4960);
    CHECK(truncate_to(AudioBuffer({1, 2, 3}, 100), 0.29).size() == 29);
  }
  SECTION("non-positive duration") {
    CHECK(error_code_of([&] { truncate_to(two_s, 0.0); }) == ErrorCode::OutOfRange);
  }
}

TEST_CASE("peak_normalize", "[audio_io][normalize]") {
  SECTION("linear scaling") {
    const AudioBuffer in({0.5, -0.25, 0.1}, 16000);
    const AudioBuffer out = peak_normalize(in, 1.0);
    CHECK(out.samples == std::vector<double>{1.0, -0.5, 0.2});
  }
  SECTION("all-zero unchanged") {
    const AudioBuffer z(std::vector<double>(10, 0.0), 16000);
    CHECK(peak_normalize(z, 0.9) == z);
  }
  SECTION("random buffers reach the target peak") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const AudioBuffer in(oracle::uniform_noise(777, 0.01 + seed * 0.3, seed), 16000);
      REQUIRE_THAT(peak_abs(peak_normalize(in, 0.9)), WithinAbs(0.9, 1e-12));
    }
  }
  SECTION("errors") {
    CHECK(error_code_of([] { peak_normalize(AudioBuffer({}, 16000), 0.5); }) == ErrorCode::EmptySignal);
    CHECK(error_code_of([] { peak_normalize(AudioBuffer({0.3}, 16000), 1.5); }) == ErrorCode::OutOfRange);
  }
}

TEST_CASE("AudioBuffer rejects non-positive rates", "[audio_io]") {
  CHECK(error_code_of([] { AudioBuffer({0.0}, 0); }) == ErrorCode::InvalidRate);
}

TEST_CASE("write_wav output is deterministic", "[audio_io][write_wav]") {
  const AudioBuffer in(oracle::uniform_noise(999, 0.9, 1), 16000);
  const auto a = temp_path("det_a.wav"), b = temp_path("det_b.wav");
  write_wav(in, a, WavFormat::Pcm16);
  write_wav(in, b, WavFormat::Pcm16);
  CHECK(file_bytes(a) == file_bytes(b));
}
