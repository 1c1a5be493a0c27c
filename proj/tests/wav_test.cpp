#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "beats/errors.hpp"
#include "beats/wav.hpp"

using namespace beats;
namespace fs = std::filesystem;

namespace {

std::string temp_wav(const char* name) {
  return (fs::temp_directory_path() / name).string();
}

std::vector<unsigned char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t u32(const std::vector<unsigned char>& b, std::size_t off) {
  return b[off] | (b[off + 1] << 8) | (b[off + 2] << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

TEST_CASE("single sample round trip stays within quantization") {
  Waveform w;
  w.samples = {0.123456};
  const auto path = temp_wav("beats_one_sample.wav");
  write_wav(w, path);
  const Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == 1);
  CHECK(std::abs(r.samples[0] - w.samples[0]) <= 1.0 / 32768.0);
}

TEST_CASE("header fields are bit-exact for 44100 Hz mono PCM16") {
  Waveform w;
  w.samples.assign(10, 0.0);
  const auto path = temp_wav("beats_header.wav");
  write_wav(w, path);
  const auto b = file_bytes(path);
  REQUIRE(b.size() == 44 + 20);
  CHECK(std::string(b.begin(), b.begin() + 4) == "RIFF");
  CHECK(std::string(b.begin() + 8, b.begin() + 12) == "WAVE");
  CHECK(u32(b, 24) == 44100);         // sample rate
  CHECK(u32(b, 28) == 88200);         // byte rate = 44100 * 1 * 2
  CHECK((b[32] | (b[33] << 8)) == 2);  // block align
  CHECK((b[34] | (b[35] << 8)) == 16);
  CHECK(u32(b, 40) == 20);  // data size
}

TEST_CASE("440 Hz sine survives a write/read round trip") {
  Waveform w;
  w.sample_rate = 44100;
  w.samples.resize(4410);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = 0.8 * std::sin(2.0 * 3.14159265358979323846 * 440.0 * i / 44100.0);
  const auto path = temp_wav("beats_sine.wav");
  write_wav(w, path);
  const Waveform r = read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 44100);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    worst = std::max(worst, std::abs(r.samples[i] - w.samples[i]));
  CHECK(worst <= 1.0 / 32768.0);
}

TEST_CASE("full-scale samples clamp instead of wrapping") {
  Waveform w;
  w.samples = {1.0, -1.0};
  const auto path = temp_wav("beats_clamp.wav");
  write_wav(w, path);
  const Waveform r = read_wav(path);
  CHECK(std::abs(r.samples[0] - 1.0) <= 1.0 / 32768.0);
  CHECK(r.samples[1] == -1.0);
}

TEST_CASE("malformed files are rejected with the offending field named") {
  Waveform w;
  w.samples.assign(4, 0.1);
  const auto path = temp_wav("beats_bad.wav");
  write_wav(w, path);
  auto bytes = file_bytes(path);

  auto write_bytes = [&](const std::vector<unsigned char>& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  };

  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    write_bytes(b);
    CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("RIFF"), IoError);
  }
  SUBCASE("stereo") {
    auto b = bytes;
    b[22] = 2;  // channel count
    write_bytes(b);
    CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("channels 2"), IoError);
  }
  SUBCASE("non-PCM codec") {
    auto b = bytes;
    b[20] = 3;  // format tag
    write_bytes(b);
    CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("format 3"), IoError);
  }
  SUBCASE("wrong bit depth") {
    auto b = bytes;
    b[34] = 8;
    write_bytes(b);
    CHECK_THROWS_WITH_AS(read_wav(path), doctest::Contains("bits 8"), IoError);
  }
  SUBCASE("truncated data chunk") {
    auto b = bytes;
    b.resize(b.size() - 2);
    write_bytes(b);
    CHECK_THROWS_AS(read_wav(path), IoError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_wav(path + ".nope"), IoError); }
}
