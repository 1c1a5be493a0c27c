#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace beats {

// Mono waveform with samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  std::uint32_t sample_rate = 44100;

  double duration() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

// RIFF/WAVE PCM 16-bit mono. read_wav maps samples to [-1, 1) by /32768;
// write_wav quantizes by rounding x*32768 and clamping, so a round trip is
// within 1/32768 per sample.
Waveform read_wav(const std::string& path);
void write_wav(const Waveform& w, const std::string& path);

}  // namespace beats
