#include "beats/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "beats/errors.hpp"

namespace beats {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void push_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void push_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void push_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0)
    throw IoError(path + ": missing RIFF magic");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError(path + ": missing WAVE form type");

  Waveform w;
  bool have_fmt = false;
  std::uint16_t block_align = 0;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + off;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = off + 8;
    if (body + size > bytes.size()) throw IoError(path + ": truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(path + ": fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      const std::uint16_t format = read_u16(f);
      if (format != 1)
        throw IoError(path + ": unsupported codec (format " + std::to_string(format) + ")");
      const std::uint16_t channels = read_u16(f + 2);
      if (channels != 1)
        throw IoError(path + ": expected mono (channels " + std::to_string(channels) + ")");
      w.sample_rate = read_u32(f + 4);
      if (w.sample_rate == 0) throw IoError(path + ": zero sample rate");
      const std::uint32_t byte_rate = read_u32(f + 8);
      block_align = read_u16(f + 12);
      const std::uint16_t bits = read_u16(f + 14);
      if (bits != 16)
        throw IoError(path + ": expected 16-bit PCM (bits " + std::to_string(bits) + ")");
      if (block_align != 2)
        throw IoError(path + ": bad block align " + std::to_string(block_align));
      if (byte_rate != w.sample_rate * 2u)
        throw IoError(path + ": bad byte rate " + std::to_string(byte_rate));
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw IoError(path + ": data chunk before fmt chunk");
      if (size % 2 != 0) throw IoError(path + ": odd data chunk size");
      const unsigned char* d = bytes.data() + body;
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const std::int16_t v =
            static_cast<std::int16_t>(static_cast<std::uint16_t>(d[2 * i] | (d[2 * i + 1] << 8)));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    off = body + size + (size & 1);  // chunks are word-aligned
  }
  throw IoError(path + ": missing data chunk");
}

void write_wav(const Waveform& w, const std::string& path) {
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<unsigned char> bytes;
  bytes.reserve(44 + data_size);
  push_tag(bytes, "RIFF");
  push_u32(bytes, 36 + data_size);
  push_tag(bytes, "WAVE");
  push_tag(bytes, "fmt ");
  push_u32(bytes, 16);
  push_u16(bytes, 1);  // PCM
  push_u16(bytes, 1);  // mono
  push_u32(bytes, w.sample_rate);
  push_u32(bytes, w.sample_rate * 2u);  // byte rate
  push_u16(bytes, 2);                   // block align
  push_u16(bytes, 16);                  // bits per sample
  push_tag(bytes, "data");
  push_u32(bytes, data_size);
  for (double x : w.samples) {
    const long q = std::lrint(x * 32768.0);
    const std::int16_t v = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    push_u16(bytes, static_cast<std::uint16_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace beats
