// Copyright 2026 The noisesim Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "noisesim/dsp/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace noisesim::dsp {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, uint32_t v) {
  const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, uint16_t v) {
  const uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  NS_CHECK(f.good(), IoError, "read_wav: cannot open " << path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  NS_CHECK(bytes.size() >= 44, IoError, "read_wav: " << path << " too small to be a WAV file");
  NS_CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0 && std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
           IoError, "read_wav: " << path << " is not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t len = rd_u32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    NS_CHECK(body + len <= bytes.size(), IoError, "read_wav: truncated chunk in " << path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      NS_CHECK(len >= 16, IoError, "read_wav: malformed fmt chunk in " << path);
      format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      sample_rate = rd_u32(bytes.data() + body + 4);
      bits = rd_u16(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  NS_CHECK(format != 0 && data != nullptr, IoError, "read_wav: missing fmt/data chunk in " << path);
  NS_CHECK(channels == 1, IoError, "read_wav: " << path << " has " << channels
                                                << " channels; only mono is supported");

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  if (format == 1 && bits == 16) {
    const size_t n = data_len / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const int16_t s = static_cast<int16_t>(rd_u16(data + 2 * i));
      w.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = data_len / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data + 4 * i, 4);
      w.samples[i] = static_cast<double>(v);
    }
  } else {
    throw IoError("read_wav: " + path + ": unsupported encoding (format=" +
                  std::to_string(format) + ", bits=" + std::to_string(bits) + ")");
  }
  for (double s : w.samples)
    NS_CHECK(std::isfinite(s), IoError, "read_wav: non-finite sample in " << path);
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  NS_CHECK(f.good(), IoError, "write_wav: cannot open " << path);

  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint16_t bytes_per = enc == WavEncoding::kPcm16 ? 2 : 4;
  const uint32_t data_len = n * bytes_per;

  f.write("RIFF", 4);
  wr_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, enc == WavEncoding::kPcm16 ? 1 : 3);
  wr_u16(f, 1);  // mono
  wr_u32(f, static_cast<uint32_t>(w.sample_rate));
  wr_u32(f, static_cast<uint32_t>(w.sample_rate) * bytes_per);
  wr_u16(f, bytes_per);
  wr_u16(f, enc == WavEncoding::kPcm16 ? 16 : 32);
  f.write("data", 4);
  wr_u32(f, data_len);

  if (enc == WavEncoding::kPcm16) {
    for (double s : w.samples) {
      const long q = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
      const int16_t v = static_cast<int16_t>(std::clamp<long>(q, -32768, 32767));
      wr_u16(f, static_cast<uint16_t>(v));
    }
  } else {
    for (double s : w.samples) {
      const float v = static_cast<float>(s);
      uint32_t raw;
      std::memcpy(&raw, &v, 4);
      wr_u32(f, raw);
    }
  }
  NS_CHECK(f.good(), IoError, "write_wav: failed writing " << path);
}

}  // namespace noisesim::dsp
