// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/wave.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace detsep {

namespace {

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

[[noreturn]] void malformed(const std::string& path, const std::string& why) {
  throw std::runtime_error("malformed WAV: " + why + " (" + path + ")");
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open WAV file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    malformed(path, "missing RIFF/WAVE header");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const unsigned char* chunk = p + off;
    uint32_t chunk_len = get_u32(chunk + 4);
    std::size_t body = off + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (body + 16 > n) malformed(path, "truncated fmt chunk");
      format = get_u16(p + body);
      channels = get_u16(p + body + 2);
      rate = get_u32(p + body + 4);
      bits = get_u16(p + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    off = body + chunk_len + (chunk_len & 1);
  }
  if (!have_fmt) malformed(path, "no fmt chunk");
  if (data_off == 0) malformed(path, "no data chunk");
  if (channels != 1)
    throw std::runtime_error("unsupported WAV: expected mono, got " +
                             std::to_string(channels) + " channels (" + path +
                             ")");
  if (data_off + data_len > n) malformed(path, "truncated data chunk");

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    std::size_t count = data_len / 2;
    w.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      int16_t v = static_cast<int16_t>(get_u16(p + data_off + 2 * i));
      w.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    std::size_t count = data_len / 4;
    w.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      uint32_t u = get_u32(p + data_off + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = static_cast<double>(f);
    }
  } else {
    malformed(path, "unsupported encoding (want PCM16 or float32)");
  }
  for (double v : w.samples)
    if (!std::isfinite(v)) malformed(path, "non-finite sample");
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  const uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const uint16_t fmt = enc == WavEncoding::kPcm16 ? 1 : 3;
  const uint32_t bytes_per = bits / 8;
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * bytes_per);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, fmt);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<uint32_t>(w.sample_rate_hz) * bytes_per);
  put_u16(out, static_cast<uint16_t>(bytes_per));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);

  if (enc == WavEncoding::kPcm16) {
    for (double v : w.samples) {
      double c = std::clamp(v, -1.0, 1.0 - 1.0 / 32768.0);
      int16_t q = static_cast<int16_t>(std::lrint(c * 32768.0));
      put_u16(out, static_cast<uint16_t>(q));
    }
  } else {
    for (double v : w.samples) {
      float f = static_cast<float>(v);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write WAV file: " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw std::runtime_error("short write on WAV file: " + path);
}

double peak_abs(const Waveform& w) {
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::fabs(v));
  return peak;
}

double mean_power(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : w.samples) acc += v * v;
  return acc / static_cast<double>(w.samples.size());
}

}  // namespace detsep
