#pragma once

// RIFF/WAVE reading (PCM 16/24/32-bit, IEEE float 32/64-bit, including
// WAVE_FORMAT_EXTENSIBLE) and 32-bit float writing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "gpc/error.hpp"
#include "gpc/stft.hpp"

namespace gpc {

struct WavData {
  double sample_rate = 0.0;
  MultiSignal channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace detail

inline WavData decode_wav(const std::vector<unsigned char>& bytes, const std::string& name = "<memory>") {
  using detail::le16;
  using detail::le32;
  auto fail = [&](const std::string& why) { throw FormatError(name + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = le32(chunk + 4);
    const std::size_t avail = std::min(len, bytes.size() - pos - 8);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) fail("fmt chunk too short");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == 0xFFFE) {
        if (avail < 40) fail("extensible fmt chunk too short");
        format = le16(chunk + 32);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos += 8 + len + (len & 1);
  }
  if (channels == 0 || rate == 0) fail("missing or invalid fmt chunk");
  if (!data) fail("missing data chunk");

  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) fail("unsupported sample format " + std::to_string(format));
  if (is_float && bits != 32 && bits != 64) fail("unsupported float width " + std::to_string(bits));
  if (!is_float && bits != 16 && bits != 24 && bits != 32) fail("unsupported PCM width " + std::to_string(bits));

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  WavData wav;
  wav.sample_rate = rate;
  wav.channels.assign(channels, Signal(frames));
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * width;
      double v = 0.0;
      if (is_float && bits == 32) {
        float x;
        std::uint32_t u = le32(p);
        std::memcpy(&x, &u, 4);
        v = x;
      } else if (is_float) {
        std::uint64_t u = std::uint64_t(le32(p)) | std::uint64_t(le32(p + 4)) << 32;
        std::memcpy(&v, &u, 8);
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = p[0] | p[1] << 8 | p[2] << 16;
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
      wav.channels[c][f] = v;
    }
  return wav;
}

inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on '" + path + "'");
  return decode_wav(bytes, path);
}

/// 32-bit float WAV bytes.
inline std::vector<unsigned char> encode_wav(const MultiSignal& channels, double sample_rate) {
  using detail::put16;
  using detail::put32;
  if (channels.empty()) throw InvalidConfig("wav: no channels to write");
  const std::size_t frames = channels.front().size();
  for (const Signal& c : channels)
    if (c.size() != frames) throw DimensionMismatch("wav: channels have different lengths");
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * nch * 4);

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 3);
  put16(out, nch);
  put32(out, rate);
  put32(out, rate * nch * 4);
  put16(out, static_cast<std::uint16_t>(nch * 4));
  put16(out, 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  for (std::size_t f = 0; f < frames; ++f)
    for (const Signal& c : channels) {
      const float x = static_cast<float>(c[f]);
      std::uint32_t u;
      std::memcpy(&u, &x, 4);
      put32(out, u);
    }
  return out;
}

inline void write_wav(const std::string& path, const MultiSignal& channels, double sample_rate) {
  const std::vector<unsigned char> bytes = encode_wav(channels, sample_rate);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write error on '" + path + "'");
}

/// Test helper: PCM16/24 encoding, used for reading-path coverage.
inline std::vector<unsigned char> encode_wav_pcm(const MultiSignal& channels, double sample_rate, int bits) {
  using detail::put16;
  using detail::put32;
  if (bits != 16 && bits != 24) throw InvalidConfig("wav: PCM width must be 16 or 24");
  const std::size_t frames = channels.front().size();
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t width = static_cast<std::uint32_t>(bits / 8);
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate));
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * nch * width);
  std::vector<unsigned char> out;
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, nch);
  put32(out, rate);
  put32(out, rate * nch * width);
  put16(out, static_cast<std::uint16_t>(nch * width));
  put16(out, static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  const double full = bits == 16 ? 32768.0 : 8388608.0;
  for (std::size_t f = 0; f < frames; ++f)
    for (const Signal& c : channels) {
      const auto q = static_cast<std::int32_t>(std::clamp(std::lround(c[f] * full), -std::lround(full), std::lround(full) - 1));
      for (std::uint32_t b = 0; b < width; ++b) out.push_back(static_cast<unsigned char>(static_cast<std::uint32_t>(q) >> (8 * b)));
    }
  return out;
}

}  // namespace gpc
