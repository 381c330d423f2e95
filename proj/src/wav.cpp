#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "foley/audio.hpp"

namespace foley {

namespace {

std::int16_t to_pcm16(double x) {
  const double clamped = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(clamped * 32767.0));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  if (at + 4 > in.size()) throw std::invalid_argument("truncated WAV");
  return static_cast<std::uint32_t>(in[at]) | (static_cast<std::uint32_t>(in[at + 1]) << 8) |
         (static_cast<std::uint32_t>(in[at + 2]) << 16) |
         (static_cast<std::uint32_t>(in[at + 3]) << 24);
}

std::uint16_t get_u16(const std::vector<std::uint8_t>& in, std::size_t at) {
  if (at + 2 > in.size()) throw std::invalid_argument("truncated WAV");
  return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

bool tag_at(const std::vector<std::uint8_t>& in, std::size_t at, const char* tag) {
  return at + 4 <= in.size() && std::memcmp(in.data() + at, tag, 4) == 0;
}

}  // namespace

void validate(const AudioBuffer& audio) {
  if (!(audio.sample_rate > 0.0)) throw std::invalid_argument("invalid sample rate");
  for (double s : audio.samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite sample");
  }
}

AudioBuffer mix_audio(const std::vector<AudioBuffer>& clips) {
  if (clips.empty()) throw std::invalid_argument("no clips");
  AudioBuffer out;
  out.sample_rate = clips.front().sample_rate;
  std::size_t longest = 0;
  for (const auto& c : clips) {
    if (c.sample_rate != out.sample_rate) throw std::invalid_argument("sample-rate mismatch");
    longest = std::max(longest, c.size());
  }
  out.samples.assign(longest, 0.0);
  for (const auto& c : clips) {
    for (std::size_t i = 0; i < c.size(); ++i) out.samples[i] += c.samples[i];
  }
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : audio.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  return out;
}

AudioBuffer decode_wav(const std::vector<std::uint8_t>& in) {
  if (!tag_at(in, 0, "RIFF") || !tag_at(in, 8, "WAVE")) throw std::invalid_argument("not a RIFF/WAVE file");
  std::size_t at = 12;
  bool have_fmt = false;
  AudioBuffer out;
  while (at + 8 <= in.size()) {
    const std::uint32_t chunk = get_u32(in, at + 4);
    const std::size_t body = at + 8;
    if (tag_at(in, at, "fmt ")) {
      if (get_u16(in, body) != 1) throw std::invalid_argument("only PCM WAV is supported");
      if (get_u16(in, body + 2) != 1) throw std::invalid_argument("only mono WAV is supported");
      out.sample_rate = get_u32(in, body + 4);
      if (get_u16(in, body + 14) != 16) throw std::invalid_argument("only 16-bit WAV is supported");
      have_fmt = true;
    } else if (tag_at(in, at, "data")) {
      if (!have_fmt) throw std::invalid_argument("WAV data before fmt chunk");
      if (body + chunk > in.size()) throw std::invalid_argument("truncated WAV");
      out.samples.resize(chunk / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(get_u16(in, body + 2 * i));
        out.samples[i] = static_cast<double>(v) / 32767.0;
      }
      return out;
    }
    at = body + chunk + (chunk & 1);
  }
  throw std::invalid_argument("WAV has no data chunk");
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
  const auto bytes = encode_wav(audio);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

AudioBuffer quantize_pcm16(const AudioBuffer& audio) {
  AudioBuffer out = audio;
  for (double& s : out.samples) s = static_cast<double>(to_pcm16(s)) / 32767.0;
  return out;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kB64[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    if (ch == '\n' || ch == '\r' || ch == ' ') continue;
    const int v = lut[static_cast<unsigned char>(ch)];
    if (v < 0) throw std::invalid_argument("invalid base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace foley
