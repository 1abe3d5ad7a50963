#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chew/dataset.hpp"

namespace chew::dataset {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

signal::TimeSeries load_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size())
      throw std::runtime_error("truncated wav chunk in " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw std::runtime_error("malformed fmt chunk in " + path.string());
      format = get_u16(bytes.data() + body);
      channels = get_u16(bytes.data() + body + 2);
      sample_rate = get_u32(bytes.data() + body + 4);
      bits = get_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    throw std::runtime_error("wav file missing fmt or data chunk: " + path.string());
  if (channels != 1)
    throw std::runtime_error("multichannel unsupported (" + std::to_string(channels) +
                             " channels): " + path.string());

  signal::TimeSeries ts;
  ts.sample_rate_hz = static_cast<double>(sample_rate);
  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data_len / 2;
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, data + 2 * i, 2);
      ts.samples[i] = static_cast<double>(v) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data_len / 4;
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, data + 4 * i, 4);
      ts.samples[i] = static_cast<double>(v);
    }
  } else {
    throw std::runtime_error("unsupported wav encoding (format " + std::to_string(format) +
                             ", " + std::to_string(bits) + " bits): " + path.string());
  }
  return ts;
}

void save_wav(const std::filesystem::path& path, const signal::TimeSeries& ts,
              WavEncoding encoding) {
  if (!(ts.sample_rate_hz > 0.0))
    throw std::invalid_argument("save_wav: sample rate must be positive");
  const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(ts.sample_rate_hz));
  const std::uint16_t bytes_per = encoding == WavEncoding::pcm16 ? 2 : 4;
  const std::uint64_t payload = static_cast<std::uint64_t>(ts.samples.size()) * bytes_per;
  if (payload > 0xffffffffu - 44u) throw std::invalid_argument("save_wav: signal too long");

  std::string out;
  out.reserve(44 + payload);
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + payload));
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);  // mono
  put_u32(out, rate);
  put_u32(out, rate * bytes_per);
  put_u16(out, bytes_per);
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per));
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(payload));

  if (encoding == WavEncoding::pcm16) {
    for (double s : ts.samples) {
      const double scaled = std::round(s * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    }
  } else {
    for (double s : ts.samples) {
      const float v = static_cast<float>(s);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(out, u);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write wav file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to wav file: " + path.string());
}

}  // namespace chew::dataset
