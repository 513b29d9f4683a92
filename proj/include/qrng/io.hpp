#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qrng/bits.hpp"
#include "qrng/errors.hpp"

// On-disk formats:
//   capture   headerless little-endian int16 bin indices
//   <cap>.meta key=value lines: bits, range_mv, sample_rate_hz, seed
//   seed      raw bytes, bits consumed MSB-first, ceil(bits/8) bytes
//   bit file  packed bytes, first bit = MSB of first byte

namespace qrng::io {

namespace fs = std::filesystem;

/// Ordered key=value map; '#' starts a comment, blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "<input>") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

inline void write_key_values(const fs::path& path, const KeyValues& kv) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline fs::path meta_path(const fs::path& capture) {
  auto p = capture;
  p += ".meta";
  return p;
}

inline std::vector<std::uint8_t> encode_capture(std::span<const std::int16_t> samples) {
  std::vector<std::uint8_t> bytes(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(samples[i]);
    bytes[2 * i] = static_cast<std::uint8_t>(u & 0xFFu);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  return bytes;
}

inline std::vector<std::int16_t> decode_capture(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 2) throw ValidationError("capture: odd number of bytes");
  std::vector<std::int16_t> samples(bytes.size() / 2);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
  return samples;
}

inline void write_capture(const fs::path& path, std::span<const std::int16_t> samples) {
  write_bytes(path, encode_capture(samples));
}

inline std::vector<std::int16_t> read_capture(const fs::path& path) {
  return decode_capture(read_bytes(path));
}

struct CaptureMeta {
  int bits = 12;
  double range_mv = 0.0;
  double sample_rate_hz = 0.0;
  std::optional<std::uint64_t> seed;

  KeyValues to_key_values() const {
    std::ostringstream range, rate;
    range.precision(17);
    rate.precision(17);
    range << range_mv;
    rate << sample_rate_hz;
    KeyValues kv{{"bits", std::to_string(bits)}, {"range_mv", range.str()}, {"sample_rate_hz", rate.str()}};
    if (seed) kv["seed"] = std::to_string(*seed);
    return kv;
  }

  static CaptureMeta from_key_values(const KeyValues& kv) {
    CaptureMeta m;
    try {
      if (auto it = kv.find("bits"); it != kv.end()) m.bits = std::stoi(it->second);
      if (auto it = kv.find("range_mv"); it != kv.end()) m.range_mv = std::stod(it->second);
      if (auto it = kv.find("sample_rate_hz"); it != kv.end()) m.sample_rate_hz = std::stod(it->second);
      if (auto it = kv.find("seed"); it != kv.end()) m.seed = std::stoull(it->second);
    } catch (const std::logic_error&) {
      throw ValidationError("capture metadata: malformed numeric value");
    }
    return m;
  }
};

inline CaptureMeta read_meta(const fs::path& capture) {
  return CaptureMeta::from_key_values(read_key_values(meta_path(capture)));
}

/// Reads exactly `nbits` seed bits; the file must be ceil(nbits / 8) bytes.
inline BitString read_seed(const fs::path& path, std::size_t nbits) {
  const auto bytes = read_bytes(path);
  if (bytes.size() != (nbits + 7) / 8)
    throw ValidationError("seed file " + path.string() + " has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string((nbits + 7) / 8));
  return BitString::from_bytes_msb(bytes, nbits);
}

inline void write_bits(const fs::path& path, const BitString& bits) { write_bytes(path, bits.to_bytes_msb()); }

inline BitString read_bits(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return BitString::from_bytes_msb(bytes, bytes.size() * 8);
}

}  // namespace qrng::io
