#pragma once

// Little-endian primitives for the checkpoint formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>

namespace softcap::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 4);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void write_f64s(std::ostream& os, std::span<const double> vs) {
  for (double v : vs) write_f64(os, v);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* buf, std::size_t n) {
  if (!is.read(buf, static_cast<std::streamsize>(n))) throw FormatError("unexpected end of file");
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  read_exact(is, reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char buf[4];
  read_exact(is, reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline void read_f64s(std::istream& is, std::span<double> out) {
  for (double& v : out) v = read_f64(is);
}

inline std::string read_string(std::istream& is, std::size_t max_len = std::size_t{1} << 30) {
  const auto n = read_u64(is);
  if (n > max_len) throw FormatError("string length out of range");
  std::string s(n, '\0');
  read_exact(is, s.data(), n);
  return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  read_exact(is, buf, 4);
  if (std::string(buf, 4) != std::string(magic, 4))
    throw FormatError(std::string("bad magic, expected ") + magic);
}

}  // namespace softcap::io
