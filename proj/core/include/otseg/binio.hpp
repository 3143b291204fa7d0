#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "otseg/errors.hpp"

namespace otseg::binio {

// All snapshot files are little-endian with a 4-byte ASCII magic. The helpers
// below serialize explicitly byte by byte so the files mean the same thing on
// any host.

inline void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x),
                        static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16),
                        static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t x) {
  put_u32(os, static_cast<std::uint32_t>(x));
  put_u32(os, static_cast<std::uint32_t>(x >> 32));
}

inline void put_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(x));
  __builtin_memcpy(&bits, &x, sizeof(bits));
  put_u64(os, bits);
}

inline std::uint32_t get_u32(std::istream& is, const std::string& what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw IoError("truncated file while reading " + what);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is, const std::string& what) {
  const std::uint64_t lo = get_u32(is, what);
  const std::uint64_t hi = get_u32(is, what);
  return lo | (hi << 32);
}

inline double get_f64(std::istream& is, const std::string& what) {
  const std::uint64_t bits = get_u64(is, what);
  double x;
  __builtin_memcpy(&x, &bits, sizeof(x));
  return x;
}

inline void put_magic(std::ostream& os, const char magic[5]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[5],
                         const std::string& path) {
  char got[4];
  if (!is.read(got, 4) || got[0] != magic[0] || got[1] != magic[1] ||
      got[2] != magic[2] || got[3] != magic[3])
    throw IoError(path + ": bad magic, expected " + std::string(magic, 4));
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path + " for reading");
  return is;
}

}  // namespace otseg::binio
