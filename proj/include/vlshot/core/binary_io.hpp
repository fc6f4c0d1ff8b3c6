#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "vlshot/core/error.hpp"

namespace vlshot::bin {

// Little-endian scalar I/O for the on-disk formats.

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline void put_f64(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  put_u64(out, bits);
}

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

  std::uint64_t u64() {
    unsigned char b[8];
    read(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f64() {
    const auto bits = u64();
    double x;
    std::memcpy(&x, &bits, sizeof x);
    return x;
  }
  std::string str() {
    const auto n = u32();
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(void* dst, std::size_t n) {
    const auto at = in_.tellg();
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    require(static_cast<std::size_t>(in_.gcount()) == n, ErrorCode::load,
            origin_ + ": truncated at byte " + std::to_string(static_cast<long long>(at)));
  }

 private:
  std::istream& in_;
  std::string origin_;
};

}  // namespace vlshot::bin
