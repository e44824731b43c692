#pragma once

// Explicit little/big-endian encoders shared by the SFN1/SFP1/IDX/PNM codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pqsv {

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void write_u16_le(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline void write_u32_be(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * (3 - i))) & 0xff);
  os.write(b, 4);
}

inline void write_f64_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline std::uint8_t read_u8(std::istream& is, const char* ctx) {
  const int c = is.get();
  if (c == std::istream::traits_type::eof())
    throw std::runtime_error(std::string(ctx) + ": truncated input");
  return static_cast<std::uint8_t>(c);
}

inline void read_exact(std::istream& is, char* buf, std::size_t n, const char* ctx) {
  is.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw std::runtime_error(std::string(ctx) + ": truncated input");
}

inline std::uint16_t read_u16_le(std::istream& is, const char* ctx) {
  char b[2];
  read_exact(is, b, 2, ctx);
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[0]) |
                                    (static_cast<std::uint8_t>(b[1]) << 8));
}

inline std::uint32_t read_u32_le(std::istream& is, const char* ctx) {
  char b[4];
  read_exact(is, b, 4, ctx);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
  return v;
}

inline std::uint32_t read_u32_be(std::istream& is, const char* ctx) {
  char b[4];
  read_exact(is, b, 4, ctx);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
  return v;
}

inline double read_f64_le(std::istream& is, const char* ctx) {
  char b[8];
  read_exact(is, b, 8, ctx);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<std::uint8_t>(b[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace pqsv
