#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "srkocl/error.hpp"

// Little-endian primitives for the on-disk record formats.
namespace srkocl::binio {

template <typename U>
void write_uint(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U read_uint(std::istream& is, const char* what) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(U))) {
    throw TruncatedError(std::string("truncated record while reading ") + what);
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

inline void write_u32(std::ostream& os, std::uint32_t v) { write_uint(os, v); }
inline void write_u64(std::ostream& os, std::uint64_t v) { write_uint(os, v); }
inline std::uint32_t read_u32(std::istream& is, const char* what) { return read_uint<std::uint32_t>(is, what); }
inline std::uint64_t read_u64(std::istream& is, const char* what) { return read_uint<std::uint64_t>(is, what); }

template <typename F>
void write_real(std::ostream& os, F value) {
  static_assert(std::is_floating_point_v<F>);
  if constexpr (sizeof(F) == 4) {
    write_uint(os, std::bit_cast<std::uint32_t>(value));
  } else {
    write_uint(os, std::bit_cast<std::uint64_t>(value));
  }
}

template <typename F>
F read_real(std::istream& is, const char* what) {
  if constexpr (sizeof(F) == 4) {
    return std::bit_cast<F>(read_uint<std::uint32_t>(is, what));
  } else {
    return std::bit_cast<F>(read_uint<std::uint64_t>(is, what));
  }
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const char* what, std::uint32_t max_len = 1u << 24) {
  const auto n = read_u32(is, what);
  if (n > max_len) throw FormatError(std::string("implausible string length while reading ") + what);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (is.gcount() != static_cast<std::streamsize>(n)) {
    throw TruncatedError(std::string("truncated record while reading ") + what);
  }
  return s;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
  char got[4] = {};
  is.read(got, 4);
  if (is.gcount() != 4) throw TruncatedError(std::string("truncated header in ") + what);
  if (std::memcmp(got, magic, 4) != 0) {
    throw FormatError(std::string("bad magic in ") + what + " (expected '" + magic + "')");
  }
}

}  // namespace srkocl::binio
