#pragma once

// Little-endian binary helpers for the embedding and index file formats.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <utility>

#include "skp/error.hpp"

namespace skp::binio {

template <typename T>
inline T byteswap(T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

template <typename T>
inline void put_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  // `offset` is the stream position already consumed, for error reports.
  explicit Reader(std::istream& in, std::size_t offset = 0) : in_(in), offset_(offset) {}

  template <typename T>
  T get(const char* what) {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (static_cast<std::size_t>(in_.gcount()) != sizeof(T))
      throw FormatError(offset_ + static_cast<std::size_t>(in_.gcount()),
                        std::string("truncated ") + what);
    offset_ += sizeof(T);
    if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
    return v;
  }

  void floats(float* dst, std::size_t count, const char* what) {
    const std::size_t bytes = count * sizeof(float);
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != bytes) throw FormatError(offset_ + got, std::string("truncated ") + what);
    if constexpr (std::endian::native == std::endian::big)
      for (std::size_t i = 0; i < count; ++i) dst[i] = byteswap(dst[i]);
    for (std::size_t i = 0; i < count; ++i)
      if (!std::isfinite(dst[i])) throw FormatError(offset_ + i * sizeof(float), "non-finite value");
    offset_ += bytes;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_;
};

}  // namespace skp::binio
