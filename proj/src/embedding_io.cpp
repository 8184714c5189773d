#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "skp/dense_retrieval.hpp"
#include "skp/error.hpp"
#include "binary_io.hpp"

namespace skp {

using binio::put_le;
using binio::Reader;

void write_embeddings(std::ostream& out, const EmbeddingMatrixF& m) {
  out.write(kEmbeddingMagic, 4);
  put_le<std::uint32_t>(out, kEmbeddingVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  } else {
    for (Eigen::Index i = 0; i < m.size(); ++i) put_le(out, m.data()[i]);
  }
}

EmbeddingMatrixF read_embeddings(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() == 0) throw FormatError(0, "empty embedding file");
  if (in.gcount() != 4 || std::memcmp(magic, kEmbeddingMagic, 4) != 0)
    throw FormatError(0, "bad magic (expected SKPE)");
  Reader r(in, 4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kEmbeddingVersion)
    throw FormatError(4, "unsupported version " + std::to_string(version));
  const auto n = r.get<std::uint64_t>("row count");
  const auto dim = r.get<std::uint32_t>("dimension");
  if (n == 0 || dim == 0) throw FormatError(8, "empty matrix");
  if (n > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max()) / dim)
    throw FormatError(8, "matrix too large");
  EmbeddingMatrixF m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  r.floats(m.data(), static_cast<std::size_t>(m.size()), "payload");
  return m;
}

void save_embeddings(const EmbeddingMatrixF& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_embeddings(out, m);
}

EmbeddingMatrixF load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_embeddings(in);
}

}  // namespace skp
