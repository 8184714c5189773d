#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace skp {

template <typename Scalar = float>
using EmbeddingMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EmbeddingMatrixF = EmbeddingMatrix<float>;

// Binary layout, little-endian:
//   "SKPE" | version u32 | n u64 | dim u32 | n*dim f32, row-major
inline constexpr char kEmbeddingMagic[4] = {'S', 'K', 'P', 'E'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

void write_embeddings(std::ostream& out, const EmbeddingMatrixF& m);
// Throws FormatError (with byte offset) on bad magic, bad version,
// truncation, or non-finite values.
EmbeddingMatrixF read_embeddings(std::istream& in);
void save_embeddings(const EmbeddingMatrixF& m, const std::filesystem::path& path);
EmbeddingMatrixF load_embeddings(const std::filesystem::path& path);

/// Deterministic test embedder. Each row is the sum of per-token hashed
/// Gaussian vectors (tokens of the answer-normalized text) plus a
/// whole-text hashed vector at half weight, scaled to unit length. Texts
/// sharing words therefore score higher under dot product, and distinct
/// texts get distinct rows.
EmbeddingMatrixF stub_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed,
                            std::size_t threads = 1);

inline constexpr std::size_t kDefaultTopK = 100;

struct Hit {
  std::uint64_t passage_id = 0;
  float score = 0.0f;

  bool operator==(const Hit&) const = default;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<Hit> hits;  // best first
};

// Ranking order: higher score first, ties to the lower passage id.
inline bool ranks_before(const Hit& a, const Hit& b) {
  return a.score != b.score ? a.score > b.score : a.passage_id < b.passage_id;
}

// Dot-product score shared by every search path.
float dot_score(const EmbeddingMatrixF& corpus, Eigen::Index row, const Eigen::VectorXf& query);

namespace detail {
// Sorts `hits` into ranking order and keeps the first k.
void keep_top_k(std::vector<Hit>& hits, std::size_t k);
}  // namespace detail

/// Exact top-k by dot product. Query ids are row numbers.
std::vector<RetrievalResult> search_exact(const EmbeddingMatrixF& corpus, const EmbeddingMatrixF& queries,
                                          std::size_t k = kDefaultTopK, std::size_t threads = 1);

/// Inverted-file index over a k-means coarse quantizer.
///
/// build() runs seeded k-means for a fixed number of iterations (L2,
/// centroids initialized from distinct corpus rows, empty clusters
/// re-seeded from the points farthest from their centroid). search()
/// scores only rows in the nprobe nearest cells, exactly.
class IvfIndex {
 public:
  static constexpr std::size_t kKMeansIterations = 25;

  static IvfIndex build(const EmbeddingMatrixF& corpus, std::size_t n_clusters, std::uint64_t seed,
                        std::size_t threads = 1);

  std::vector<RetrievalResult> search(const EmbeddingMatrixF& queries, std::size_t k, std::size_t nprobe,
                                      std::size_t threads = 1) const;

  std::size_t n_clusters() const { return static_cast<std::size_t>(centroids_.rows()); }
  const EmbeddingMatrixF& centroids() const { return centroids_; }
  const std::vector<std::vector<std::uint64_t>>& lists() const { return lists_; }
  const std::vector<std::uint32_t>& assignment() const { return assignment_; }

  // "SKPI" | version u32 | clusters u32 | dim u32 | n u64 | centroids f32 | n x u32 cell ids
  void save(const std::filesystem::path& path) const;
  // Reattaches the corpus the index was built over.
  static IvfIndex load(const std::filesystem::path& path, EmbeddingMatrixF corpus);

 private:
  void rebuild_lists();

  EmbeddingMatrixF corpus_;
  EmbeddingMatrixF centroids_;
  std::vector<std::uint32_t> assignment_;
  std::vector<std::vector<std::uint64_t>> lists_;
};

nlohmann::ordered_json result_to_json(const RetrievalResult& r);
RetrievalResult result_from_json(const nlohmann::json& j);
void write_results(std::ostream& out, std::span<const RetrievalResult> results);
std::vector<RetrievalResult> read_results(std::istream& in);

// Fraction of exact top-k ids also returned by the approximate search.
double recall_at_k(std::span<const RetrievalResult> approx, std::span<const RetrievalResult> exact,
                   std::size_t k);

}  // namespace skp
