#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "skp/dense_retrieval.hpp"
#include "skp/error.hpp"
#include "skp/parallel.hpp"
#include "skp/rng.hpp"

namespace skp {

namespace {

constexpr char kIndexMagic[4] = {'S', 'K', 'P', 'I'};
constexpr std::uint32_t kIndexVersion = 1;

// Assignment works on fixed row blocks so the floating-point result of
// each block, and hence the clustering, is independent of thread count.
constexpr Eigen::Index kAssignBlock = 1024;

struct Assignment {
  std::vector<std::uint32_t> cell;
  std::vector<double> dist2;  // squared L2 distance to the assigned centroid
};

Assignment assign(const EmbeddingMatrixF& x, const Eigen::VectorXf& x_sq, const EmbeddingMatrixF& c,
                  std::size_t threads) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXf c_sq = c.rowwise().squaredNorm();
  Assignment a{std::vector<std::uint32_t>(static_cast<std::size_t>(n)),
               std::vector<double>(static_cast<std::size_t>(n))};
  const auto blocks = static_cast<std::size_t>((n + kAssignBlock - 1) / kAssignBlock);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kAssignBlock;
    const Eigen::Index rows = std::min(kAssignBlock, n - begin);
    const Eigen::MatrixXf dots = x.middleRows(begin, rows) * c.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index best = 0;
      float best_d = std::numeric_limits<float>::infinity();
      for (Eigen::Index k = 0; k < c.rows(); ++k) {
        const float d = c_sq[k] - 2.0f * dots(r, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      const auto i = static_cast<std::size_t>(begin + r);
      a.cell[i] = static_cast<std::uint32_t>(best);
      a.dist2[i] = std::max(0.0, static_cast<double>(x_sq[begin + r]) + static_cast<double>(best_d));
    }
  });
  return a;
}

// Recomputes centroids as cell means. Each empty cell takes the next
// point in decreasing order of distance to its own centroid.
void update(const EmbeddingMatrixF& x, const Assignment& a, EmbeddingMatrixF& c) {
  const Eigen::Index k = c.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::uint32_t cell = a.cell[static_cast<std::size_t>(i)];
    sums.row(cell) += x.row(i).cast<double>();
    ++counts[cell];
  }
  std::vector<std::size_t> far;
  std::size_t next_far = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      c.row(j) = (sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)])).cast<float>();
      continue;
    }
    if (far.empty()) {
      far.resize(static_cast<std::size_t>(x.rows()));
      std::iota(far.begin(), far.end(), std::size_t{0});
      std::stable_sort(far.begin(), far.end(),
                       [&](std::size_t p, std::size_t q) { return a.dist2[p] > a.dist2[q]; });
    }
    c.row(j) = x.row(static_cast<Eigen::Index>(far[next_far++]));
  }
}

}  // namespace

IvfIndex IvfIndex::build(const EmbeddingMatrixF& corpus, std::size_t n_clusters, std::uint64_t seed,
                         std::size_t threads) {
  const auto n = static_cast<std::size_t>(corpus.rows());
  if (n == 0 || corpus.cols() == 0) throw ArgumentError("build_ivf: empty corpus");
  if (n_clusters < 1 || n_clusters > n)
    throw ArgumentError("build_ivf: n_clusters must lie in [1, " + std::to_string(n) + "]");
  if (n_clusters > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("build_ivf: too many clusters");

  IvfIndex index;
  index.corpus_ = corpus;
  index.centroids_.resize(static_cast<Eigen::Index>(n_clusters), corpus.cols());

  // Initial centroids: a uniform sample of distinct rows.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n_clusters; ++i) {
    std::swap(perm[i], perm[i + rng.uniform_index(n - i)]);
    index.centroids_.row(static_cast<Eigen::Index>(i)) = corpus.row(static_cast<Eigen::Index>(perm[i]));
  }

  const Eigen::VectorXf x_sq = corpus.rowwise().squaredNorm();
  for (std::size_t it = 0; it < kKMeansIterations; ++it)
    update(corpus, assign(corpus, x_sq, index.centroids_, threads), index.centroids_);
  index.assignment_ = assign(corpus, x_sq, index.centroids_, threads).cell;
  index.rebuild_lists();
  return index;
}

void IvfIndex::rebuild_lists() {
  lists_.assign(n_clusters(), {});
  for (std::size_t i = 0; i < assignment_.size(); ++i) lists_[assignment_[i]].push_back(i);
}

std::vector<RetrievalResult> IvfIndex::search(const EmbeddingMatrixF& queries, std::size_t k, std::size_t nprobe,
                                              std::size_t threads) const {
  if (k == 0) throw ArgumentError("search: k must be at least 1");
  if (nprobe < 1 || nprobe > n_clusters())
    throw ArgumentError("search: nprobe must lie in [1, " + std::to_string(n_clusters()) + "]");
  if (queries.cols() != corpus_.cols())
    throw ArgumentError("search: corpus dim " + std::to_string(corpus_.cols()) + " != query dim " +
                        std::to_string(queries.cols()));
  const Eigen::VectorXf c_sq = centroids_.rowwise().squaredNorm();
  std::vector<RetrievalResult> out(static_cast<std::size_t>(queries.rows()));
  parallel_for(out.size(), threads, [&](std::size_t qi) {
    const Eigen::VectorXf q = queries.row(static_cast<Eigen::Index>(qi)).transpose();
    std::vector<std::pair<float, std::uint32_t>> cells(n_clusters());
    for (std::size_t c = 0; c < cells.size(); ++c)
      cells[c] = {c_sq[static_cast<Eigen::Index>(c)] - 2.0f * centroids_.row(static_cast<Eigen::Index>(c)).dot(q.transpose()),
                  static_cast<std::uint32_t>(c)};
    std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(nprobe), cells.end());
    std::vector<Hit> hits;
    for (std::size_t p = 0; p < nprobe; ++p)
      for (std::uint64_t id : lists_[cells[p].second])
        hits.push_back({id, dot_score(corpus_, static_cast<Eigen::Index>(id), q)});
    detail::keep_top_k(hits, k);
    out[qi] = {std::to_string(qi), std::move(hits)};
  });
  return out;
}

void IvfIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kIndexMagic, 4);
  binio::put_le<std::uint32_t>(out, kIndexVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n_clusters()));
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(centroids_.cols()));
  binio::put_le<std::uint64_t>(out, assignment_.size());
  for (Eigen::Index i = 0; i < centroids_.size(); ++i) binio::put_le(out, centroids_.data()[i]);
  for (std::uint32_t cell : assignment_) binio::put_le(out, cell);
}

IvfIndex IvfIndex::load(const std::filesystem::path& path, EmbeddingMatrixF corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kIndexMagic, 4) != 0) throw FormatError(0, "bad magic (expected SKPI)");
  binio::Reader r(in, 4);
  if (const auto v = r.get<std::uint32_t>("version"); v != kIndexVersion)
    throw FormatError(4, "unsupported version " + std::to_string(v));
  const auto clusters = r.get<std::uint32_t>("cluster count");
  const auto dim = r.get<std::uint32_t>("dimension");
  const auto n = r.get<std::uint64_t>("row count");
  if (clusters == 0 || dim == 0 || n == 0 || clusters > n) throw FormatError(8, "inconsistent header");
  if (n != static_cast<std::uint64_t>(corpus.rows()) || dim != static_cast<std::uint64_t>(corpus.cols()))
    throw DataError("index was built over a " + std::to_string(n) + "x" + std::to_string(dim) +
                    " corpus, got " + std::to_string(corpus.rows()) + "x" + std::to_string(corpus.cols()));
  IvfIndex index;
  index.corpus_ = std::move(corpus);
  index.centroids_.resize(clusters, dim);
  r.floats(index.centroids_.data(), static_cast<std::size_t>(index.centroids_.size()), "centroids");
  index.assignment_.resize(n);
  for (auto& cell : index.assignment_) {
    const std::size_t at = r.offset();
    cell = r.get<std::uint32_t>("assignment");
    if (cell >= clusters) throw FormatError(at, "cell id out of range");
  }
  index.rebuild_lists();
  return index;
}

}  // namespace skp
