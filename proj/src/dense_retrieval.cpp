#include "skp/dense_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_set>

#include "skp/error.hpp"
#include "skp/eval_metrics.hpp"
#include "skp/parallel.hpp"
#include "skp/rng.hpp"

namespace skp {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Adds weight * g to acc, g a standard Gaussian vector keyed by (seed, key).
void add_hashed_gaussian(Eigen::VectorXd& acc, std::uint64_t seed, std::uint64_t key, double weight) {
  Rng rng(derive_seed(seed, key));
  const Eigen::Index dim = acc.size();
  for (Eigen::Index i = 0; i < dim; i += 2) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double r = std::sqrt(-2.0 * std::log(1.0 - rng.uniform_real()));
    const double theta = 2.0 * std::numbers::pi * rng.uniform_real();
    acc[i] += weight * r * std::cos(theta);
    if (i + 1 < dim) acc[i + 1] += weight * r * std::sin(theta);
  }
}

constexpr std::uint64_t kWholeTextSalt = 0x5f3759df5f3759dfULL;

}  // namespace

EmbeddingMatrixF stub_embed(std::span<const std::string> texts, std::size_t dim, std::uint64_t seed,
                            std::size_t threads) {
  if (dim < 2) throw ArgumentError("stub_embed: dim must be at least 2");
  if (texts.empty()) throw ArgumentError("stub_embed: no texts");
  EmbeddingMatrixF out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim));
  parallel_for(texts.size(), threads, [&](std::size_t i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    const std::string norm = normalize_answer(texts[i]);
    std::size_t pos = 0;
    while (pos < norm.size()) {
      const std::size_t end = std::min(norm.find(' ', pos), norm.size());
      add_hashed_gaussian(acc, seed, fnv1a(std::string_view(norm).substr(pos, end - pos)), 1.0);
      pos = end + 1;
    }
    add_hashed_gaussian(acc, seed, fnv1a(texts[i]) ^ kWholeTextSalt, 0.5);
    acc /= acc.norm();
    out.row(static_cast<Eigen::Index>(i)) = acc.cast<float>().transpose();
  });
  return out;
}

float dot_score(const EmbeddingMatrixF& corpus, Eigen::Index row, const Eigen::VectorXf& query) {
  return corpus.row(row).dot(query.transpose());
}

namespace detail {

// Keeps the best k of `hits` in ranking order.
void keep_top_k(std::vector<Hit>& hits, std::size_t k) {
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), ranks_before);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), ranks_before);
  }
}

}  // namespace detail

std::vector<RetrievalResult> search_exact(const EmbeddingMatrixF& corpus, const EmbeddingMatrixF& queries,
                                          std::size_t k, std::size_t threads) {
  if (k == 0) throw ArgumentError("search: k must be at least 1");
  if (corpus.rows() == 0) throw ArgumentError("search: empty corpus");
  if (corpus.cols() != queries.cols())
    throw ArgumentError("search: corpus dim " + std::to_string(corpus.cols()) + " != query dim " +
                        std::to_string(queries.cols()));
  std::vector<RetrievalResult> out(static_cast<std::size_t>(queries.rows()));
  parallel_for(out.size(), threads, [&](std::size_t qi) {
    const Eigen::VectorXf q = queries.row(static_cast<Eigen::Index>(qi)).transpose();
    std::vector<Hit> hits(static_cast<std::size_t>(corpus.rows()));
    for (Eigen::Index r = 0; r < corpus.rows(); ++r)
      hits[static_cast<std::size_t>(r)] = {static_cast<std::uint64_t>(r), dot_score(corpus, r, q)};
    detail::keep_top_k(hits, k);
    out[qi] = {std::to_string(qi), std::move(hits)};
  });
  return out;
}

nlohmann::ordered_json result_to_json(const RetrievalResult& r) {
  nlohmann::ordered_json j;
  j["query_id"] = r.query_id;
  auto hits = nlohmann::ordered_json::array();
  for (const Hit& h : r.hits) hits.push_back({h.passage_id, h.score});
  j["hits"] = std::move(hits);
  return j;
}

RetrievalResult result_from_json(const nlohmann::json& j) {
  RetrievalResult r;
  const auto& id = j.at("query_id");
  r.query_id = id.is_string() ? id.get<std::string>() : id.dump();
  for (const auto& h : j.at("hits")) r.hits.push_back({h.at(0).get<std::uint64_t>(), h.at(1).get<float>()});
  return r;
}

void write_results(std::ostream& out, std::span<const RetrievalResult> results) {
  for (const auto& r : results) out << result_to_json(r).dump() << '\n';
}

std::vector<RetrievalResult> read_results(std::istream& in) {
  std::vector<RetrievalResult> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(result_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("bad retrieval result: ") + e.what());
    }
  }
  return out;
}

double recall_at_k(std::span<const RetrievalResult> approx, std::span<const RetrievalResult> exact,
                   std::size_t k) {
  if (approx.size() != exact.size()) throw ArgumentError("recall_at_k: result counts differ");
  std::size_t found = 0, total = 0;
  for (std::size_t q = 0; q < exact.size(); ++q) {
    std::unordered_set<std::uint64_t> truth;
    for (std::size_t i = 0; i < std::min(k, exact[q].hits.size()); ++i) truth.insert(exact[q].hits[i].passage_id);
    for (std::size_t i = 0; i < std::min(k, approx[q].hits.size()); ++i)
      found += truth.count(approx[q].hits[i].passage_id);
    total += truth.size();
  }
  return total == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(total);
}

}  // namespace skp
