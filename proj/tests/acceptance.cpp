// Acceptance checks: one PASS/FAIL line per criterion.
//
//   skp_acceptance               run every criterion
//   skp_acceptance --only NAME   run one criterion
//   skp_acceptance --list        print the criterion names

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kb_gen.hpp"
#include "metrics_fixture.hpp"
#include "oracles.hpp"
#include "skp/cli.hpp"
#include "skp/dense_retrieval.hpp"
#include "skp/eval_metrics.hpp"
#include "skp/iam_mask.hpp"
#include "skp/linearizer.hpp"
#include "skp/losses.hpp"
#include "skp/parallel.hpp"
#include "skp/pretrain_datagen.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome reproducibility_statement() {
  const std::string readme = slurp(fs::path(SKP_SOURCE_DIR) / "README.md");
  if (readme.empty()) return {false, "README.md missing or empty"};
  std::vector<std::string> missing;
  for (const char* needle : {"79.6", "91.58", "96.64", "not reproduced"})
    if (readme.find(needle) == std::string::npos) missing.push_back(needle);
  if (!missing.empty()) {
    std::string m;
    for (const auto& s : missing) m += " '" + s + "'";
    return {false, "README lacks" + m};
  }
  return {true, "README states which reported figures are not reproduced and why"};
}

// 1000 subjects. Subjects 0..499 carry 4 (s, p) facts, each written three
// times; subjects 500..999 carry 8 distinct facts (4 predicates x 2
// objects). 6000 + 4000 = 10000 lines, 6000 distinct triples.
std::vector<skp::Triple> duplicated_kb() {
  std::vector<skp::Triple> kb;
  for (int s = 0; s < 1000; ++s) {
    const std::string subject = "s" + std::to_string(s);
    for (int p = 0; p < 4; ++p) {
      const std::string pred = "p" + std::to_string(p);
      if (s < 500) {
        const skp::Triple t{subject, pred, "o" + std::to_string((s * 7 + p) % 997), skp::ObjectKind::entity};
        for (int r = 0; r < 3; ++r) kb.push_back(t);
      } else {
        for (int o = 0; o < 2; ++o)
          kb.push_back({subject, pred, "o" + std::to_string((s * 13 + p * 2 + o) % 997), skp::ObjectKind::entity});
      }
    }
  }
  std::mt19937_64 gen(1);
  std::shuffle(kb.begin(), kb.end(), gen);
  return kb;
}

Outcome linearizer_partition_budget() {
  const auto kb = duplicated_kb();
  const auto start = Clock::now();
  const auto result = skp::linearize_kb(kb, {});
  const double elapsed = seconds_since(start);

  const auto dedup = skp::deduplicate(kb);
  std::multiset<skp::Triple> expected(dedup.begin(), dedup.end()), seen;
  std::size_t over = 0;
  for (const auto& p : result.passages) {
    seen.insert(p.members.begin(), p.members.end());
    over += p.token_count > 100;
  }
  const bool partition = seen == expected && std::set<skp::Triple>(dedup.begin(), dedup.end()).size() == dedup.size();
  const bool ok = kb.size() == 10000 && partition && over == 0 && result.passages.size() < dedup.size() && elapsed < 10.0;
  return {ok, std::to_string(kb.size()) + " lines, " + std::to_string(dedup.size()) + " distinct triples -> " +
                  std::to_string(result.passages.size()) + " passages; partition " + (partition ? "exact" : "BROKEN") +
                  ", over budget " + std::to_string(over) + ", " + fmt(elapsed, 3) + " s"};
}

Outcome linearizer_oracle_equivalence() {
  std::mt19937_64 gen(2024);
  std::size_t mismatches = 0, groups = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto kb = kbgen::random_kb(gen, 12);
    const std::size_t budget = 4 + gen() % 12;
    const auto surfaces = skp::resolve_surfaces(kb, nullptr);
    const auto got = skp::group_triples(kb, surfaces, budget, skp::Tokenizer());
    std::vector<oracle::Group> mine;
    for (const auto& g : got) mine.push_back({static_cast<int>(g.key.merge_case), g.members});
    const auto want = oracle::group(kbgen::to_facts(kb), budget);
    groups += want.size();
    mismatches += mine != want;
  }
  return {mismatches == 0, "500 random KBs, " + std::to_string(groups) + " oracle groups, " +
                               std::to_string(mismatches) + " mismatching KBs"};
}

Outcome cvt_rendering() {
  std::mt19937_64 gen(5);
  const std::vector<std::string> words = {"award", "film", "year", "role", "honor", "event", "venue"};
  std::size_t checked = 0, failures = 0;
  for (std::size_t clauses : {2u, 3u, 5u}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::string node = "m.0cvt" + std::to_string(trial);
      std::vector<skp::Triple> star = {{"m.head" + std::to_string(trial), "people.person.award_nominations", node,
                                        skp::ObjectKind::entity}};
      for (std::size_t c = 0; c < clauses; ++c) {
        const std::string pred = "award.nomination." + words[gen() % words.size()] + "_" + std::to_string(c);
        if (gen() % 2)
          star.push_back({node, pred, words[gen() % words.size()] + " " + std::to_string(gen() % 2000),
                          skp::ObjectKind::literal});
        else
          star.push_back({node, pred, "m.obj" + std::to_string(gen() % 50), skp::ObjectKind::entity});
      }
      std::shuffle(star.begin(), star.end(), gen);
      const auto p = skp::linearize_cvt(node, star, nullptr);
      const auto commas = static_cast<std::size_t>(std::count(p.text.begin(), p.text.end(), ','));
      const bool ok = commas == clauses - 1 && p.text.find(node) == std::string::npos &&
                      p.text.find("0cvt" + std::to_string(trial)) == std::string::npos;
      failures += !ok;
      ++checked;
    }
  }
  return {failures == 0, std::to_string(checked) + " stars with 2/3/5 clauses, " + std::to_string(failures) + " failures"};
}

Eigen::MatrixXd gaussian(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(gen);
  return m;
}

Outcome loss_kernels() {
  std::vector<std::string> failures;
  double worst = 0.0;
  for (int n : {2, 3, 8, 64}) {
    const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(n, 5);
    const double err = std::abs(skp::infonce_loss(same, same, 0.07) - std::log(n - 1.0));
    worst = std::max(worst, err);
    if (err > 1e-9) failures.push_back("ln(N-1) at N=" + std::to_string(n));
  }
  if (skp::mlm_loss(Eigen::VectorXd::Constant(2, 1.0)) != 0.0) failures.push_back("mlm([1,1])");
  if (std::abs(skp::mlm_loss(Eigen::VectorXd::Constant(2, 0.5)) - 2 * std::log(2.0)) > 1e-12)
    failures.push_back("mlm([.5,.5])");
  if (skp::joint_loss(0.37, 2.9, 1.0).l_joint != 0.37 || skp::joint_loss(0.37, 2.9, 0.0).l_joint != 2.9)
    failures.push_back("joint endpoints");
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  double worst_scale = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + gen() % 10);
    const auto d = static_cast<Eigen::Index>(1 + gen() % 20);
    const Eigen::MatrixXd o = gaussian(gen, n, d), p = gaussian(gen, n, d);
    Eigen::MatrixXd o2 = o, p2 = p;
    for (Eigen::Index i = 0; i < n; ++i) {
      o2.row(i) *= scale(gen);
      p2.row(i) *= scale(gen);
    }
    for (auto v : {skp::InfoNceVariant::paper, skp::InfoNceVariant::standard})
      worst_scale = std::max(worst_scale, std::abs(skp::infonce_loss(o2, p2, 0.1, v) - skp::infonce_loss(o, p, 0.1, v)));
  }
  if (worst_scale > 1e-9) failures.push_back("scale invariance");
  std::string detail = "ln(N-1) max err " + fmt(worst, 3) + ", scale-invariance max err " + fmt(worst_scale, 3);
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

oracle::Rows rows_of(const Eigen::MatrixXd& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j));
  return out;
}

Outcome infonce_oracle() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> tau_dist(0.05, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + gen() % 15);
    const auto d = static_cast<Eigen::Index>(1 + gen() % 32);
    const Eigen::MatrixXd o = gaussian(gen, n, d), p = gaussian(gen, n, d);
    const double tau = tau_dist(gen);
    for (bool standard : {false, true}) {
      const auto v = standard ? skp::InfoNceVariant::standard : skp::InfoNceVariant::paper;
      const double got = skp::infonce_loss(o, p, tau, v);
      worst = std::max(worst, std::abs(got - oracle::infonce(rows_of(o), rows_of(p), tau, standard, false)));
    }
  }
  return {worst <= 1e-9, "1000 instances x 2 variants, max |diff| " + fmt(worst, 3)};
}

Outcome iam_mask() {
  std::mt19937_64 gen(8);
  const auto start = Clock::now();
  std::size_t cell_mismatches = 0, count_mismatches = 0, cells = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    skp::SegmentLayout layout;
    layout.question_len = 1 + gen() % 8;
    layout.passage_lens.resize(gen() % 11);
    for (auto& len : layout.passage_lens) len = 1 + gen() % 12;
    const auto mask = skp::build_mask(layout);
    const auto dense = mask.dense();
    for (std::size_t i = 0; i < mask.size(); ++i)
      for (std::size_t j = 0; j < mask.size(); ++j) {
        ++cells;
        cell_mismatches += (dense(i, j) == 1) != oracle::mask_bit(i, j, layout.question_len, layout.passage_lens);
      }
    std::size_t expected = 0;
    const auto& lens = layout.passage_lens;
    for (std::size_t a = 0; a < lens.size(); ++a)
      for (std::size_t b = a + 1; b < lens.size(); ++b) expected += 2 * lens[a] * lens[b];
    const auto zeros = static_cast<std::size_t>((dense.array() == 0).count());
    count_mismatches += zeros != expected || mask.zero_count() != expected;
  }
  const double elapsed = seconds_since(start);
  return {cell_mismatches == 0 && count_mismatches == 0 && elapsed < 5.0,
          "1000 layouts, " + std::to_string(cells) + " cells, " + std::to_string(cell_mismatches) +
              " cell mismatches, " + std::to_string(count_mismatches) + " zero-count mismatches, " + fmt(elapsed, 3) + " s"};
}

// Integer entries make float dot products exact, so the double oracle
// ranks identically, ties included.
skp::EmbeddingMatrixF integer_matrix(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  skp::EmbeddingMatrixF m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(static_cast<int>(gen() % 17) - 8);
  return m;
}

skp::EmbeddingMatrixF unit_matrix(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<float> g;
  skp::EmbeddingMatrixF m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(gen);
    m.row(i).normalize();
  }
  return m;
}

oracle::Rows rows_of(const skp::EmbeddingMatrixF& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j));
  return out;
}

Outcome retrieval_exact_oracle() {
  std::mt19937_64 gen(9);
  std::size_t queries = 0, mismatches = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = integer_matrix(gen, 1000, 32);
    const auto q = integer_matrix(gen, 10, 32);
    const auto rows = rows_of(corpus);
    const auto qrows = rows_of(q);
    const auto results = skp::search_exact(corpus, q, 10, 2);
    for (std::size_t i = 0; i < qrows.size(); ++i) {
      std::vector<std::uint64_t> ids;
      for (const auto& h : results[i].hits) ids.push_back(h.passage_id);
      mismatches += ids != oracle::top_k(rows, qrows[i], 10);
      ++queries;
    }
  }
  return {mismatches == 0, "10 corpora of 1000x32, " + std::to_string(queries) + " queries, " +
                               std::to_string(mismatches) + " id-list mismatches"};
}

bool same_results(const std::vector<skp::RetrievalResult>& a, const std::vector<skp::RetrievalResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].query_id != b[i].query_id || a[i].hits != b[i].hits) return false;
  return true;
}

Outcome retrieval_ivf_full_probe() {
  std::mt19937_64 gen(10);
  const auto corpus = unit_matrix(gen, 5000, 32);
  const auto q = unit_matrix(gen, 100, 32);
  const auto exact = skp::search_exact(corpus, q, 10);
  const auto one = skp::IvfIndex::build(corpus, 1, 3);
  const auto many = skp::IvfIndex::build(corpus, 64, 3, 4);
  const bool single = same_results(one.search(q, 10, 1), exact);
  const bool full = same_results(many.search(q, 10, 64), exact);
  return {single && full, std::string("n_clusters=1: ") + (single ? "identical" : "DIFFERENT") +
                              "; nprobe=n_clusters=64: " + (full ? "identical" : "DIFFERENT")};
}

Outcome retrieval_ivf_recall() {
  std::mt19937_64 gen(11);
  const auto corpus = unit_matrix(gen, 50000, 64);
  const auto q = unit_matrix(gen, 200, 64);
  const auto start = Clock::now();
  const auto index = skp::IvfIndex::build(corpus, 256, 12, skp::default_threads());
  const double build_s = seconds_since(start);
  const auto exact = skp::search_exact(corpus, q, 10, skp::default_threads());
  const double recall = skp::recall_at_k(index.search(q, 10, 16, skp::default_threads()), exact, 10);
  return {recall >= 0.90, "50000x64 unit vectors, 256 cells, nprobe 16: recall@10 = " + fmt(recall) +
                              " (threshold 0.90), build " + fmt(build_s, 3) + " s"};
}

Outcome retrieval_ivf_monotone() {
  std::mt19937_64 gen(12);
  const auto corpus = unit_matrix(gen, 20000, 32);
  const auto q = unit_matrix(gen, 200, 32);
  const auto index = skp::IvfIndex::build(corpus, 128, 13, skp::default_threads());
  const auto exact = skp::search_exact(corpus, q, 10, skp::default_threads());
  std::string detail;
  double previous = -1.0;
  bool monotone = true;
  for (std::size_t nprobe : {1, 2, 4, 8, 16, 32, 64, 128}) {
    const double r = skp::recall_at_k(index.search(q, 10, nprobe, skp::default_threads()), exact, 10);
    monotone = monotone && r >= previous;
    previous = r;
    detail += (detail.empty() ? "" : ", ") + std::to_string(nprobe) + ":" + fmt(r, 3);
  }
  return {monotone && previous == 1.0, "recall@10 by nprobe " + detail};
}

Outcome metrics() {
  const auto corpus = fixture::metric_corpus();
  const auto gold = fixture::metric_gold();
  const auto results = fixture::metric_results();
  const double h1 = skp::retrieval_hits_at_k(results, corpus, gold, 1);
  const double h2 = skp::retrieval_hits_at_k(results, corpus, gold, 2);
  const double h5 = skp::retrieval_hits_at_k(results, corpus, gold, 5);
  const bool fixture_ok = std::abs(h1 - 1.0 / 3) < 1e-12 && std::abs(h2 - 2.0 / 3) < 1e-12 && h5 == 1.0;

  std::mt19937_64 gen(13);
  const std::vector<std::string> aliases = {"hawaii", "paris", "the hague", "germany", "art", "obama", "rome"};
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<skp::QARecord> g;
    std::vector<skp::RetrievalResult> r;
    for (int i = 0; i < 4; ++i) {
      const std::string id = std::to_string(i);
      g.push_back({id, "", {aliases[gen() % aliases.size()]}});
      std::vector<std::uint64_t> ids = {0, 1, 2, 3, 4, 5};
      std::shuffle(ids.begin(), ids.end(), gen);
      ids.resize(gen() % 7);
      skp::RetrievalResult res{id, {}};
      for (std::size_t j = 0; j < ids.size(); ++j) res.hits.push_back({ids[j], 1.0f - 0.1f * static_cast<float>(j)});
      r.push_back(res);
    }
    double previous = 0.0;
    for (std::size_t k = 1; k <= 7; ++k) {
      const double h = skp::retrieval_hits_at_k(r, corpus, g, k);
      violations += h < previous;
      previous = h;
    }
  }
  return {fixture_ok && violations == 0, "fixture hits@{1,2,5} = " + fmt(h1) + ", " + fmt(h2) + ", " + fmt(h5) +
                                             " (expected 1/3, 2/3, 1); monotonicity violations in 10000 trials: " +
                                             std::to_string(violations)};
}

Outcome km_statistics() {
  skp::Passage single = skp::linearize_kb(
      std::vector<skp::Triple>{{"barack_obama", "born_in", "honolulu hawaii", skp::ObjectKind::literal}}, {}).passages.at(0);
  std::array<std::size_t, 3> counts{};
  std::size_t reconstruction_failures = 0, examples = 0;
  const auto framed = skp::frame_tokens(single, skp::Tokenizer());
  const int n = 10000;
  for (int s = 0; s < n; ++s) {
    const auto ex = skp::make_km_example(single, skp::example_seed(42, static_cast<std::uint64_t>(s)));
    ++counts[static_cast<std::size_t>(ex.masked_component)];
    reconstruction_failures += skp::reconstruct(ex).tokens != framed.tokens;
    ++examples;
  }
  // Reconstruction over a mixed corpus as well.
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto corpus = skp::linearize_kb(kbgen::random_kb(gen, 20), {});
    for (const auto& p : corpus.passages) {
      const auto ex = skp::make_km_example(p, skp::example_seed(trial, p.id));
      reconstruction_failures += skp::reconstruct(ex).tokens != skp::frame_tokens(p, skp::Tokenizer()).tokens;
      ++examples;
    }
  }
  const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
  bool uniform = true;
  for (auto c : counts) uniform = uniform && std::abs(static_cast<double>(c) - n / 3.0) <= 3 * sigma;
  return {uniform && reconstruction_failures == 0,
          "subject/relation/object = " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
              std::to_string(counts[2]) + " (3 sigma = " + fmt(3 * sigma, 3) + "); reconstruction failures " +
              std::to_string(reconstruction_failures) + " of " + std::to_string(examples)};
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

Outcome pipeline_determinism() {
  const fs::path root = fs::temp_directory_path() / "skp_acceptance_pipeline";
  fs::remove_all(root);
  const std::string cfg = (fs::path(SKP_TEST_DATA_DIR) / "pipeline.json").string();
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* threads : {"1", "1", "4"}) {
    const fs::path dir = root / ("run" + std::to_string(runs.size()));
    const std::string d = dir.string();
    const char* argv[] = {"skp", "pipeline", "--config", cfg.c_str(), "--out-dir", d.c_str(), "--threads", threads};
    std::ostringstream out, err;
    const int code = skp::cli::dispatch(8, argv, out, err);
    if (code != 0) return {false, "pipeline exited " + std::to_string(code) + ": " + err.str()};
    runs.push_back(dir_contents(dir));
  }
  fs::remove_all(root);
  const bool same = runs[0] == runs[1] && runs[0] == runs[2];
  std::string files;
  for (const auto& [name, bytes] : runs[0]) files += (files.empty() ? "" : " ") + name;
  if (!runs[0].count("metrics.json")) return {false, "no metrics.json produced"};
  return {same, std::to_string(runs[0].size()) + " files (" + files + ") " +
                    (same ? "byte-identical" : "DIFFER") + " across 2 runs and threads {1,4}"};
}

Outcome ablation() {
  std::vector<skp::Triple> kb;
  kb.reserve(100000);
  for (int i = 0; i < 100000; ++i)
    kb.push_back({"s" + std::to_string(i / 10), "p" + std::to_string(i % 10), "o" + std::to_string(i), skp::ObjectKind::entity});
  const auto a = skp::ablate_kb(kb, 0.5, 20240611);
  const auto b = skp::ablate_kb(kb, 0.5, 20240611);
  const double kept = static_cast<double>(a.size()) / static_cast<double>(kb.size());
  const bool ok = a == b && std::abs(kept - 0.5) <= 0.03;
  return {ok, "kept " + std::to_string(a.size()) + " of 100000 (" + fmt(100 * kept, 4) + "%), runs " +
                  (a == b ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------

const std::vector<std::pair<std::string, std::function<Outcome()>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> r = {
      {"reproducibility_statement", reproducibility_statement},
      {"linearizer_partition_budget", linearizer_partition_budget},
      {"linearizer_oracle_equivalence", linearizer_oracle_equivalence},
      {"cvt_rendering", cvt_rendering},
      {"loss_kernels", loss_kernels},
      {"infonce_oracle", infonce_oracle},
      {"iam_mask", iam_mask},
      {"retrieval_exact_oracle", retrieval_exact_oracle},
      {"retrieval_ivf_full_probe", retrieval_ivf_full_probe},
      {"retrieval_ivf_recall", retrieval_ivf_recall},
      {"retrieval_ivf_monotone", retrieval_ivf_monotone},
      {"metrics", metrics},
      {"km_statistics", km_statistics},
      {"pipeline_determinism", pipeline_determinism},
      {"ablation", ablation},
  };
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& [name, fn] : registry()) std::cout << name << '\n';
      return 0;
    } else {
      std::cerr << "usage: skp_acceptance [--only NAME | --list]\n";
      return 2;
    }
  }
  bool any = false, all_pass = true;
  for (const auto& [name, fn] : registry()) {
    if (!only.empty() && name != only) continue;
    any = true;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (!any) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
