#include "skp/eval_metrics.hpp"

#include <fstream>
#include <unordered_map>

#include "skp/error.hpp"

namespace skp {

namespace {

bool is_ascii_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) || (c >= 0x7b && c <= 0x7e);
}

void check_gold(std::span<const QARecord> gold) {
  if (gold.empty()) throw ArgumentError("no gold questions");
}

template <typename Fn>
void read_jsonl(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      fn(j, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

std::string id_string(const nlohmann::json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (is_ascii_punct(c)) continue;
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
  }
  return out;
}

double answer_hits_at_1(const Predictions& predictions, std::span<const QARecord> gold, std::size_t* missing) {
  check_gold(gold);
  std::size_t hits = 0, absent = 0;
  for (const QARecord& q : gold) {
    const auto it = predictions.find(q.question_id);
    if (it == predictions.end()) {
      ++absent;
      continue;
    }
    const std::string pred = normalize_answer(it->second);
    for (const std::string& alias : q.answers) {
      if (normalize_answer(alias) == pred) {
        ++hits;
        break;
      }
    }
  }
  if (missing) *missing = absent;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

bool contains_tokens(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + 1)) {
    const bool left = pos == 0 || haystack[pos - 1] == ' ';
    const std::size_t end = pos + needle.size();
    const bool right = end == haystack.size() || haystack[end] == ' ';
    if (left && right) return true;
  }
  return false;
}

double retrieval_hits_at_k(std::span<const RetrievalResult> results, std::span<const Passage> corpus,
                           std::span<const QARecord> gold, std::size_t k) {
  check_gold(gold);
  if (k == 0) throw ArgumentError("hits@k: k must be at least 1");
  std::unordered_map<std::uint64_t, const Passage*> by_id;
  for (const Passage& p : corpus) by_id.emplace(p.id, &p);
  std::unordered_map<std::string_view, const RetrievalResult*> by_query;
  for (const RetrievalResult& r : results) by_query.emplace(r.query_id, &r);

  std::unordered_map<std::uint64_t, std::string> normalized;
  auto text_of = [&](std::uint64_t id) -> const std::string& {
    if (auto it = normalized.find(id); it != normalized.end()) return it->second;
    const auto p = by_id.find(id);
    if (p == by_id.end()) throw DataError("retrieved passage id " + std::to_string(id) + " is not in the corpus");
    return normalized.emplace(id, normalize_answer(p->second->text)).first->second;
  };

  std::size_t hits = 0;
  for (const QARecord& q : gold) {
    const auto r = by_query.find(q.question_id);
    if (r == by_query.end()) continue;
    std::vector<std::string> aliases;
    for (const auto& a : q.answers) aliases.push_back(normalize_answer(a));
    const auto& ranked = r->second->hits;
    bool hit = false;
    for (std::size_t i = 0; i < std::min(k, ranked.size()) && !hit; ++i) {
      const std::string& text = text_of(ranked[i].passage_id);
      for (const auto& a : aliases) hit = hit || contains_tokens(text, a);
    }
    hits += hit;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

MetricReport evaluate(std::span<const RetrievalResult> results, std::span<const Passage> corpus,
                      std::span<const QARecord> gold, std::span<const std::size_t> cutoffs,
                      const Predictions* predictions) {
  MetricReport report;
  report.questions = gold.size();
  for (std::size_t k : cutoffs) report.hits_at[k] = retrieval_hits_at_k(results, corpus, gold, k);
  if (predictions) report.answer_hits_at_1 = answer_hits_at_1(*predictions, gold, &report.missing_predictions);
  return report;
}

nlohmann::ordered_json report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json hits = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.hits_at) hits[std::to_string(k)] = v;
  j["hits_at"] = std::move(hits);
  if (report.answer_hits_at_1) {
    j["answer_hits_at_1"] = *report.answer_hits_at_1;
    j["missing_predictions"] = report.missing_predictions;
  }
  j["questions"] = report.questions;
  j["relevance"] = "answer-token-containment";
  return j;
}

std::vector<QARecord> read_gold(std::istream& in) {
  std::vector<QARecord> out;
  read_jsonl(in, [&](const nlohmann::json& j, std::size_t line_no) {
    QARecord q;
    q.question_id = id_string(j.at("question_id"));
    if (j.contains("question")) q.question = j.at("question").get<std::string>();
    q.answers = j.at("answers").get<std::vector<std::string>>();
    if (q.answers.empty()) throw ParseError(line_no, "question " + q.question_id + " has no answers");
    for (const auto& a : q.answers)
      if (normalize_answer(a).empty())
        throw ParseError(line_no, "question " + q.question_id + " has an alias that normalizes to empty");
    out.push_back(std::move(q));
  });
  return out;
}

std::vector<QARecord> read_gold_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_gold(in);
}

Predictions read_predictions(std::istream& in) {
  Predictions out;
  read_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
    out[id_string(j.at("question_id"))] = j.at("answer").get<std::string>();
  });
  return out;
}

Predictions read_predictions_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_predictions(in);
}

}  // namespace skp
