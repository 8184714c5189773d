#include "skp/corpus_io.hpp"

#include <fstream>

#include "skp/error.hpp"

namespace skp {

nlohmann::ordered_json passage_to_json(const Passage& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["text"] = p.text;
  j["kind"] = to_string(p.kind);
  j["case"] = static_cast<int>(p.merge_case);
  j["token_count"] = p.token_count;
  auto triples = nlohmann::ordered_json::array();
  auto kinds = nlohmann::ordered_json::array();
  for (const Triple& t : p.members) {
    triples.push_back({t.subject, t.predicate, t.object});
    kinds.push_back(t.object_kind == ObjectKind::literal ? "literal" : "entity");
  }
  j["triples"] = std::move(triples);
  j["object_kinds"] = std::move(kinds);
  auto spans = nlohmann::ordered_json::array();
  for (const TextSpan& s : p.spans) spans.push_back({s.begin, s.end, to_string(s.role), s.triples});
  j["spans"] = std::move(spans);
  return j;
}

Passage passage_from_json(const nlohmann::json& j) {
  Passage p;
  p.id = j.at("id").get<std::uint64_t>();
  p.text = j.at("text").get<std::string>();
  p.kind = parse_passage_kind(j.at("kind").get<std::string>());
  p.merge_case = static_cast<MergeCase>(j.value("case", 0));
  p.token_count = j.at("token_count").get<std::size_t>();
  const auto& triples = j.at("triples");
  const auto kinds = j.value("object_kinds", nlohmann::json::array());
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    if (!t.is_array() || t.size() != 3) throw DataError("passage " + std::to_string(p.id) + ": bad triple");
    Triple triple{t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()};
    if (i < kinds.size() && kinds[i] == "literal") triple.object_kind = ObjectKind::literal;
    p.members.push_back(std::move(triple));
  }
  if (j.contains("spans")) {
    for (const auto& s : j.at("spans")) {
      TextSpan span{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(),
                    parse_role(s.at(2).get<std::string>()), s.at(3).get<std::vector<std::uint32_t>>()};
      if (span.begin > span.end || span.end > p.text.size())
        throw DataError("passage " + std::to_string(p.id) + ": span out of range");
      p.spans.push_back(std::move(span));
    }
  }
  return p;
}

void write_passages(std::ostream& out, std::span<const Passage> passages) {
  for (const Passage& p : passages) out << passage_to_json(p).dump() << '\n';
}

std::vector<Passage> read_passages(std::istream& in) {
  std::vector<Passage> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(passage_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Passage> read_passages_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read corpus " + path.string());
  return read_passages(in);
}

nlohmann::ordered_json stats_to_json(const LinearizeStats& s) {
  nlohmann::ordered_json j;
  j["triples_in"] = s.triples_in;
  j["duplicates_removed"] = s.duplicates_removed;
  j["cvt_nodes"] = s.cvt_nodes;
  j["cvt_triples"] = s.cvt_triples;
  j["degenerate_cvts"] = s.degenerate_cvts;
  j["passages_out"] = s.passages_out;
  j["merged_groups"] = s.merged_groups;
  j["singletons"] = s.singletons;
  j["cvt_sentences"] = s.cvt_sentences;
  j["oversize"] = s.oversize;
  nlohmann::ordered_json by_case;
  for (std::size_t c = 1; c <= 6; ++c) by_case[std::to_string(c)] = s.groups_by_case[c];
  j["merged_groups_by_case"] = std::move(by_case);
  j["reduction_ratio"] = s.reduction_ratio();
  return j;
}

}  // namespace skp
