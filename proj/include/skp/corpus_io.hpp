#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skp/linearizer.hpp"

namespace skp {

// One passage per line:
//   {"id", "text", "kind", "case", "token_count", "triples": [[s,p,o],...],
//    "object_kinds": [...], "spans": [[begin, end, role, [member,...]],...]}
nlohmann::ordered_json passage_to_json(const Passage& p);
Passage passage_from_json(const nlohmann::json& j);

void write_passages(std::ostream& out, std::span<const Passage> passages);
std::vector<Passage> read_passages(std::istream& in);
std::vector<Passage> read_passages_file(const std::filesystem::path& path);

nlohmann::ordered_json stats_to_json(const LinearizeStats& stats);

}  // namespace skp
