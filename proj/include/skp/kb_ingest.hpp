#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skp/error.hpp"

namespace skp {

enum class ObjectKind : std::uint8_t { entity, literal };

/// One subject/predicate/object fact.
///
/// IRIs are stored by local name (namespace stripped, e.g. "m.02mjmr");
/// literal objects hold their unescaped lexical value with quotes and any
/// language or datatype suffix removed.
struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;
  ObjectKind object_kind = ObjectKind::entity;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

enum class MalformedPolicy { skip, abort };

struct ParseStats {
  std::size_t lines = 0;
  std::size_t triples = 0;
  std::size_t malformed = 0;
  std::vector<ParseError> errors;  // first few, for reporting

  static constexpr std::size_t kMaxRecordedErrors = 16;
};

// Parses one N-Triples line. Returns nullopt for blank and comment lines,
// throws ParseError (carrying line_no) for malformed ones.
std::optional<Triple> parse_ntriples_line(std::string_view line, std::size_t line_no);

/// Streaming reader over line-oriented N-Triples text.
///
/// Under MalformedPolicy::skip bad lines are counted in stats() and
/// skipped; under abort the first one is rethrown.
class NTriplesReader {
 public:
  NTriplesReader(std::istream& in, MalformedPolicy policy, std::size_t first_line = 1)
      : in_(in), policy_(policy), next_line_(first_line) {}

  std::optional<Triple> next();
  const ParseStats& stats() const { return stats_; }

 private:
  std::istream& in_;
  MalformedPolicy policy_;
  std::size_t next_line_;
  ParseStats stats_;
  std::string buffer_;
};

std::vector<Triple> parse_ntriples(std::istream& in, MalformedPolicy policy,
                                   ParseStats* stats = nullptr);

// Reads a dump from disk; gzip input is detected by magic bytes.
std::vector<Triple> read_ntriples_file(const std::filesystem::path& path, MalformedPolicy policy,
                                       ParseStats* stats = nullptr);

void write_ntriples(std::ostream& out, std::span<const Triple> triples);

// id -> human-readable name.
using NameMap = std::unordered_map<std::string, std::string>;

// Two-column TSV (id TAB name). Later duplicates overwrite earlier ones.
NameMap load_name_map(const std::filesystem::path& path);

// Local name of an IRI: brackets and namespace (up to the last '/' or '#',
// or a leading "prefix:") removed.
std::string_view iri_local_name(std::string_view iri);

// Surface cleanup shared by every rendering path: '_', '<', '>' and '"'
// become spaces, '.' becomes a space unless it sits between two digits,
// whitespace runs collapse and the ends are trimmed.
std::string clean_surface(std::string_view text);

/// Human-readable surface form of a raw term.
///
/// `<iri>` and bare ids resolve through `names` when an entry exists,
/// otherwise their separators turn into spaces; `"literal"` terms lose
/// quotes and @lang / ^^<datatype> suffixes.
std::string normalize_term(std::string_view raw, const NameMap* names = nullptr);

// Surface of a stored term: entities go through the name table, literal
// values are only cleaned.
std::string surface_of(std::string_view term, ObjectKind kind, const NameMap* names);

/// Per-node subject/object occurrence counts, mergeable across shards.
struct NodeCounts {
  struct Degree {
    std::uint32_t as_subject = 0;
    std::uint32_t as_object = 0;
  };
  std::unordered_map<std::string, Degree> nodes;

  void add(const Triple& t);
  void merge(const NodeCounts& other);
};

using NodeSet = std::set<std::string>;

// One id per line; blank lines and '#' comments ignored.
NodeSet load_cvt_list(const std::filesystem::path& path);

// Heuristic CVT test: object of >= 1 triple, subject of >= 2, unnamed.
NodeSet detect_cvt(const NodeCounts& counts, const NameMap* names);

/// CVT nodes of a triple collection. An explicit list, when given, replaces
/// the heuristic and is intersected with the nodes present.
NodeSet detect_cvt(std::span<const Triple> triples, const NameMap* names,
                   const std::optional<NodeSet>& explicit_list = std::nullopt);

}  // namespace skp
