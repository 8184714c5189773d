#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skp/kb_ingest.hpp"
#include "skp/rng.hpp"
#include "skp/tokenizer.hpp"

namespace skp {

enum class Role : std::uint8_t { subject, relation, object };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

/// Merge cases in priority order. `none` marks singletons and CVT sentences.
enum class MergeCase : std::uint8_t {
  none = 0,
  subject_predicate = 1,
  subject_object = 2,
  predicate_object = 3,
  subject = 4,
  predicate = 5,
  object = 6,
};

inline constexpr std::array<MergeCase, 6> kMergePriority = {
    MergeCase::subject_predicate, MergeCase::subject_object, MergeCase::predicate_object,
    MergeCase::subject,           MergeCase::predicate,      MergeCase::object};

enum class PassageKind : std::uint8_t { merged_group, singleton, cvt_sentence };

std::string_view to_string(PassageKind kind);
PassageKind parse_passage_kind(std::string_view name);

// Shared key values of a group; `second` is empty for single-term cases.
struct GroupKey {
  MergeCase merge_case = MergeCase::none;
  std::string first;
  std::string second;

  bool operator==(const GroupKey&) const = default;
};

GroupKey group_key_of(const Triple& t, MergeCase c);

struct TripleGroup {
  GroupKey key;
  std::vector<std::size_t> members;  // indices into the grouped input, input order
};

struct TripleSurface {
  std::string subject;
  std::string predicate;
  std::string object;

  const std::string& operator[](Role r) const;
};

std::vector<TripleSurface> resolve_surfaces(std::span<const Triple> triples, const NameMap* names);

// Byte range of one rendered term. `triples` are the passage members
// (by position) whose `role` component this text stands for.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  Role role = Role::subject;
  std::vector<std::uint32_t> triples;

  bool operator==(const TextSpan&) const = default;
};

struct RenderedText {
  std::string text;
  std::vector<TextSpan> spans;
};

/// Renders a group with its shared term(s) stated once.
///
///   subject_predicate  "S P O1, O2"      subject            "S P1 O1; P2 O2"
///   subject_object     "S P1, P2 O"      predicate          "P S1 O1; S2 O2"
///   predicate_object   "S1, S2 P O"      object             "O S1 P1; S2 P2"
///   none (singleton)   "S P O"
RenderedText render_group(MergeCase c, std::span<const TripleSurface* const> members);
RenderedText render_group(MergeCase c, std::span<const TripleSurface> members);

/// Greedy six-case priority grouping.
///
/// For each case in kMergePriority, unconsumed triples are bucketed by the
/// case key (buckets ordered by first appearance). A bucket of >= 2 fills
/// groups in input order, starting a new group whenever the rendered
/// candidate would exceed `budget` tokens. Groups left with one member are
/// released back to the pool; whatever survives case 6 becomes a
/// singleton. `triples` must already be deduplicated and CVT-free.
std::vector<TripleGroup> group_triples(std::span<const Triple> triples,
                                       std::span<const TripleSurface> surfaces, std::size_t budget,
                                       const Tokenizer& tokenizer);

struct Passage {
  std::uint64_t id = 0;
  std::string text;
  PassageKind kind = PassageKind::singleton;
  MergeCase merge_case = MergeCase::none;
  std::size_t token_count = 0;
  std::vector<Triple> members;
  std::vector<TextSpan> spans;
};

class DegenerateCvtError : public DataError {
 public:
  DegenerateCvtError(std::string node, const std::string& why)
      : DataError("degenerate CVT " + node + ": " + why), node_(std::move(node)) {}
  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

/// One comma-clause sentence for an n-ary relation around `cvt_node`:
/// the inbound subject and predicate, then "p_i o_i" per outbound triple
/// joined by ", ". Multiple inbound heads are joined by " and ". The CVT
/// id never appears in the text.
///
/// Throws DegenerateCvtError when the star has no inbound or no outbound
/// triple.
Passage linearize_cvt(std::string_view cvt_node, std::span<const Triple> star, const NameMap* names,
                      const Tokenizer& tokenizer = Tokenizer());

// Budgeted variant used by linearize_kb: splits the outbound clauses over
// several sentences when the whole star renders past `budget`. Later
// sentences repeat the inbound heads as unowned context.
std::vector<Passage> linearize_cvt_budgeted(std::string_view cvt_node, std::span<const Triple> star,
                                            const NameMap* names, const Tokenizer& tokenizer,
                                            std::size_t budget);

struct LinearizeConfig {
  std::size_t budget = 100;
  Tokenizer tokenizer;
  const NameMap* names = nullptr;
  std::optional<NodeSet> cvt_list;  // replaces the heuristic when set
};

struct LinearizeStats {
  std::size_t triples_in = 0;
  std::size_t duplicates_removed = 0;
  std::size_t cvt_nodes = 0;
  std::size_t cvt_triples = 0;
  std::vector<std::string> degenerate_cvts;
  std::size_t passages_out = 0;
  std::size_t merged_groups = 0;
  std::size_t singletons = 0;
  std::size_t cvt_sentences = 0;
  std::size_t oversize = 0;  // single-triple passages that alone exceed the budget
  std::array<std::size_t, 7> groups_by_case{};

  // passages_out / deduplicated triples
  double reduction_ratio() const;
};

struct LinearizeResult {
  std::vector<Passage> passages;
  LinearizeStats stats;
};

std::vector<Triple> deduplicate(std::span<const Triple> triples);

/// dedup -> CVT routing -> grouping -> rendering. Passages are ordered by
/// the input position of their first member and numbered from 0.
LinearizeResult linearize_kb(std::span<const Triple> triples, const LinearizeConfig& config);

/// Keeps each triple independently with probability 1 - drop_fraction.
class KbAblator {
 public:
  KbAblator(double drop_fraction, std::uint64_t seed);
  bool keep();

 private:
  double keep_probability_;
  Rng rng_;
};

std::vector<Triple> ablate_kb(std::span<const Triple> triples, double drop_fraction,
                              std::uint64_t seed);

}  // namespace skp
