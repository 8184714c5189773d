#include "skp/linearizer.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "skp/error.hpp"

namespace skp {

namespace {

class TextBuilder {
 public:
  void term(const std::string& surface, Role role, std::vector<std::uint32_t> owners) {
    if (surface.empty()) return;
    if (!out_.text.empty()) out_.text += ' ';
    const std::size_t begin = out_.text.size();
    out_.text += surface;
    if (!owners.empty()) out_.spans.push_back({begin, out_.text.size(), role, std::move(owners)});
    last_was_term_ = true;
  }

  // Punctuation attaches to the previous term (", " / "; " / " and ").
  void separator(std::string_view sep) {
    if (!last_was_term_) return;
    out_.text += sep;
    last_was_term_ = false;
  }

  RenderedText take() { return std::move(out_); }

 private:
  RenderedText out_;
  bool last_was_term_ = false;
};

std::vector<std::uint32_t> all_of(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

struct TermInterner {
  std::unordered_map<std::string, std::uint32_t> ids;
  std::uint32_t operator()(const std::string& s) {
    return ids.try_emplace(s, static_cast<std::uint32_t>(ids.size())).first->second;
  }
};

std::uint64_t pack(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }

std::uint64_t case_key(MergeCase c, const std::array<std::uint32_t, 3>& spo) {
  switch (c) {
    case MergeCase::subject_predicate: return pack(spo[0], spo[1]);
    case MergeCase::subject_object: return pack(spo[0], spo[2]);
    case MergeCase::predicate_object: return pack(spo[1], spo[2]);
    case MergeCase::subject: return spo[0];
    case MergeCase::predicate: return spo[1];
    case MergeCase::object: return spo[2];
    case MergeCase::none: break;
  }
  return 0;
}

// Object identity includes its kind: literal "x" and entity x differ.
std::string object_identity(const Triple& t) {
  return (t.object_kind == ObjectKind::literal ? "L\x1f" : "E\x1f") + t.object;
}

Passage make_passage(RenderedText rendered, std::vector<Triple> members, PassageKind kind,
                     MergeCase c, const Tokenizer& tokenizer) {
  Passage p;
  p.token_count = tokenizer.count(rendered.text);
  p.text = std::move(rendered.text);
  p.spans = std::move(rendered.spans);
  p.members = std::move(members);
  p.kind = kind;
  p.merge_case = c;
  return p;
}

struct StarParts {
  std::vector<std::size_t> inbound;
  std::vector<std::size_t> outbound;
};

StarParts split_star(std::string_view node, std::span<const Triple> star) {
  StarParts parts;
  for (std::size_t i = 0; i < star.size(); ++i) {
    const Triple& t = star[i];
    if (t.subject == node)
      parts.outbound.push_back(i);
    else if (t.object_kind == ObjectKind::entity && t.object == node)
      parts.inbound.push_back(i);
    else
      throw ArgumentError("triple not incident to CVT node " + std::string(node));
  }
  if (parts.inbound.empty()) throw DegenerateCvtError(std::string(node), "no inbound triple");
  if (parts.outbound.empty()) throw DegenerateCvtError(std::string(node), "no outbound triple");
  return parts;
}

// Renders heads then clauses; member positions are given by `position`.
RenderedText render_cvt(std::span<const TripleSurface> surfaces, std::span<const std::size_t> heads,
                        std::span<const std::size_t> clauses,
                        const std::vector<std::uint32_t>& head_positions,
                        const std::vector<std::uint32_t>& clause_positions) {
  TextBuilder b;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (h > 0) b.separator(" and");
    const TripleSurface& s = surfaces[heads[h]];
    std::vector<std::uint32_t> owner;
    if (!head_positions.empty()) owner = {head_positions[h]};
    b.term(s.subject, Role::subject, owner);
    b.term(s.predicate, Role::relation, owner);
  }
  for (std::size_t c = 0; c < clauses.size(); ++c) {
    if (c > 0) b.separator(",");
    const TripleSurface& s = surfaces[clauses[c]];
    b.term(s.predicate, Role::relation, {clause_positions[c]});
    b.term(s.object, Role::object, {clause_positions[c]});
  }
  return b.take();
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::subject: return "subject";
    case Role::relation: return "relation";
    case Role::object: return "object";
  }
  return "?";
}

Role parse_role(std::string_view name) {
  if (name == "subject") return Role::subject;
  if (name == "relation") return Role::relation;
  if (name == "object") return Role::object;
  throw DataError("unknown role '" + std::string(name) + "'");
}

std::string_view to_string(PassageKind kind) {
  switch (kind) {
    case PassageKind::merged_group: return "merged_group";
    case PassageKind::singleton: return "singleton";
    case PassageKind::cvt_sentence: return "cvt_sentence";
  }
  return "?";
}

PassageKind parse_passage_kind(std::string_view name) {
  if (name == "merged_group") return PassageKind::merged_group;
  if (name == "singleton") return PassageKind::singleton;
  if (name == "cvt_sentence") return PassageKind::cvt_sentence;
  throw DataError("unknown passage kind '" + std::string(name) + "'");
}

GroupKey group_key_of(const Triple& t, MergeCase c) {
  switch (c) {
    case MergeCase::subject_predicate: return {c, t.subject, t.predicate};
    case MergeCase::subject_object: return {c, t.subject, t.object};
    case MergeCase::predicate_object: return {c, t.predicate, t.object};
    case MergeCase::subject: return {c, t.subject, {}};
    case MergeCase::predicate: return {c, t.predicate, {}};
    case MergeCase::object: return {c, t.object, {}};
    case MergeCase::none: break;
  }
  return {};
}

const std::string& TripleSurface::operator[](Role r) const {
  switch (r) {
    case Role::subject: return subject;
    case Role::relation: return predicate;
    case Role::object: break;
  }
  return object;
}

std::vector<TripleSurface> resolve_surfaces(std::span<const Triple> triples, const NameMap* names) {
  std::unordered_map<std::string, std::string> entity_cache;
  auto entity = [&](const std::string& id) -> const std::string& {
    auto [it, inserted] = entity_cache.try_emplace(id);
    if (inserted) it->second = surface_of(id, ObjectKind::entity, names);
    return it->second;
  };
  std::vector<TripleSurface> out;
  out.reserve(triples.size());
  for (const Triple& t : triples) {
    out.push_back({entity(t.subject), entity(t.predicate),
                   t.object_kind == ObjectKind::literal ? clean_surface(t.object)
                                                         : entity(t.object)});
  }
  return out;
}

RenderedText render_group(MergeCase c, std::span<const TripleSurface* const> m) {
  TextBuilder b;
  if (m.empty()) return b.take();
  const auto all = all_of(m.size());
  auto one = [](std::size_t i) { return std::vector<std::uint32_t>{static_cast<std::uint32_t>(i)}; };
  switch (c) {
    case MergeCase::none:
      b.term(m[0]->subject, Role::subject, all);
      b.term(m[0]->predicate, Role::relation, all);
      b.term(m[0]->object, Role::object, all);
      break;
    case MergeCase::subject_predicate:
      b.term(m[0]->subject, Role::subject, all);
      b.term(m[0]->predicate, Role::relation, all);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(",");
        b.term(m[i]->object, Role::object, one(i));
      }
      break;
    case MergeCase::subject_object:
      b.term(m[0]->subject, Role::subject, all);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(",");
        b.term(m[i]->predicate, Role::relation, one(i));
      }
      b.term(m[0]->object, Role::object, all);
      break;
    case MergeCase::predicate_object:
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(",");
        b.term(m[i]->subject, Role::subject, one(i));
      }
      b.term(m[0]->predicate, Role::relation, all);
      b.term(m[0]->object, Role::object, all);
      break;
    case MergeCase::subject:
      b.term(m[0]->subject, Role::subject, all);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(";");
        b.term(m[i]->predicate, Role::relation, one(i));
        b.term(m[i]->object, Role::object, one(i));
      }
      break;
    case MergeCase::predicate:
      b.term(m[0]->predicate, Role::relation, all);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(";");
        b.term(m[i]->subject, Role::subject, one(i));
        b.term(m[i]->object, Role::object, one(i));
      }
      break;
    case MergeCase::object:
      b.term(m[0]->object, Role::object, all);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) b.separator(";");
        b.term(m[i]->subject, Role::subject, one(i));
        b.term(m[i]->predicate, Role::relation, one(i));
      }
      break;
  }
  return b.take();
}

RenderedText render_group(MergeCase c, std::span<const TripleSurface> members) {
  std::vector<const TripleSurface*> ptrs;
  ptrs.reserve(members.size());
  for (const auto& s : members) ptrs.push_back(&s);
  return render_group(c, ptrs);
}

std::vector<TripleGroup> group_triples(std::span<const Triple> triples,
                                       std::span<const TripleSurface> surfaces, std::size_t budget,
                                       const Tokenizer& tokenizer) {
  if (surfaces.size() != triples.size())
    throw ArgumentError("group_triples: surfaces/triples size mismatch");
  const std::size_t n = triples.size();

  TermInterner subjects, predicates, objects;
  std::vector<std::array<std::uint32_t, 3>> ids(n);
  for (std::size_t i = 0; i < n; ++i)
    ids[i] = {subjects(triples[i].subject), predicates(triples[i].predicate),
              objects(object_identity(triples[i]))};

  std::vector<TripleGroup> groups;
  std::vector<bool> consumed(n, false);
  std::vector<const TripleSurface*> candidate;

  for (MergeCase c : kMergePriority) {
    std::unordered_map<std::uint64_t, std::size_t> bucket_of;
    std::vector<std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
      if (consumed[i]) continue;
      auto [it, inserted] = bucket_of.try_emplace(case_key(c, ids[i]), buckets.size());
      if (inserted) buckets.emplace_back();
      buckets[it->second].push_back(i);
    }

    auto flush = [&](std::vector<std::size_t>& current) {
      if (current.size() >= 2) {
        for (std::size_t i : current) consumed[i] = true;
        groups.push_back({group_key_of(triples[current.front()], c), std::move(current)});
      }
      current.clear();
    };

    for (const auto& bucket : buckets) {
      if (bucket.size() < 2) continue;
      std::vector<std::size_t> current{bucket.front()};
      for (std::size_t j = 1; j < bucket.size(); ++j) {
        candidate.clear();
        for (std::size_t i : current) candidate.push_back(&surfaces[i]);
        candidate.push_back(&surfaces[bucket[j]]);
        if (tokenizer.count(render_group(c, candidate).text) <= budget) {
          current.push_back(bucket[j]);
        } else {
          flush(current);
          current.push_back(bucket[j]);
        }
      }
      flush(current);
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!consumed[i]) groups.push_back({GroupKey{}, {i}});
  return groups;
}

Passage linearize_cvt(std::string_view cvt_node, std::span<const Triple> star, const NameMap* names,
                      const Tokenizer& tokenizer) {
  auto parts = split_star(cvt_node, star);
  const auto surfaces = resolve_surfaces(star, names);
  std::vector<std::uint32_t> head_pos, clause_pos;
  for (std::size_t i : parts.inbound) head_pos.push_back(static_cast<std::uint32_t>(i));
  for (std::size_t i : parts.outbound) clause_pos.push_back(static_cast<std::uint32_t>(i));
  return make_passage(render_cvt(surfaces, parts.inbound, parts.outbound, head_pos, clause_pos),
                      {star.begin(), star.end()}, PassageKind::cvt_sentence, MergeCase::none,
                      tokenizer);
}

std::vector<Passage> linearize_cvt_budgeted(std::string_view cvt_node, std::span<const Triple> star,
                                            const NameMap* names, const Tokenizer& tokenizer,
                                            std::size_t budget) {
  Passage whole = linearize_cvt(cvt_node, star, names, tokenizer);
  if (whole.token_count <= budget) return {std::move(whole)};

  const auto parts = split_star(cvt_node, star);
  const auto surfaces = resolve_surfaces(star, names);

  // Greedy clause chunks; chunk 0 owns the inbound heads.
  std::vector<std::vector<std::size_t>> chunks;
  std::vector<std::size_t> current;
  auto fits = [&](const std::vector<std::size_t>& clauses) {
    std::vector<std::uint32_t> pos(clauses.size(), 0);
    return tokenizer.count(render_cvt(surfaces, parts.inbound, clauses, {}, pos).text) <= budget;
  };
  for (std::size_t idx : parts.outbound) {
    current.push_back(idx);
    if (current.size() > 1 && !fits(current)) {
      current.pop_back();
      chunks.push_back(std::move(current));
      current = {idx};
    }
  }
  chunks.push_back(std::move(current));

  std::vector<Passage> out;
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    std::vector<std::size_t> member_idx = chunks[k];
    if (k == 0) member_idx.insert(member_idx.end(), parts.inbound.begin(), parts.inbound.end());
    std::sort(member_idx.begin(), member_idx.end());
    auto position = [&](std::size_t star_idx) {
      return static_cast<std::uint32_t>(
          std::lower_bound(member_idx.begin(), member_idx.end(), star_idx) - member_idx.begin());
    };
    std::vector<std::uint32_t> head_pos, clause_pos;
    if (k == 0)
      for (std::size_t i : parts.inbound) head_pos.push_back(position(i));
    for (std::size_t i : chunks[k]) clause_pos.push_back(position(i));
    std::vector<Triple> members;
    for (std::size_t i : member_idx) members.push_back(star[i]);
    out.push_back(make_passage(render_cvt(surfaces, parts.inbound, chunks[k], head_pos, clause_pos),
                               std::move(members), PassageKind::cvt_sentence, MergeCase::none,
                               tokenizer));
  }
  return out;
}

double LinearizeStats::reduction_ratio() const {
  const std::size_t triples = triples_in - duplicates_removed;
  return triples == 0 ? 0.0 : static_cast<double>(passages_out) / static_cast<double>(triples);
}

std::vector<Triple> deduplicate(std::span<const Triple> triples) {
  std::unordered_set<Triple, TripleHash> seen;
  seen.reserve(triples.size());
  std::vector<Triple> out;
  out.reserve(triples.size());
  for (const Triple& t : triples)
    if (seen.insert(t).second) out.push_back(t);
  return out;
}

LinearizeResult linearize_kb(std::span<const Triple> input, const LinearizeConfig& config) {
  if (config.budget == 0) throw ArgumentError("budget must be positive");
  LinearizeResult result;
  LinearizeStats& stats = result.stats;
  stats.triples_in = input.size();

  const std::vector<Triple> triples = deduplicate(input);
  stats.duplicates_removed = input.size() - triples.size();

  NodeSet cvts = detect_cvt(triples, config.names, config.cvt_list);

  // Star membership: a triple belongs to its subject's star when the subject
  // is a CVT, else to its object's star. Dropping degenerate nodes only ever
  // adds inbound triples to the remaining stars, so one re-routing suffices.
  std::map<std::string, std::vector<std::size_t>> stars;
  std::vector<std::size_t> vanilla;
  auto route = [&] {
    stars.clear();
    vanilla.clear();
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const Triple& t = triples[i];
      if (cvts.contains(t.subject))
        stars[t.subject].push_back(i);
      else if (t.object_kind == ObjectKind::entity && cvts.contains(t.object))
        stars[t.object].push_back(i);
      else
        vanilla.push_back(i);
    }
  };
  route();
  bool dropped = false;
  for (const auto& [node, members] : stars) {
    const bool has_out = std::any_of(members.begin(), members.end(),
                                     [&](std::size_t i) { return triples[i].subject == node; });
    const bool has_in = std::any_of(members.begin(), members.end(),
                                    [&](std::size_t i) { return triples[i].subject != node; });
    if (!has_out || !has_in) {
      stats.degenerate_cvts.push_back(node);
      cvts.erase(node);
      dropped = true;
    }
  }
  if (dropped) route();
  stats.cvt_nodes = stars.size();

  // (first member input index, passage)
  std::vector<std::pair<std::size_t, Passage>> ordered;

  for (const auto& [node, members] : stars) {
    stats.cvt_triples += members.size();
    std::vector<Triple> star;
    for (std::size_t i : members) star.push_back(triples[i]);
    for (Passage& p : linearize_cvt_budgeted(node, star, config.names, config.tokenizer,
                                             config.budget)) {
      // members are in star (= input) order; locate the first one.
      std::size_t first = members.front();
      for (std::size_t i : members)
        if (triples[i] == p.members.front()) {
          first = i;
          break;
        }
      if (p.token_count > config.budget) ++stats.oversize;
      ordered.emplace_back(first, std::move(p));
    }
  }

  std::vector<Triple> plain;
  plain.reserve(vanilla.size());
  for (std::size_t i : vanilla) plain.push_back(triples[i]);
  const auto surfaces = resolve_surfaces(plain, config.names);
  const auto groups = group_triples(plain, surfaces, config.budget, config.tokenizer);

  std::vector<const TripleSurface*> member_surfaces;
  for (const TripleGroup& g : groups) {
    member_surfaces.clear();
    std::vector<Triple> members;
    for (std::size_t i : g.members) {
      member_surfaces.push_back(&surfaces[i]);
      members.push_back(plain[i]);
    }
    const bool merged = g.members.size() > 1;
    Passage p = make_passage(render_group(g.key.merge_case, member_surfaces), std::move(members),
                             merged ? PassageKind::merged_group : PassageKind::singleton,
                             g.key.merge_case, config.tokenizer);
    ++stats.groups_by_case[static_cast<std::size_t>(g.key.merge_case)];
    if (p.token_count > config.budget) ++stats.oversize;
    ordered.emplace_back(vanilla[g.members.front()], std::move(p));
  }

  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  result.passages.reserve(ordered.size());
  for (auto& [first, p] : ordered) {
    p.id = result.passages.size();
    switch (p.kind) {
      case PassageKind::merged_group: ++stats.merged_groups; break;
      case PassageKind::singleton: ++stats.singletons; break;
      case PassageKind::cvt_sentence: ++stats.cvt_sentences; break;
    }
    result.passages.push_back(std::move(p));
  }
  stats.passages_out = result.passages.size();
  return result;
}

KbAblator::KbAblator(double drop_fraction, std::uint64_t seed)
    : keep_probability_(1.0 - drop_fraction), rng_(seed) {
  if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0))
    throw ArgumentError("drop fraction must lie in [0, 1]");
}

bool KbAblator::keep() { return rng_.uniform_real() < keep_probability_; }

std::vector<Triple> ablate_kb(std::span<const Triple> triples, double drop_fraction,
                              std::uint64_t seed) {
  KbAblator ablator(drop_fraction, seed);
  std::vector<Triple> out;
  for (const Triple& t : triples)
    if (ablator.keep()) out.push_back(t);
  return out;
}

}  // namespace skp
