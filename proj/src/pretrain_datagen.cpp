#include "skp/pretrain_datagen.hpp"

#include <algorithm>
#include <numeric>

#include "skp/error.hpp"
#include "skp/rng.hpp"

namespace skp {

namespace {

struct Piece {
  std::size_t begin;
  std::size_t end;
  std::ptrdiff_t span;  // -1 for punctuation between terms
};

std::vector<Piece> pieces_of(const Passage& p) {
  std::vector<std::size_t> order(p.spans.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p.spans[a].begin < p.spans[b].begin; });
  std::vector<Piece> out;
  std::size_t cursor = 0;
  for (std::size_t s : order) {
    const TextSpan& span = p.spans[s];
    if (span.begin > cursor) out.push_back({cursor, span.begin, -1});
    out.push_back({span.begin, span.end, static_cast<std::ptrdiff_t>(s)});
    cursor = span.end;
  }
  if (cursor < p.text.size()) out.push_back({cursor, p.text.size(), -1});
  return out;
}

std::ptrdiff_t span_for(const Passage& p, std::size_t triple, Role role) {
  for (std::size_t s = 0; s < p.spans.size(); ++s) {
    const TextSpan& span = p.spans[s];
    if (span.role == role && span.begin < span.end &&
        std::find(span.triples.begin(), span.triples.end(), triple) != span.triples.end())
      return static_cast<std::ptrdiff_t>(s);
  }
  return -1;
}

}  // namespace

MaskChoice draw_mask_choice(const Passage& passage, std::uint64_t seed) {
  if (passage.members.empty()) throw ArgumentError("passage " + std::to_string(passage.id) + " has no triples");
  Rng rng(seed);
  const std::size_t triple = rng.uniform_index(passage.members.size());
  std::vector<std::pair<Role, std::size_t>> eligible;
  for (Role r : {Role::subject, Role::relation, Role::object}) {
    if (auto s = span_for(passage, triple, r); s >= 0) eligible.emplace_back(r, static_cast<std::size_t>(s));
  }
  if (eligible.empty())
    throw DataError("passage " + std::to_string(passage.id) + ": triple " + std::to_string(triple) +
                    " has no rendered term");
  const auto& [role, span] = eligible[rng.uniform_index(eligible.size())];
  return {triple, role, span};
}

TokenSequence frame_tokens(const Passage& passage, const Tokenizer& tokenizer) {
  TokenSequence seq;
  seq.push_back(std::string(kClsToken));
  const std::string_view text = passage.text;
  for (const Piece& piece : pieces_of(passage))
    seq.append(tokenizer.tokenize(text.substr(piece.begin, piece.end - piece.begin)));
  seq.push_back(std::string(kSepToken));
  return seq;
}

KMExample make_km_example(const Passage& passage, std::uint64_t seed, const Tokenizer& tokenizer) {
  const MaskChoice choice = draw_mask_choice(passage, seed);
  KMExample ex;
  ex.passage_id = passage.id;
  ex.masked_component = choice.role;
  ex.triple_index = choice.triple_index;
  ex.tokens.push_back(std::string(kClsToken));
  const std::string_view text = passage.text;
  for (const Piece& piece : pieces_of(passage)) {
    TokenSequence part = tokenizer.tokenize(text.substr(piece.begin, piece.end - piece.begin));
    if (piece.span == static_cast<std::ptrdiff_t>(choice.span_index)) {
      for (std::size_t i = 0; i < part.size(); ++i) {
        ex.masked_positions.push_back(ex.tokens.size() + i);
        ex.targets.push_back(part.tokens[i]);
        part.tokens[i] = std::string(kMaskToken);
        part.special[i] = true;
      }
    }
    ex.tokens.append(part);
  }
  ex.tokens.push_back(std::string(kSepToken));
  return ex;
}

KCDPair make_kcd_pair(const Passage& passage, std::uint64_t seed, const Tokenizer& tokenizer) {
  const MaskChoice choice = draw_mask_choice(passage, seed);
  const TextSpan& span = passage.spans[choice.span_index];
  const std::size_t n = tokenizer.count(std::string_view(passage.text).substr(span.begin, span.end - span.begin));
  std::string masks;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) masks += ' ';
    masks += kMaskToken;
  }
  std::string positive = passage.text;
  positive.replace(span.begin, span.end - span.begin, masks);
  const std::string cls(kClsToken), sep(kSepToken);
  return {cls + " " + passage.text + " " + sep, cls + " " + positive + " " + sep, passage.id};
}

TokenSequence reconstruct(const KMExample& example) {
  TokenSequence out = example.tokens;
  for (std::size_t i = 0; i < example.masked_positions.size(); ++i) {
    const std::size_t pos = example.masked_positions[i];
    out.tokens.at(pos) = example.targets.at(i);
    out.special.at(pos) = is_special_token(example.targets[i]);
  }
  return out;
}

BatchPlan plan_batches(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed,
                       std::size_t sample_count) {
  if (batch_size < 2) throw ArgumentError("batch size must be at least 2 (in-batch negatives)");
  if (sample_count > corpus_size)
    throw ArgumentError("sample count " + std::to_string(sample_count) + " exceeds corpus size " +
                        std::to_string(corpus_size));
  // Partial Fisher-Yates: the first sample_count slots are a uniform
  // random ordered sample, so sampling and shuffling are one pass.
  std::vector<std::size_t> idx(corpus_size);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < sample_count; ++i) {
    const std::size_t j = i + rng.uniform_index(corpus_size - i);
    std::swap(idx[i], idx[j]);
  }
  BatchPlan plan;
  plan.sampled = sample_count;
  for (std::size_t begin = 0; begin < sample_count; begin += batch_size) {
    const std::size_t end = std::min(sample_count, begin + batch_size);
    if (end - begin < 2) {
      plan.dropped = end - begin;
      break;
    }
    plan.batches.emplace_back(idx.begin() + begin, idx.begin() + end);
  }
  return plan;
}

std::uint64_t example_seed(std::uint64_t seed, std::uint64_t passage_id) {
  return derive_seed(seed, passage_id);
}

nlohmann::ordered_json km_to_json(const KMExample& ex, std::size_t batch) {
  nlohmann::ordered_json j;
  j["passage_id"] = ex.passage_id;
  j["batch"] = batch;
  j["tokens"] = ex.tokens.tokens;
  j["masked_positions"] = ex.masked_positions;
  j["targets"] = ex.targets;
  j["component"] = to_string(ex.masked_component);
  j["triple_index"] = ex.triple_index;
  return j;
}

nlohmann::ordered_json kcd_to_json(const KCDPair& pair, std::size_t batch) {
  nlohmann::ordered_json j;
  j["passage_id"] = pair.source_passage_id;
  j["batch"] = batch;
  j["original"] = pair.original_text;
  j["positive"] = pair.positive_text;
  return j;
}

}  // namespace skp
