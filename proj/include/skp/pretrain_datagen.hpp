#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "skp/linearizer.hpp"
#include "skp/tokenizer.hpp"

namespace skp {

// Which rendered term gets masked: a member triple, one of its roles, and
// the passage span carrying that term.
struct MaskChoice {
  std::size_t triple_index = 0;
  Role role = Role::subject;
  std::size_t span_index = 0;
};

/// Seeded draw: one member triple uniformly, then one of its roles
/// uniformly. Roles without rendered text (the hidden CVT node of a CVT
/// sentence) are not eligible. Throws ArgumentError for an empty passage.
MaskChoice draw_mask_choice(const Passage& passage, std::uint64_t seed);

/// Knowledge-aware MLM instance framed as "[CLS] ... [SEP]".
struct KMExample {
  std::uint64_t passage_id = 0;
  TokenSequence tokens;  // masked
  std::vector<std::size_t> masked_positions;
  std::vector<std::string> targets;
  Role masked_component = Role::subject;
  std::size_t triple_index = 0;
};

struct KCDPair {
  std::string original_text;
  std::string positive_text;
  std::uint64_t source_passage_id = 0;
};

// Unmasked framed sequence. Rendered terms and the punctuation between
// them are tokenized piecewise so every term owns whole tokens.
TokenSequence frame_tokens(const Passage& passage, const Tokenizer& tokenizer);

KMExample make_km_example(const Passage& passage, std::uint64_t seed,
                          const Tokenizer& tokenizer = Tokenizer());

// Positive = the same draw as make_km_example, with the chosen term
// replaced by one [MASK] per token.
KCDPair make_kcd_pair(const Passage& passage, std::uint64_t seed,
                      const Tokenizer& tokenizer = Tokenizer());

// Puts targets back at masked_positions.
TokenSequence reconstruct(const KMExample& example);

struct BatchPlan {
  std::vector<std::vector<std::size_t>> batches;  // corpus indices
  std::size_t sampled = 0;
  std::size_t dropped = 0;  // trailing examples that could not form a batch of 2
};

/// Seeded sample of `sample_count` corpus indices without replacement,
/// shuffled and cut into batches. A trailing batch smaller than 2 is dropped.
BatchPlan plan_batches(std::size_t corpus_size, std::size_t batch_size, std::uint64_t seed,
                       std::size_t sample_count);

// Per-passage example seed.
std::uint64_t example_seed(std::uint64_t seed, std::uint64_t passage_id);

nlohmann::ordered_json km_to_json(const KMExample& ex, std::size_t batch);
nlohmann::ordered_json kcd_to_json(const KCDPair& pair, std::size_t batch);

}  // namespace skp
