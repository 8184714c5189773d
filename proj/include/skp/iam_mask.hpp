#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace skp {

/// Question followed by retrieved passages, in sequence order.
struct SegmentLayout {
  std::size_t question_len = 0;
  std::vector<std::size_t> passage_lens;
  // Optional per-passage type label; same-type passages may see each other
  // when MaskOptions::same_type_visible is set.
  std::vector<std::string> passage_types;

  std::size_t total() const;
  // Throws ArgumentError for empty segments or a label count mismatch.
  void validate() const;
};

struct MaskOptions {
  bool same_type_visible = false;
};

/// Interval attention visibility over a question + passages sequence.
///
/// Positions i, j see each other unless they lie in two different passage
/// segments. The question sees and is seen by everything. Storage is one
/// segment id per position; dense() materializes the n x n matrix.
class AttentionMask {
 public:
  using Dense = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit AttentionMask(SegmentLayout layout, MaskOptions options = {});

  std::size_t size() const { return segment_.size(); }
  bool visible(std::size_t i, std::size_t j) const;
  Dense dense() const;
  std::size_t zero_count() const;

  const SegmentLayout& layout() const { return layout_; }
  const MaskOptions& options() const { return options_; }

  // Run-length descriptor (canonical serialized form).
  nlohmann::ordered_json descriptor() const;
  // n lines of '0'/'1' characters.
  std::string dense_text() const;

 private:
  bool segments_visible(std::int32_t a, std::int32_t b) const;

  SegmentLayout layout_;
  MaskOptions options_;
  std::vector<std::int32_t> segment_;  // -1 = question, else passage index
};

AttentionMask build_mask(const SegmentLayout& layout, MaskOptions options = {});

// {question_len, passage_lens[, passage_types]}
SegmentLayout layout_from_json(const nlohmann::json& j);
AttentionMask mask_from_descriptor(const nlohmann::json& j);

}  // namespace skp
