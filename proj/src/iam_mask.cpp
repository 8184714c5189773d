#include "skp/iam_mask.hpp"

#include "skp/error.hpp"

namespace skp {

std::size_t SegmentLayout::total() const {
  std::size_t n = question_len;
  for (std::size_t len : passage_lens) n += len;
  return n;
}

void SegmentLayout::validate() const {
  if (question_len < 1) throw ArgumentError("question segment must be non-empty");
  for (std::size_t k = 0; k < passage_lens.size(); ++k)
    if (passage_lens[k] < 1) throw ArgumentError("passage segment " + std::to_string(k) + " is empty");
  if (!passage_types.empty() && passage_types.size() != passage_lens.size())
    throw ArgumentError("passage_types must label every passage");
}

AttentionMask::AttentionMask(SegmentLayout layout, MaskOptions options)
    : layout_(std::move(layout)), options_(options) {
  layout_.validate();
  if (options_.same_type_visible && layout_.passage_types.empty())
    throw ArgumentError("same_type_visible requires passage_types");
  segment_.assign(layout_.question_len, -1);
  segment_.reserve(layout_.total());
  for (std::size_t k = 0; k < layout_.passage_lens.size(); ++k)
    segment_.insert(segment_.end(), layout_.passage_lens[k], static_cast<std::int32_t>(k));
}

bool AttentionMask::segments_visible(std::int32_t a, std::int32_t b) const {
  if (a < 0 || b < 0 || a == b) return true;
  return options_.same_type_visible && layout_.passage_types[a] == layout_.passage_types[b];
}

bool AttentionMask::visible(std::size_t i, std::size_t j) const {
  return segments_visible(segment_.at(i), segment_.at(j));
}

AttentionMask::Dense AttentionMask::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Dense m = Dense::Ones(n, n);
  const auto& lens = layout_.passage_lens;
  std::vector<Eigen::Index> start(lens.size());
  Eigen::Index offset = static_cast<Eigen::Index>(layout_.question_len);
  for (std::size_t k = 0; k < lens.size(); ++k) {
    start[k] = offset;
    offset += static_cast<Eigen::Index>(lens[k]);
  }
  for (std::size_t a = 0; a < lens.size(); ++a)
    for (std::size_t b = 0; b < lens.size(); ++b)
      if (!segments_visible(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b)))
        m.block(start[a], start[b], static_cast<Eigen::Index>(lens[a]), static_cast<Eigen::Index>(lens[b]))
            .setZero();
  return m;
}

std::size_t AttentionMask::zero_count() const {
  const auto& lens = layout_.passage_lens;
  std::size_t zeros = 0;
  for (std::size_t a = 0; a < lens.size(); ++a)
    for (std::size_t b = a + 1; b < lens.size(); ++b)
      if (!segments_visible(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b)))
        zeros += 2 * lens[a] * lens[b];
  return zeros;
}

nlohmann::ordered_json AttentionMask::descriptor() const {
  nlohmann::ordered_json j;
  j["format"] = "skp-iam-segments/1";
  j["n"] = size();
  j["question"] = {{"start", 0}, {"length", layout_.question_len}};
  auto passages = nlohmann::ordered_json::array();
  std::size_t offset = layout_.question_len;
  for (std::size_t k = 0; k < layout_.passage_lens.size(); ++k) {
    nlohmann::ordered_json p;
    p["start"] = offset;
    p["length"] = layout_.passage_lens[k];
    if (!layout_.passage_types.empty()) p["type"] = layout_.passage_types[k];
    passages.push_back(std::move(p));
    offset += layout_.passage_lens[k];
  }
  j["passages"] = std::move(passages);
  j["same_type_visible"] = options_.same_type_visible;
  return j;
}

std::string AttentionMask::dense_text() const {
  const Dense m = dense();
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size() + m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += m(i, j) ? '1' : '0';
    out += '\n';
  }
  return out;
}

AttentionMask build_mask(const SegmentLayout& layout, MaskOptions options) {
  return AttentionMask(layout, options);
}

SegmentLayout layout_from_json(const nlohmann::json& j) {
  SegmentLayout layout;
  try {
    const auto q = j.at("question_len").get<long long>();
    if (q < 0) throw ArgumentError("question_len must be positive");
    layout.question_len = static_cast<std::size_t>(q);
    for (const auto& len : j.at("passage_lens")) {
      const auto v = len.get<long long>();
      if (v < 0) throw ArgumentError("passage lengths must be positive");
      layout.passage_lens.push_back(static_cast<std::size_t>(v));
    }
    if (j.contains("passage_types")) layout.passage_types = j.at("passage_types").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("mask layout: ") + e.what());
  }
  layout.validate();
  return layout;
}

AttentionMask mask_from_descriptor(const nlohmann::json& j) {
  SegmentLayout layout;
  layout.question_len = j.at("question").at("length").get<std::size_t>();
  for (const auto& p : j.at("passages")) {
    layout.passage_lens.push_back(p.at("length").get<std::size_t>());
    if (p.contains("type")) layout.passage_types.push_back(p.at("type").get<std::string>());
  }
  return AttentionMask(std::move(layout), {j.value("same_type_visible", false)});
}

}  // namespace skp
