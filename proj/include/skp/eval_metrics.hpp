#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skp/dense_retrieval.hpp"
#include "skp/linearizer.hpp"

namespace skp {

// Lowercase (ASCII), delete ASCII punctuation, collapse whitespace, trim.
std::string normalize_answer(std::string_view s);

struct QARecord {
  std::string question_id;
  std::string question;  // optional in the gold file
  std::vector<std::string> answers;
};

using Predictions = std::map<std::string, std::string>;

/// Fraction of gold questions whose normalized prediction equals a
/// normalized alias. A question without a prediction is a miss and is
/// counted in *missing when given.
double answer_hits_at_1(const Predictions& predictions, std::span<const QARecord> gold,
                        std::size_t* missing = nullptr);

// True when `needle` occurs in `haystack` as a run of whole tokens, both
// already normalized.
bool contains_tokens(std::string_view haystack, std::string_view needle);

/// Fraction of gold questions with a normalized alias contained (as whole
/// tokens) in one of the first min(k, |hits|) retrieved passages. Results
/// are matched to questions by query_id; a question with no result is a
/// miss. Throws DataError for a hit id absent from the corpus.
double retrieval_hits_at_k(std::span<const RetrievalResult> results, std::span<const Passage> corpus,
                           std::span<const QARecord> gold, std::size_t k);

struct MetricReport {
  std::map<std::size_t, double> hits_at;
  std::optional<double> answer_hits_at_1;
  std::size_t questions = 0;
  std::size_t missing_predictions = 0;
};

inline constexpr std::size_t kReportCutoffs[] = {1, 10, 20, 50, 100};

MetricReport evaluate(std::span<const RetrievalResult> results, std::span<const Passage> corpus,
                      std::span<const QARecord> gold, std::span<const std::size_t> cutoffs,
                      const Predictions* predictions = nullptr);
nlohmann::ordered_json report_to_json(const MetricReport& report);

std::vector<QARecord> read_gold(std::istream& in);
std::vector<QARecord> read_gold_file(const std::filesystem::path& path);
Predictions read_predictions(std::istream& in);
Predictions read_predictions_file(const std::filesystem::path& path);

}  // namespace skp
