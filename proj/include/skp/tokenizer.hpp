#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace skp {

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kPadToken = "[PAD]";

bool is_special_token(std::string_view token);

enum class TokenizerMode { whitespace, wordpiece };

std::string_view to_string(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view name);

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<bool> special;

  std::size_t size() const { return tokens.size(); }
  void push_back(std::string token);
  void append(const TokenSequence& other);
};

/// WordPiece vocabulary: one token per line, line number = token id.
class Vocab {
 public:
  static Vocab load(const std::filesystem::path& path);
  static Vocab from_tokens(std::vector<std::string> tokens);

  bool contains(const std::string& token) const { return ids_.contains(token); }
  std::optional<std::size_t> id(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Splits text for the linearization budget and for masking.
///
/// Whitespace mode splits on whitespace runs. WordPiece mode splits on
/// whitespace first, then applies greedy longest-match-first per word;
/// words with no matching prefix, or longer than kMaxWordChars code
/// points, become [UNK]. Special tokens pass through whole.
class Tokenizer {
 public:
  static constexpr std::size_t kMaxWordChars = 100;

  Tokenizer() = default;
  explicit Tokenizer(Vocab vocab);

  // Throws ConfigError for wordpiece without a vocab file.
  static Tokenizer make(TokenizerMode mode, const std::optional<std::filesystem::path>& vocab);

  TokenizerMode mode() const { return vocab_ ? TokenizerMode::wordpiece : TokenizerMode::whitespace; }

  TokenSequence tokenize(std::string_view text) const;
  std::size_t count(std::string_view text) const;

 private:
  void wordpiece(std::string_view word, TokenSequence& out) const;

  std::shared_ptr<const Vocab> vocab_;
};

// Joins WordPiece tokens with spaces, deleting "##" seams.
std::string detokenize_wordpiece(std::span<const std::string> tokens);

}  // namespace skp
