#include "skp/tokenizer.hpp"

#include <fstream>

#include "skp/error.hpp"

namespace skp {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_ws(text[i])) ++i;
    if (i > begin) fn(text.substr(begin, i - begin));
  }
}

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> code_point_bounds(std::string_view word) {
  std::vector<std::size_t> bounds;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if ((static_cast<unsigned char>(word[i]) & 0xC0) != 0x80) bounds.push_back(i);
  }
  bounds.push_back(word.size());
  return bounds;
}

}  // namespace

bool is_special_token(std::string_view token) {
  return token == kClsToken || token == kSepToken || token == kMaskToken || token == kUnkToken ||
         token == kPadToken;
}

std::string_view to_string(TokenizerMode mode) {
  return mode == TokenizerMode::whitespace ? "whitespace" : "wordpiece";
}

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "whitespace") return TokenizerMode::whitespace;
  if (name == "wordpiece") return TokenizerMode::wordpiece;
  throw ConfigError("unknown tokenizer mode '" + std::string(name) + "'");
}

void TokenSequence::push_back(std::string token) {
  special.push_back(is_special_token(token));
  tokens.push_back(std::move(token));
}

void TokenSequence::append(const TokenSequence& other) {
  tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
  special.insert(special.end(), other.special.begin(), other.special.end());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read vocab " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.ids_.emplace(v.tokens_[i], i);
  for (std::string_view required : {kClsToken, kSepToken, kMaskToken, kUnkToken}) {
    if (!v.ids_.contains(std::string(required)))
      throw ConfigError("vocab is missing " + std::string(required));
  }
  return v;
}

std::optional<std::size_t> Vocab::id(const std::string& token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

Tokenizer::Tokenizer(Vocab vocab) : vocab_(std::make_shared<const Vocab>(std::move(vocab))) {}

Tokenizer Tokenizer::make(TokenizerMode mode, const std::optional<std::filesystem::path>& vocab) {
  if (mode == TokenizerMode::whitespace) return Tokenizer();
  if (!vocab) throw ConfigError("wordpiece tokenizer requires a vocab file");
  return Tokenizer(Vocab::load(*vocab));
}

TokenSequence Tokenizer::tokenize(std::string_view text) const {
  TokenSequence out;
  for_each_word(text, [&](std::string_view word) {
    if (!vocab_ || is_special_token(word))
      out.push_back(std::string(word));
    else
      wordpiece(word, out);
  });
  return out;
}

std::size_t Tokenizer::count(std::string_view text) const {
  if (vocab_) return tokenize(text).size();
  std::size_t n = 0;
  for_each_word(text, [&](std::string_view) { ++n; });
  return n;
}

void Tokenizer::wordpiece(std::string_view word, TokenSequence& out) const {
  const auto bounds = code_point_bounds(word);
  const std::size_t chars = bounds.size() - 1;
  if (chars > kMaxWordChars) {
    out.push_back(std::string(kUnkToken));
    return;
  }
  std::vector<std::string> pieces;
  std::size_t start = 0;  // index into bounds
  while (start < chars) {
    std::size_t end = chars;
    std::string match;
    while (end > start) {
      std::string candidate(word.substr(bounds[start], bounds[end] - bounds[start]));
      if (start > 0) candidate.insert(0, "##");
      if (vocab_->contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) {
      out.push_back(std::string(kUnkToken));
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  for (auto& p : pieces) out.push_back(std::move(p));
}

std::string detokenize_wordpiece(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.starts_with("##")) {
      out.append(t, 2);
    } else {
      if (!out.empty()) out += ' ';
      out += t;
    }
  }
  return out;
}

}  // namespace skp
