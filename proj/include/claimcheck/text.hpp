#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace claimcheck::text {

// Bytes >= 0x80 count as word characters so UTF-8 sequences stay inside a token.
constexpr bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

constexpr bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
constexpr bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }
constexpr bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool valid_utf8(std::string_view s);

// Half-open byte range of one chunking token inside its source string.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

// Chunking tokens: maximal runs of word bytes, plus every other non-space
// byte as a token of its own.
std::vector<TokenSpan> chunk_tokens(std::string_view s);

// Retrieval terms: lowercase, split on non-alphanumerics, empty terms dropped.
// No stemming and no stopword removal.
std::vector<std::string> tokenize(std::string_view s);

// tokenize() minus the stopword lexicon.
std::vector<std::string> content_terms(std::string_view s);

// Case-insensitive word list loaded from a compiled-in lexicon.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> entries);
  static Lexicon load(std::string_view resource_name);

  bool contains(std::string_view word) const;
  const std::vector<std::string>& entries() const { return entries_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_set<std::string> set_;
};

const Lexicon& stopwords();

}  // namespace claimcheck::text
