#include "claimcheck/text.hpp"

#include "claimcheck/resources.hpp"

namespace claimcheck::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (is_upper(static_cast<unsigned char>(c))) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    unsigned char x = static_cast<unsigned char>(a[i]);
    unsigned char y = static_cast<unsigned char>(b[i]);
    if (is_upper(x)) x = static_cast<unsigned char>(x - 'A' + 'a');
    if (is_upper(y)) y = static_cast<unsigned char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates, out of range.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

std::vector<TokenSpan> chunk_tokens(std::string_view s) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t start = i;
      while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({start, i});
    } else {
      out.push_back({i, i + 1});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_word_byte(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
    out.push_back(to_lower(s.substr(start, i - start)));
  }
  return out;
}

std::vector<std::string> content_terms(std::string_view s) {
  std::vector<std::string> out;
  const Lexicon& stop = stopwords();
  for (auto& term : tokenize(s)) {
    if (!stop.contains(term)) out.push_back(std::move(term));
  }
  return out;
}

Lexicon::Lexicon(std::vector<std::string> entries) : entries_(std::move(entries)) {
  for (auto& e : entries_) {
    e = to_lower(e);
    set_.insert(e);
  }
}

Lexicon Lexicon::load(std::string_view resource_name) { return Lexicon(resources::lexicon_lines(resource_name)); }

bool Lexicon::contains(std::string_view word) const { return set_.count(to_lower(word)) > 0; }

const Lexicon& stopwords() {
  static const Lexicon lex = Lexicon::load("lexicon/stopwords.v1.txt");
  return lex;
}

}  // namespace claimcheck::text
