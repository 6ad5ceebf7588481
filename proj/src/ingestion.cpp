#include "claimcheck/ingestion.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "claimcheck/error.hpp"
#include "claimcheck/hashing.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

using nlohmann::json;

const Passage* Document::find_passage(std::string_view passage_id) const {
  for (const auto& p : passages) {
    if (p.passage_id == passage_id) return &p;
  }
  return nullptr;
}

void ChunkConfig::validate() const {
  if (size_tokens == 0) throw Error(ErrorCode::InvalidConfig, "size_tokens must be positive");
  if (overlap_tokens >= size_tokens) {
    throw Error(ErrorCode::InvalidConfig, "overlap_tokens (" + std::to_string(overlap_tokens) +
                                              ") must be smaller than size_tokens (" + std::to_string(size_tokens) + ")");
  }
  if (tokenizer != "words+punct") throw Error(ErrorCode::InvalidConfig, "unknown tokenizer: " + tokenizer);
}

std::string derive_doc_id(std::string_view full_text) { return "doc-" + hex64(fnv1a64(full_text)).substr(0, 12); }

Document segment_document(std::string_view full_text, const ChunkConfig& cfg, std::string doc_id, std::string title) {
  cfg.validate();
  if (text::trim(full_text).empty()) throw Error(ErrorCode::EmptyInput, "document text is empty");
  if (!text::valid_utf8(full_text)) throw Error(ErrorCode::ParseError, "document text is not valid UTF-8");

  Document doc;
  doc.doc_id = doc_id.empty() ? derive_doc_id(full_text) : std::move(doc_id);
  doc.title = std::move(title);
  doc.full_text = std::string(full_text);

  const auto tokens = text::chunk_tokens(full_text);
  const std::size_t n = tokens.size();
  const std::size_t stride = cfg.size_tokens - cfg.overlap_tokens;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + cfg.size_tokens, n);
    Passage p;
    p.ordinal = doc.passages.size();
    char id[24];
    std::snprintf(id, sizeof(id), "p%04zu", p.ordinal);
    p.passage_id = id;
    p.token_start = start;
    p.token_end = end;
    p.char_start = tokens[start].start;
    p.char_end = tokens[end - 1].end;
    p.text = doc.full_text.substr(p.char_start, p.char_end - p.char_start);
    doc.passages.push_back(std::move(p));
    if (end == n) break;
  }
  return doc;
}

namespace {

struct Block {
  std::size_t start;
  std::size_t end;
};

bool at_line_start(std::string_view s, std::size_t i) { return i == 0 || s[i - 1] == '\n'; }

// Length of a list marker ("- ", "* ", "+ ", "• ", "12. ", "3) ") at i, or 0.
std::size_t list_marker_length(std::string_view s, std::size_t i) {
  auto followed_by_space = [&](std::size_t j) { return j < s.size() && (s[j] == ' ' || s[j] == '\t'); };
  if (i >= s.size()) return 0;
  char c = s[i];
  if ((c == '-' || c == '*' || c == '+') && followed_by_space(i + 1)) return 1;
  if (s.substr(i, 3) == "\xE2\x80\xA2" && followed_by_space(i + 3)) return 3;
  std::size_t j = i;
  while (j < s.size() && text::is_digit(static_cast<unsigned char>(s[j])) && j - i < 3) ++j;
  if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')') && followed_by_space(j + 1)) return j + 1 - i;
  return 0;
}

// Paragraphs and list items become separate blocks; list markers are not
// part of any block.
std::vector<Block> split_blocks(std::string_view s) {
  std::vector<Block> blocks;
  std::size_t block_start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (at_line_start(s, i)) {
      std::size_t j = i;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t')) ++j;
      if (j >= s.size() || s[j] == '\n' || s[j] == '\r') {
        // Blank line closes the current block.
        if (i > block_start) blocks.push_back({block_start, i});
        block_start = j < s.size() ? j + 1 : j;
        i = block_start;
        continue;
      }
      if (std::size_t marker = list_marker_length(s, j); marker > 0) {
        if (i > block_start) blocks.push_back({block_start, i});
        std::size_t k = j + marker;
        while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
        block_start = k;
        i = k;
        continue;
      }
    }
    ++i;
  }
  if (block_start < s.size()) blocks.push_back({block_start, s.size()});
  return blocks;
}

const text::Lexicon& abbreviations() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/abbreviations.v1.txt");
  return lex;
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

// The period at i belongs to an abbreviation or an initial.
bool protected_period(std::string_view s, std::size_t block_start, std::size_t i) {
  std::size_t b = i;
  while (b > block_start && (text::is_word_byte(static_cast<unsigned char>(s[b - 1])) || s[b - 1] == '.')) --b;
  std::string_view word = s.substr(b, i - b);
  if (word.empty()) return false;
  if (abbreviations().contains(word)) return true;
  if (word.size() == 1 && text::is_upper(static_cast<unsigned char>(word[0]))) return true;
  return false;
}

void split_sentences(std::string_view s, Block block, std::vector<Block>& out) {
  std::size_t sentence_start = block.start;
  int depth = 0;
  auto emit = [&](std::size_t from, std::size_t to) {
    while (from < to && text::is_space(static_cast<unsigned char>(s[from]))) ++from;
    while (to > from && text::is_space(static_cast<unsigned char>(s[to - 1]))) --to;
    if (to > from) out.push_back({from, to});
  };
  for (std::size_t i = block.start; i < block.end; ++i) {
    char c = s[i];
    if (c == '(' || c == '[') {
      ++depth;
      continue;
    }
    if (c == ')' || c == ']') {
      if (depth > 0) --depth;
      continue;
    }
    if (depth > 0 || (c != '.' && c != '!' && c != '?')) continue;
    if (c == '.' && protected_period(s, block.start, i)) continue;

    std::size_t j = i + 1;
    while (j < block.end && (s[j] == '.' || s[j] == '!' || s[j] == '?' || is_closer(s[j]))) ++j;
    if (j >= block.end) break;  // the block end closes this sentence
    if (!text::is_space(static_cast<unsigned char>(s[j]))) continue;
    std::size_t k = j;
    while (k < block.end && text::is_space(static_cast<unsigned char>(s[k]))) ++k;
    if (k >= block.end) break;
    std::size_t first = k;
    if ((s[first] == '"' || s[first] == '\'' || s[first] == '(' || s[first] == '[') && first + 1 < block.end) ++first;
    if (!text::is_upper(static_cast<unsigned char>(s[first]))) continue;
    emit(sentence_start, j);
    sentence_start = k;
    i = k - 1;
  }
  emit(sentence_start, block.end);
}

}  // namespace

Review normalize_review(std::string_view raw_text, std::string review_id, std::string paper_id) {
  if (text::trim(raw_text).empty()) throw Error(ErrorCode::EmptyInput, "review text is empty");
  if (!text::valid_utf8(raw_text)) throw Error(ErrorCode::ParseError, "review text is not valid UTF-8");

  Review review;
  review.review_id = review_id.empty() ? "rev-" + hex64(fnv1a64(raw_text)).substr(0, 12) : std::move(review_id);
  review.paper_id = std::move(paper_id);
  review.raw_text = std::string(raw_text);

  std::vector<Block> spans;
  for (const Block& block : split_blocks(raw_text)) split_sentences(raw_text, block, spans);
  for (const Block& span : spans) {
    Sentence sentence;
    sentence.sentence_id = review.review_id + "-s" + std::to_string(review.sentences.size() + 1);
    sentence.char_start = span.start;
    sentence.char_end = span.end;
    sentence.text = review.raw_text.substr(span.start, span.end - span.start);
    review.sentences.push_back(std::move(sentence));
  }
  return review;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_json_file(const std::filesystem::path& path, const std::string& content) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::string string_field(const json& j, const char* key, const std::string& fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

RawDocument load_raw_document(const std::filesystem::path& path) {
  std::string content = read_file(path);
  RawDocument doc;
  if (path.extension() == ".json") {
    json j = parse_json_file(path, content);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, path.string() + ": expected an object");
    doc.doc_id = string_field(j, "doc_id");
    doc.title = string_field(j, "title");
    doc.full_text = string_field(j, "full_text");
  } else {
    doc.full_text = std::move(content);
  }
  if (doc.doc_id.empty()) doc.doc_id = path.stem().string();
  return doc;
}

std::vector<RawReview> load_raw_reviews(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<RawReview> out;
  if (path.extension() == ".json" || path.extension() == ".jsonl") {
    json items = json::array();
    if (path.extension() == ".jsonl") {
      std::istringstream lines(content);
      std::string line;
      while (std::getline(lines, line)) {
        if (!text::trim(line).empty()) items.push_back(parse_json_file(path, line));
      }
    } else {
      json j = parse_json_file(path, content);
      items = j.is_object() && j.contains("reviews") ? j.at("reviews") : j;
    }
    if (!items.is_array()) throw Error(ErrorCode::ParseError, path.string() + ": expected a list of reviews");
    for (const auto& item : items) {
      RawReview r;
      if (item.is_string()) {
        r.text = item.get<std::string>();
      } else if (item.is_object()) {
        r.review_id = string_field(item, "review_id");
        r.text = string_field(item, "text");
      } else {
        throw Error(ErrorCode::ParseError, path.string() + ": review entries must be objects or strings");
      }
      if (r.review_id.empty()) r.review_id = "r" + std::to_string(out.size() + 1);
      out.push_back(std::move(r));
    }
  } else {
    out.push_back({path.stem().string(), std::move(content)});
  }
  return out;
}

}  // namespace claimcheck
