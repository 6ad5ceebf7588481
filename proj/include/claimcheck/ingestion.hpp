#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace claimcheck {

// Offsets throughout are byte offsets into UTF-8 text and always fall on
// code-point boundaries.

struct Passage {
  std::string passage_id;
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::size_t ordinal = 0;
  // Token range [token_start, token_end) in the document's chunking tokens.
  std::size_t token_start = 0;
  std::size_t token_end = 0;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::string full_text;
  std::vector<Passage> passages;

  const Passage* find_passage(std::string_view passage_id) const;
};

struct ChunkConfig {
  std::size_t size_tokens = 180;
  std::size_t overlap_tokens = 30;
  // Only "words+punct" is implemented; section-aware chunking would be a new scheme.
  std::string tokenizer = "words+punct";

  void validate() const;
};

struct Sentence {
  std::string sentence_id;
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct Review {
  std::string review_id;
  std::string paper_id;
  std::string raw_text;
  std::vector<Sentence> sentences;
};

// Sliding-window segmentation with stride size - overlap. Throws EmptyInput
// for blank text and InvalidConfig for overlap >= size.
Document segment_document(std::string_view full_text, const ChunkConfig& cfg, std::string doc_id = {},
                          std::string title = {});

// Splits review text into sentences. Throws EmptyInput for blank text.
Review normalize_review(std::string_view raw_text, std::string review_id = {}, std::string paper_id = {});

// Stable content-derived id used when the caller supplies none.
std::string derive_doc_id(std::string_view full_text);

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string full_text;
};

struct RawReview {
  std::string review_id;
  std::string text;
};

// Reads `.txt` (whole file is the text) or JSON {doc_id, title, full_text}.
RawDocument load_raw_document(const std::filesystem::path& path);

// Reads `.txt` (one review) or JSON: a list of {review_id, text} objects or
// {"reviews": [...]}.
std::vector<RawReview> load_raw_reviews(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace claimcheck
