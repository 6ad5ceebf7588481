#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimcheck/gateway.hpp"
#include "claimcheck/ingestion.hpp"

namespace claimcheck::retrieval {

enum class Stage { Sparse, Dense, Reranked };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct EvidenceHit {
  std::string passage_id;
  std::size_t ordinal = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  Stage stage = Stage::Sparse;
  // Score from the first-stage retriever once a hit has been reranked.
  std::optional<double> first_stage_score;
};

// Orders by descending score, then ascending ordinal, truncates to k and
// assigns ranks 1..n.
void finalize_ranking(std::vector<EvidenceHit>& hits, std::size_t k);

struct Posting {
  std::uint32_t ordinal;
  std::uint32_t tf;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

class Bm25Index {
 public:
  // Throws EmptyCorpus for no passages and InvalidConfig for bad k1/b.
  static Bm25Index build(const std::vector<Passage>& passages, Bm25Params params = {});

  std::vector<EvidenceHit> search(std::string_view query, std::size_t k) const;

  // Okapi idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(std::size_t df) const;

  std::optional<std::uint32_t> term_id(std::string_view term) const;
  std::size_t doc_freq(std::string_view term) const;
  const std::vector<Posting>& postings(std::uint32_t term_id) const { return postings_[term_id]; }
  std::size_t doc_len(std::size_t ordinal) const { return doc_len_[ordinal]; }
  double avg_doc_len() const { return avg_doc_len_; }
  std::size_t size() const { return doc_len_.size(); }
  std::size_t vocabulary_size() const { return postings_.size(); }
  const Bm25Params& params() const { return params_; }

 private:
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_len_;
  std::vector<std::string> passage_ids_;
  double avg_doc_len_ = 0.0;
  Bm25Params params_;
};

class DenseIndex {
 public:
  // Embeds every passage once and L2-normalises. Throws DimensionMismatch on
  // ragged or empty vectors.
  static DenseIndex build(const std::vector<Passage>& passages, gateway::EmbeddingBackend& embedder);

  // From already-normalised vectors (cache loads, tests).
  static DenseIndex from_vectors(std::vector<std::string> passage_ids, std::size_t dim, std::vector<double> data,
                                 std::string embedder_id);

  // Exact inner-product search; query must be unit length with matching dim.
  std::vector<EvidenceHit> search(const std::vector<double>& query, std::size_t k) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return passage_ids_.size(); }
  const std::string& embedder_id() const { return embedder_id_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<std::string>& passage_ids() const { return passage_ids_; }
  const double* vector(std::size_t ordinal) const { return data_.data() + ordinal * dim_; }

 private:
  std::vector<std::string> passage_ids_;
  std::vector<double> data_;  // row-major, size() x dim()
  std::size_t dim_ = 0;
  std::string embedder_id_;
};

// Embeds and normalises one query string.
std::vector<double> embed_query(std::string_view text, gateway::EmbeddingBackend& embedder);

struct RerankResult {
  std::vector<EvidenceHit> hits;
  bool degraded = false;
};

// Scores each (claim, passage) pair. On backend failure the candidates come
// back unchanged with degraded set.
RerankResult rerank(std::string_view claim, const std::vector<EvidenceHit>& candidates, const Document& doc,
                    gateway::PairScorerBackend& scorer);

enum class StrategyKind { Bm25, Dense, DenseRerank, SparseRerank };

std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view s);
const std::vector<StrategyKind>& all_strategies();

struct RetrievalStrategy {
  StrategyKind kind = StrategyKind::SparseRerank;
  std::size_t candidate_k = 20;
  std::size_t final_k = 3;

  void validate() const;
};

struct IndexedDocument {
  const Document* doc = nullptr;
  std::shared_ptr<const Bm25Index> bm25;
  std::shared_ptr<const DenseIndex> dense;
};

struct Backends {
  gateway::EmbeddingBackend* embedder = nullptr;
  gateway::PairScorerBackend* scorer = nullptr;
};

struct RetrievalResult {
  std::vector<EvidenceHit> hits;
  // Size of the first-stage list handed to the reranker (0 without rerank).
  std::size_t candidates_considered = 0;
  bool degraded = false;
};

// Throws MissingIndex when the strategy's index or backend is absent.
RetrievalResult retrieve(std::string_view claim_text, const IndexedDocument& doc, const RetrievalStrategy& strategy,
                         const Backends& backends);

}  // namespace claimcheck::retrieval
