#include "claimcheck/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "claimcheck/error.hpp"
#include "claimcheck/kernels.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::retrieval {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Sparse: return "Sparse";
    case Stage::Dense: return "Dense";
    case Stage::Reranked: return "Reranked";
  }
  return "Sparse";
}

Stage parse_stage(std::string_view s) {
  if (s == "Sparse") return Stage::Sparse;
  if (s == "Dense") return Stage::Dense;
  if (s == "Reranked") return Stage::Reranked;
  throw Error(ErrorCode::ParseError, "unknown stage: " + std::string(s));
}

void finalize_ranking(std::vector<EvidenceHit>& hits, std::size_t k) {
  auto better = [](const EvidenceHit& a, const EvidenceHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ordinal < b.ordinal;
  };
  if (k < hits.size()) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
}

// ---------------------------------------------------------------------------

Bm25Index Bm25Index::build(const std::vector<Passage>& passages, Bm25Params params) {
  if (passages.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty passage list");
  if (!(params.k1 > 0.0)) throw Error(ErrorCode::InvalidConfig, "k1 must be positive");
  if (!(params.b >= 0.0 && params.b <= 1.0)) throw Error(ErrorCode::InvalidConfig, "b must lie in [0, 1]");

  Bm25Index index;
  index.params_ = params;
  index.doc_len_.reserve(passages.size());
  std::uint64_t total = 0;
  for (std::size_t ord = 0; ord < passages.size(); ++ord) {
    const auto terms = text::tokenize(passages[ord].text);
    index.doc_len_.push_back(static_cast<std::uint32_t>(terms.size()));
    index.passage_ids_.push_back(passages[ord].passage_id);
    total += terms.size();
    for (const auto& term : terms) {
      auto [it, inserted] = index.vocabulary_.try_emplace(term, static_cast<std::uint32_t>(index.postings_.size()));
      if (inserted) index.postings_.emplace_back();
      auto& list = index.postings_[it->second];
      if (!list.empty() && list.back().ordinal == ord) {
        ++list.back().tf;
      } else {
        list.push_back({static_cast<std::uint32_t>(ord), 1});
      }
    }
  }
  index.avg_doc_len_ = static_cast<double>(total) / static_cast<double>(passages.size());
  return index;
}

double Bm25Index::idf(std::size_t df) const {
  const double n = static_cast<double>(doc_len_.size());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::optional<std::uint32_t> Bm25Index::term_id(std::string_view term) const {
  auto it = vocabulary_.find(std::string(term));
  if (it == vocabulary_.end()) return std::nullopt;
  return it->second;
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  auto id = term_id(term);
  return id ? postings_[*id].size() : 0;
}

std::vector<EvidenceHit> Bm25Index::search(std::string_view query, std::size_t k) const {
  if (k == 0) return {};
  std::vector<double> scores(doc_len_.size(), 0.0);
  std::vector<char> touched(doc_len_.size(), 0);
  const double k1 = params_.k1;
  const double b = params_.b;
  // Every query token contributes, so repeated query terms weigh more.
  for (const auto& term : text::tokenize(query)) {
    auto id = term_id(term);
    if (!id) continue;
    const auto& list = postings_[*id];
    const double w = idf(list.size());
    for (const Posting& p : list) {
      const double tf = p.tf;
      const double norm = k1 * (1.0 - b + b * static_cast<double>(doc_len_[p.ordinal]) / avg_doc_len_);
      scores[p.ordinal] += w * tf * (k1 + 1.0) / (tf + norm);
      touched[p.ordinal] = 1;
    }
  }
  std::vector<EvidenceHit> hits;
  for (std::size_t ord = 0; ord < scores.size(); ++ord) {
    if (!touched[ord] || scores[ord] <= 0.0) continue;
    hits.push_back({passage_ids_[ord], ord, scores[ord], 0, Stage::Sparse, std::nullopt});
  }
  finalize_ranking(hits, k);
  return hits;
}

// ---------------------------------------------------------------------------

DenseIndex DenseIndex::build(const std::vector<Passage>& passages, gateway::EmbeddingBackend& embedder) {
  if (passages.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot index an empty passage list");
  std::vector<std::string> texts;
  std::vector<std::string> ids;
  texts.reserve(passages.size());
  for (const auto& p : passages) {
    texts.push_back(p.text);
    ids.push_back(p.passage_id);
  }
  auto vectors = embedder.embed(texts);
  if (vectors.size() != passages.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                                  std::to_string(passages.size()) + " passages");
  }
  const std::size_t dim = vectors.front().size();
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "embedder returned empty vectors");
  std::vector<double> data;
  data.reserve(dim * vectors.size());
  for (auto& v : vectors) {
    if (v.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "vector of dim " + std::to_string(v.size()) + " in an index of dim " + std::to_string(dim));
    }
    if (simd::normalize(v) == 0.0) throw Error(ErrorCode::BackendError, "embedder returned a zero vector");
    data.insert(data.end(), v.begin(), v.end());
  }
  return from_vectors(std::move(ids), dim, std::move(data), embedder.id());
}

DenseIndex DenseIndex::from_vectors(std::vector<std::string> passage_ids, std::size_t dim, std::vector<double> data,
                                    std::string embedder_id) {
  if (dim == 0 || data.size() != dim * passage_ids.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vector data does not match dim x count");
  }
  DenseIndex index;
  index.passage_ids_ = std::move(passage_ids);
  index.dim_ = dim;
  index.data_ = std::move(data);
  index.embedder_id_ = std::move(embedder_id);
  return index;
}

std::vector<EvidenceHit> DenseIndex::search(const std::vector<double>& query, std::size_t k) const {
  if (query.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "query dim " + std::to_string(query.size()) + " != index dim " + std::to_string(dim_));
  }
  if (k == 0 || passage_ids_.empty()) return {};
  std::vector<double> scores(passage_ids_.size());
  simd::active().dot_rows(data_.data(), passage_ids_.size(), dim_, query.data(), scores.data());
  std::vector<EvidenceHit> hits;
  hits.reserve(scores.size());
  for (std::size_t ord = 0; ord < scores.size(); ++ord) {
    hits.push_back({passage_ids_[ord], ord, scores[ord], 0, Stage::Dense, std::nullopt});
  }
  finalize_ranking(hits, k);
  return hits;
}

std::vector<double> embed_query(std::string_view text, gateway::EmbeddingBackend& embedder) {
  auto vectors = embedder.embed({std::string(text)});
  if (vectors.size() != 1 || vectors.front().empty()) {
    throw Error(ErrorCode::DimensionMismatch, "embedder returned no query vector");
  }
  std::vector<double> v = std::move(vectors.front());
  if (simd::normalize(v) == 0.0) throw Error(ErrorCode::BackendError, "embedder returned a zero query vector");
  return v;
}

// ---------------------------------------------------------------------------

RerankResult rerank(std::string_view claim, const std::vector<EvidenceHit>& candidates, const Document& doc,
                    gateway::PairScorerBackend& scorer) {
  RerankResult result;
  if (candidates.empty()) return result;
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (const auto& hit : candidates) {
    const Passage* p = hit.ordinal < doc.passages.size() && doc.passages[hit.ordinal].passage_id == hit.passage_id
                           ? &doc.passages[hit.ordinal]
                           : doc.find_passage(hit.passage_id);
    if (p == nullptr) throw Error(ErrorCode::NotFound, "unknown passage " + hit.passage_id);
    texts.push_back(p->text);
  }
  std::vector<double> scores;
  try {
    scores = scorer.score_pairs(claim, texts);
    if (scores.size() != candidates.size()) throw Error(ErrorCode::BackendError, "scorer returned the wrong count");
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
    result.hits = candidates;
    result.degraded = true;
    return result;
  }
  result.hits.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    EvidenceHit hit = candidates[i];
    hit.first_stage_score = hit.first_stage_score.value_or(hit.score);
    hit.score = scores[i];
    hit.stage = Stage::Reranked;
    result.hits.push_back(std::move(hit));
  }
  finalize_ranking(result.hits, result.hits.size());
  return result;
}

// ---------------------------------------------------------------------------

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Bm25: return "bm25";
    case StrategyKind::Dense: return "dense";
    case StrategyKind::DenseRerank: return "dense_rerank";
    case StrategyKind::SparseRerank: return "sparse_rerank";
  }
  return "bm25";
}

StrategyKind parse_strategy(std::string_view s) {
  for (StrategyKind k : all_strategies()) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::InvalidConfig,
              "unknown strategy '" + std::string(s) + "' (expected bm25, dense, dense_rerank or sparse_rerank)");
}

const std::vector<StrategyKind>& all_strategies() {
  static const std::vector<StrategyKind> all = {StrategyKind::Bm25, StrategyKind::Dense, StrategyKind::DenseRerank,
                                                StrategyKind::SparseRerank};
  return all;
}

void RetrievalStrategy::validate() const {
  if (final_k == 0) throw Error(ErrorCode::InvalidConfig, "final_k must be positive");
  if (final_k > candidate_k) throw Error(ErrorCode::InvalidConfig, "final_k must not exceed candidate_k");
}

RetrievalResult retrieve(std::string_view claim_text, const IndexedDocument& doc, const RetrievalStrategy& strategy,
                         const Backends& backends) {
  strategy.validate();
  if (doc.doc == nullptr) throw Error(ErrorCode::MissingIndex, "no document attached");
  const bool sparse = strategy.kind == StrategyKind::Bm25 || strategy.kind == StrategyKind::SparseRerank;
  const bool reranked = strategy.kind == StrategyKind::DenseRerank || strategy.kind == StrategyKind::SparseRerank;
  if (sparse && !doc.bm25) throw Error(ErrorCode::MissingIndex, "strategy needs a BM25 index");
  if (!sparse && !doc.dense) throw Error(ErrorCode::MissingIndex, "strategy needs a dense index");
  if (!sparse && backends.embedder == nullptr) throw Error(ErrorCode::MissingIndex, "strategy needs an embedder");
  if (reranked && backends.scorer == nullptr) throw Error(ErrorCode::MissingIndex, "strategy needs a pair scorer");

  const std::size_t first_k = reranked ? strategy.candidate_k : strategy.final_k;
  std::vector<EvidenceHit> first;
  if (sparse) {
    first = doc.bm25->search(claim_text, first_k);
  } else {
    first = doc.dense->search(embed_query(claim_text, *backends.embedder), first_k);
  }

  RetrievalResult result;
  if (!reranked) {
    result.hits = std::move(first);
    return result;
  }
  result.candidates_considered = first.size();
  RerankResult reranked_hits = rerank(claim_text, first, *doc.doc, *backends.scorer);
  result.degraded = reranked_hits.degraded;
  result.hits = std::move(reranked_hits.hits);
  if (result.hits.size() > strategy.final_k) result.hits.resize(strategy.final_k);
  return result;
}

}  // namespace claimcheck::retrieval
