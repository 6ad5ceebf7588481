#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "claimcheck/claims.hpp"
#include "claimcheck/gateway.hpp"
#include "claimcheck/index_cache.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/verification.hpp"

namespace claimcheck {

struct PipelineConfig {
  ChunkConfig chunk;
  retrieval::RetrievalStrategy strategy;
  retrieval::Bm25Params bm25;
  double threshold = 0.5;
  bool model_checkworthiness = false;
  // Claims retrieved and verified concurrently.
  std::size_t parallelism = 4;
  gateway::GenerationParams generation;

  void validate() const;
};

struct PipelineBackends {
  std::shared_ptr<gateway::GenerationBackend> generator;
  std::shared_ptr<gateway::EmbeddingBackend> embedder;
  std::shared_ptr<gateway::PairScorerBackend> scorer;
  // Used for claim decomposition/normalisation; nullptr means `generator`.
  std::shared_ptr<gateway::GenerationBackend> extractor;

  gateway::GenerationBackend* extraction_backend() const { return extractor ? extractor.get() : generator.get(); }
};

struct ClaimEvidence {
  std::string claim_id;
  std::vector<retrieval::EvidenceHit> hits;
  std::size_t candidates_considered = 0;
  bool degraded = false;
};

struct ResultBundle {
  Document document;
  std::vector<Review> reviews;
  std::vector<Claim> claims;              // review order
  std::vector<ClaimEvidence> evidence;    // parallel to claims
  std::vector<Verdict> verdicts;          // parallel to claims

  std::size_t degraded_claims() const;
};

enum class PipelineStage { Ingesting, Extracting, Retrieving, Verifying };

struct ProgressObserver {
  std::function<void(PipelineStage)> on_stage;
  std::function<void(std::size_t done, std::size_t total)> on_claim_done;
  // Polled between units of work; returning true aborts with Error(Timeout).
  std::function<bool()> should_abort;
};

// Builds the indexes the strategy needs. `cache` may be null.
retrieval::IndexedDocument index_document(const Document& doc, const PipelineConfig& config,
                                          const PipelineBackends& backends, const retrieval::IndexCache* cache);

ResultBundle run_pipeline(const RawDocument& document, const std::vector<RawReview>& reviews,
                          const PipelineConfig& config, const PipelineBackends& backends,
                          const ProgressObserver& observer = {}, const retrieval::IndexCache* cache = nullptr);

// Every cross-reference problem found; empty when the bundle is consistent.
std::vector<std::string> validate_bundle(const ResultBundle& bundle);

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace claimcheck
