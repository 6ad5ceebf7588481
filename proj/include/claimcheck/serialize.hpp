#pragma once

#include <json.hpp>

#include "claimcheck/claims.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/verification.hpp"

namespace claimcheck {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

void to_json(json& j, const Passage& p);
void from_json(const json& j, Passage& p);
void to_json(json& j, const Document& d);
void from_json(const json& j, Document& d);
void to_json(json& j, const Sentence& s);
void from_json(const json& j, Sentence& s);
void to_json(json& j, const Review& r);
void from_json(const json& j, Review& r);
void to_json(json& j, const Claim& c);
void from_json(const json& j, Claim& c);
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
void to_json(json& j, const ClaimEvidence& e);
void from_json(const json& j, ClaimEvidence& e);
void to_json(json& j, const ResultBundle& b);
void from_json(const json& j, ResultBundle& b);
void to_json(json& j, const ChunkConfig& c);
void to_json(json& j, const PipelineConfig& c);

namespace retrieval {
void to_json(json& j, const EvidenceHit& h);
void from_json(const json& j, EvidenceHit& h);
void to_json(json& j, const RetrievalStrategy& s);
}  // namespace retrieval

// Applies any subset of {size_tokens, overlap_tokens, strategy, candidate_k,
// final_k, k1, b, threshold, parallelism, model_checkworthiness}. Throws
// Error(InvalidConfig) on wrong types or values.
void apply_overrides(PipelineConfig& config, const json& overrides);

// One line per element, each a compact JSON object.
template <typename T>
std::string to_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    out += json(item).dump();
    out += '\n';
  }
  return out;
}

// One object per claim: {claim, evidence, verdict}.
std::string results_jsonl(const ResultBundle& bundle);

}  // namespace claimcheck
