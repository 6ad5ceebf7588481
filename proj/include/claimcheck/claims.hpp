#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "claimcheck/gateway.hpp"
#include "claimcheck/ingestion.hpp"

namespace claimcheck {

enum class Provenance { RuleBased, ModelBacked };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

struct Claim {
  std::string claim_id;
  std::string review_id;
  std::string text;
  std::string source_sentence_id;
  std::size_t source_start = 0;
  std::size_t source_end = 0;
  double checkworthiness = 0.0;
  // ModelBacked when a model scorer produced the score or generator output
  // shaped the text.
  Provenance provenance = Provenance::RuleBased;
  bool degraded = false;
};

namespace claims {

struct Candidates {
  std::vector<std::string> texts;
  bool degraded = false;
  bool model_split = false;
};

// Rule-based conjunction split only.
std::vector<std::string> split_conjunctions(std::string_view sentence);

// Rules first, then the generator may split each rule candidate further.
// A backend failure returns the sentence as the single candidate, flagged.
Candidates decompose_sentence(std::string_view sentence, const std::vector<std::string>& context,
                              gateway::GenerationBackend* generator);

struct ScoreBreakdown {
  double score = 0.5;
  bool concrete_referent = false;
  bool opinion_dominated = false;
  bool interrogative = false;
  bool imperative = false;
};

ScoreBreakdown explain_checkworthy(std::string_view candidate);

// Deterministic rule score in [0, 1].
double classify_checkworthy(std::string_view candidate);

bool is_interrogative(std::string_view candidate);

class CheckworthinessScorer {
 public:
  virtual ~CheckworthinessScorer() = default;
  virtual double score(std::string_view candidate) = 0;
  virtual Provenance provenance() const = 0;
};

class RuleScorer final : public CheckworthinessScorer {
 public:
  double score(std::string_view candidate) override { return classify_checkworthy(candidate); }
  Provenance provenance() const override { return Provenance::RuleBased; }
};

// Asks a generator for "SCORE: x"; falls back to the rule score when the
// reply is unusable or the backend fails.
class ModelScorer final : public CheckworthinessScorer {
 public:
  explicit ModelScorer(std::shared_ptr<gateway::GenerationBackend> generator) : generator_(std::move(generator)) {}
  double score(std::string_view candidate) override;
  Provenance provenance() const override { return Provenance::ModelBacked; }

 private:
  std::shared_ptr<gateway::GenerationBackend> generator_;
};

// Rule-based hedge removal, including recapitalisation and spacing cleanup.
std::string remove_hedges(std::string_view candidate);

// True when the text holds a pronoun or definite reference that needs context.
bool needs_context(std::string_view candidate);

std::string build_decontextualization_prompt(std::string_view claim, const std::vector<std::string>& context);

struct NormalizedClaim {
  std::string text;
  bool degraded = false;
  bool model_rewrite = false;
};

NormalizedClaim normalize_claim(std::string_view candidate, const std::vector<std::string>& context,
                                gateway::GenerationBackend* generator);

struct ExtractOptions {
  double threshold = 0.5;
  CheckworthinessScorer* scorer = nullptr;  // nullptr selects the rule scorer
};

struct ExtractionResult {
  std::vector<Claim> claims;
  std::size_t degraded_sentences = 0;
};

// decompose -> score -> filter -> normalize, in review order. Questions are
// always dropped.
ExtractionResult extract_claims(const Review& review, gateway::GenerationBackend* generator,
                                const ExtractOptions& options = {});

}  // namespace claims
}  // namespace claimcheck
