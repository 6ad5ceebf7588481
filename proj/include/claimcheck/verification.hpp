#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "claimcheck/claims.hpp"
#include "claimcheck/gateway.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/retrieval.hpp"

namespace claimcheck {

enum class VerdictLabel { Supported, PartiallySupported, Contradicted, Undetermined };

std::string_view to_string(VerdictLabel label);
std::optional<VerdictLabel> parse_verdict_label(std::string_view s);
const std::vector<VerdictLabel>& all_labels();

enum class ParserConfidence { Exact, Fuzzy, Fallback };

std::string_view to_string(ParserConfidence c);
ParserConfidence parse_parser_confidence(std::string_view s);

struct Verdict {
  std::string claim_id;
  VerdictLabel label = VerdictLabel::Undetermined;
  std::string rationale;
  std::vector<std::string> evidence;
  std::string raw_response;
  ParserConfidence parser_confidence = ParserConfidence::Fallback;
  bool backend_called = false;
  // Set when the backend failed and the verdict is a fallback.
  bool degraded = false;
};

namespace verification {

// Template with {premises}, {hypothesis} and {labels} placeholders.
struct PromptTemplate {
  std::string text;
  std::string labels;

  static PromptTemplate builtin();
  static PromptTemplate from_file(const std::string& path);
};

std::string build_nli_prompt(const Claim& claim, const std::vector<const Passage*>& evidence,
                             const PromptTemplate& tmpl = PromptTemplate::builtin());
std::string build_nli_prompt(std::string_view hypothesis, const std::vector<const Passage*>& evidence,
                             const PromptTemplate& tmpl = PromptTemplate::builtin());

struct ParsedLabel {
  VerdictLabel label;
  ParserConfidence confidence;
};

// `LABEL: X` on the first line is Exact; otherwise the earliest label phrase
// anywhere is Fuzzy; otherwise Undetermined/Fallback. A reply that mentions
// "partially supported" never yields Supported.
ParsedLabel parse_label(std::string_view raw);

struct VerifyOptions {
  gateway::GenerationParams params;
  const PromptTemplate* prompt = nullptr;
};

// Never throws for backend behaviour. Empty evidence short-circuits to
// Undetermined without calling the generator.
Verdict verify(const Claim& claim, const std::vector<retrieval::EvidenceHit>& evidence, const Document& doc,
               gateway::GenerationBackend& generator, const VerifyOptions& options = {});

}  // namespace verification
}  // namespace claimcheck
