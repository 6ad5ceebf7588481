#include "claimcheck/verification.hpp"

#include <array>
#include <map>

#include "claimcheck/error.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/resources.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

std::string_view to_string(VerdictLabel label) {
  switch (label) {
    case VerdictLabel::Supported: return "Supported";
    case VerdictLabel::PartiallySupported: return "PartiallySupported";
    case VerdictLabel::Contradicted: return "Contradicted";
    case VerdictLabel::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

std::optional<VerdictLabel> parse_verdict_label(std::string_view s) {
  for (VerdictLabel l : all_labels()) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

const std::vector<VerdictLabel>& all_labels() {
  static const std::vector<VerdictLabel> labels = {VerdictLabel::Supported, VerdictLabel::PartiallySupported,
                                                   VerdictLabel::Contradicted, VerdictLabel::Undetermined};
  return labels;
}

std::string_view to_string(ParserConfidence c) {
  switch (c) {
    case ParserConfidence::Exact: return "Exact";
    case ParserConfidence::Fuzzy: return "Fuzzy";
    case ParserConfidence::Fallback: return "Fallback";
  }
  return "Fallback";
}

ParserConfidence parse_parser_confidence(std::string_view s) {
  if (s == "Exact") return ParserConfidence::Exact;
  if (s == "Fuzzy") return ParserConfidence::Fuzzy;
  if (s == "Fallback") return ParserConfidence::Fallback;
  throw Error(ErrorCode::ParseError, "unknown parser confidence: " + std::string(s));
}

namespace verification {
namespace {

std::string strip_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

// Single left-to-right pass so placeholder text inside values is never expanded.
std::string render(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

bool boundary(std::string_view s, std::size_t pos) {
  return pos >= s.size() || !text::is_word_byte(static_cast<unsigned char>(s[pos]));
}

struct Phrase {
  std::string_view text;
  VerdictLabel label;
};

// Order matters: partial forms must be tried before "supported".
constexpr std::array<Phrase, 7> kPhrases{{
    {"partially supported", VerdictLabel::PartiallySupported},
    {"partially-supported", VerdictLabel::PartiallySupported},
    {"partially_supported", VerdictLabel::PartiallySupported},
    {"partiallysupported", VerdictLabel::PartiallySupported},
    {"supported", VerdictLabel::Supported},
    {"contradicted", VerdictLabel::Contradicted},
    {"undetermined", VerdictLabel::Undetermined},
}};

bool mentions_partial(std::string_view lower) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (lower.find(kPhrases[i].text) != std::string_view::npos) return true;
  }
  return false;
}

std::optional<VerdictLabel> exact_label(std::string_view value) {
  value = text::trim(value);
  if (!value.empty() && value.back() == '.') value.remove_suffix(1);
  if (value == "Partially Supported") return VerdictLabel::PartiallySupported;
  return parse_verdict_label(value);
}

std::string first_line(std::string_view s) { return std::string(s.substr(0, s.find('\n'))); }

}  // namespace

PromptTemplate PromptTemplate::builtin() {
  return {std::string(resources::get("prompts/nli.v1.txt")),
          strip_trailing_newlines(resources::get("prompts/labels.v1.txt"))};
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
  PromptTemplate t = builtin();
  t.text = read_file(path);
  return t;
}

std::string build_nli_prompt(std::string_view hypothesis, const std::vector<const Passage*>& evidence,
                             const PromptTemplate& tmpl) {
  std::string premises;
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (i > 0) premises += '\n';
    premises += "[" + std::to_string(i + 1) + "] ";
    for (char c : evidence[i]->text) premises += (c == '\n' || c == '\r') ? ' ' : c;
  }
  if (premises.empty()) premises = "NONE";
  return render(tmpl.text, {{"premises", premises}, {"hypothesis", std::string(hypothesis)}, {"labels", tmpl.labels}});
}

std::string build_nli_prompt(const Claim& claim, const std::vector<const Passage*>& evidence,
                             const PromptTemplate& tmpl) {
  return build_nli_prompt(claim.text, evidence, tmpl);
}

ParsedLabel parse_label(std::string_view raw) {
  const std::string lower = text::to_lower(raw);
  ParsedLabel result{VerdictLabel::Undetermined, ParserConfidence::Fallback};

  const std::string head(text::trim(first_line(raw)));
  bool matched = false;
  if (head.rfind("LABEL:", 0) == 0) {
    if (auto label = exact_label(std::string_view(head).substr(6))) {
      result = {*label, ParserConfidence::Exact};
      matched = true;
    }
  }
  if (!matched) {
    for (std::size_t i = 0; i < lower.size() && !matched; ++i) {
      if (i > 0 && text::is_word_byte(static_cast<unsigned char>(lower[i - 1]))) continue;
      for (const Phrase& p : kPhrases) {
        if (lower.compare(i, p.text.size(), p.text) == 0 && boundary(lower, i + p.text.size())) {
          result = {p.label, ParserConfidence::Fuzzy};
          matched = true;
          break;
        }
      }
    }
  }
  if (result.label == VerdictLabel::Supported && mentions_partial(lower)) {
    result = {VerdictLabel::PartiallySupported, ParserConfidence::Fuzzy};
  }
  return result;
}

namespace {

std::string rationale_from(std::string_view raw, ParserConfidence confidence) {
  std::string_view rest = raw;
  if (confidence == ParserConfidence::Exact) {
    auto nl = rest.find('\n');
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
  }
  return std::string(text::trim(rest));
}

}  // namespace

Verdict verify(const Claim& claim, const std::vector<retrieval::EvidenceHit>& evidence, const Document& doc,
               gateway::GenerationBackend& generator, const VerifyOptions& options) {
  Verdict verdict;
  verdict.claim_id = claim.claim_id;

  std::vector<const Passage*> passages;
  for (const auto& hit : evidence) {
    const Passage* p = hit.ordinal < doc.passages.size() && doc.passages[hit.ordinal].passage_id == hit.passage_id
                           ? &doc.passages[hit.ordinal]
                           : doc.find_passage(hit.passage_id);
    if (p == nullptr) continue;
    passages.push_back(p);
    verdict.evidence.push_back(p->passage_id);
  }
  if (passages.empty()) {
    verdict.label = VerdictLabel::Undetermined;
    verdict.parser_confidence = ParserConfidence::Fallback;
    verdict.rationale = "No evidence passages were retrieved for this claim.";
    return verdict;
  }

  const PromptTemplate builtin = options.prompt ? PromptTemplate{} : PromptTemplate::builtin();
  const PromptTemplate& tmpl = options.prompt ? *options.prompt : builtin;
  const std::string prompt = build_nli_prompt(claim, passages, tmpl);
  verdict.backend_called = true;
  try {
    verdict.raw_response = generator.generate(prompt, options.params);
  } catch (const std::exception& e) {
    verdict.label = VerdictLabel::Undetermined;
    verdict.parser_confidence = ParserConfidence::Fallback;
    verdict.rationale = std::string("verifier backend error: ") + e.what();
    verdict.degraded = true;
    return verdict;
  }
  const ParsedLabel parsed = parse_label(verdict.raw_response);
  verdict.label = parsed.label;
  verdict.parser_confidence = parsed.confidence;
  verdict.rationale = rationale_from(verdict.raw_response, parsed.confidence);
  return verdict;
}

}  // namespace verification
}  // namespace claimcheck
