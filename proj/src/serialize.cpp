#include "claimcheck/serialize.hpp"

#include <algorithm>

#include "claimcheck/error.hpp"

namespace claimcheck {

void to_json(json& j, const Passage& p) {
  j = json{{"passage_id", p.passage_id}, {"text", p.text},           {"char_start", p.char_start},
           {"char_end", p.char_end},     {"ordinal", p.ordinal},     {"token_start", p.token_start},
           {"token_end", p.token_end}};
}

void from_json(const json& j, Passage& p) {
  j.at("passage_id").get_to(p.passage_id);
  j.at("text").get_to(p.text);
  j.at("char_start").get_to(p.char_start);
  j.at("char_end").get_to(p.char_end);
  j.at("ordinal").get_to(p.ordinal);
  p.token_start = j.value("token_start", std::size_t{0});
  p.token_end = j.value("token_end", std::size_t{0});
}

void to_json(json& j, const Document& d) {
  j = json{{"doc_id", d.doc_id}, {"title", d.title}, {"full_text", d.full_text}, {"passages", d.passages}};
}

void from_json(const json& j, Document& d) {
  j.at("doc_id").get_to(d.doc_id);
  d.title = j.value("title", std::string{});
  j.at("full_text").get_to(d.full_text);
  j.at("passages").get_to(d.passages);
}

void to_json(json& j, const Sentence& s) {
  j = json{{"sentence_id", s.sentence_id}, {"text", s.text}, {"char_start", s.char_start}, {"char_end", s.char_end}};
}

void from_json(const json& j, Sentence& s) {
  j.at("sentence_id").get_to(s.sentence_id);
  j.at("text").get_to(s.text);
  j.at("char_start").get_to(s.char_start);
  j.at("char_end").get_to(s.char_end);
}

void to_json(json& j, const Review& r) {
  j = json{{"review_id", r.review_id}, {"paper_id", r.paper_id}, {"raw_text", r.raw_text}, {"sentences", r.sentences}};
}

void from_json(const json& j, Review& r) {
  j.at("review_id").get_to(r.review_id);
  r.paper_id = j.value("paper_id", std::string{});
  j.at("raw_text").get_to(r.raw_text);
  j.at("sentences").get_to(r.sentences);
}

void to_json(json& j, const Claim& c) {
  j = json{{"claim_id", c.claim_id},
           {"review_id", c.review_id},
           {"text", c.text},
           {"source_sentence_id", c.source_sentence_id},
           {"source_span", {c.source_start, c.source_end}},
           {"checkworthiness", c.checkworthiness},
           {"provenance", to_string(c.provenance)},
           {"degraded", c.degraded}};
}

void from_json(const json& j, Claim& c) {
  j.at("claim_id").get_to(c.claim_id);
  j.at("review_id").get_to(c.review_id);
  j.at("text").get_to(c.text);
  j.at("source_sentence_id").get_to(c.source_sentence_id);
  const json& span = j.at("source_span");
  c.source_start = span.at(0).get<std::size_t>();
  c.source_end = span.at(1).get<std::size_t>();
  j.at("checkworthiness").get_to(c.checkworthiness);
  c.provenance = parse_provenance(j.at("provenance").get<std::string>());
  c.degraded = j.value("degraded", false);
}

void to_json(json& j, const Verdict& v) {
  j = json{{"claim_id", v.claim_id},
           {"label", to_string(v.label)},
           {"rationale", v.rationale},
           {"evidence", v.evidence},
           {"raw_response", v.raw_response},
           {"parser_confidence", to_string(v.parser_confidence)},
           {"backend_called", v.backend_called},
           {"degraded", v.degraded}};
}

void from_json(const json& j, Verdict& v) {
  j.at("claim_id").get_to(v.claim_id);
  const auto label_text = j.at("label").get<std::string>();
  auto label = parse_verdict_label(label_text);
  if (!label) throw Error(ErrorCode::UnknownLabel, label_text);
  v.label = *label;
  v.rationale = j.value("rationale", std::string{});
  j.at("evidence").get_to(v.evidence);
  v.raw_response = j.value("raw_response", std::string{});
  v.parser_confidence = parse_parser_confidence(j.at("parser_confidence").get<std::string>());
  v.backend_called = j.value("backend_called", false);
  v.degraded = j.value("degraded", false);
}

namespace retrieval {

void to_json(json& j, const EvidenceHit& h) {
  j = json{{"passage_id", h.passage_id}, {"ordinal", h.ordinal}, {"score", h.score},
           {"rank", h.rank},             {"stage", to_string(h.stage)}};
  if (h.first_stage_score) j["first_stage_score"] = *h.first_stage_score;
}

void from_json(const json& j, EvidenceHit& h) {
  j.at("passage_id").get_to(h.passage_id);
  j.at("ordinal").get_to(h.ordinal);
  j.at("score").get_to(h.score);
  j.at("rank").get_to(h.rank);
  h.stage = parse_stage(j.at("stage").get<std::string>());
  if (j.contains("first_stage_score")) h.first_stage_score = j.at("first_stage_score").get<double>();
}

void to_json(json& j, const RetrievalStrategy& s) {
  j = json{{"kind", to_string(s.kind)}, {"candidate_k", s.candidate_k}, {"final_k", s.final_k}};
}

}  // namespace retrieval

void to_json(json& j, const ClaimEvidence& e) {
  j = json{{"claim_id", e.claim_id},
           {"hits", e.hits},
           {"candidates_considered", e.candidates_considered},
           {"degraded", e.degraded}};
}

void from_json(const json& j, ClaimEvidence& e) {
  j.at("claim_id").get_to(e.claim_id);
  j.at("hits").get_to(e.hits);
  e.candidates_considered = j.value("candidates_considered", std::size_t{0});
  e.degraded = j.value("degraded", false);
}

void to_json(json& j, const ResultBundle& b) {
  j = json{{"schema_version", kSchemaVersion}, {"document", b.document}, {"reviews", b.reviews},
           {"claims", b.claims},               {"evidence", b.evidence}, {"verdicts", b.verdicts}};
}

void from_json(const json& j, ResultBundle& b) {
  const int version = j.value("schema_version", 0);
  if (version != kSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported schema_version " + std::to_string(version));
  }
  j.at("document").get_to(b.document);
  j.at("reviews").get_to(b.reviews);
  j.at("claims").get_to(b.claims);
  j.at("evidence").get_to(b.evidence);
  j.at("verdicts").get_to(b.verdicts);
}

void to_json(json& j, const ChunkConfig& c) {
  j = json{{"size_tokens", c.size_tokens}, {"overlap_tokens", c.overlap_tokens}, {"tokenizer", c.tokenizer}};
}

void to_json(json& j, const PipelineConfig& c) {
  j = json{{"chunk", c.chunk},
           {"strategy", c.strategy},
           {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
           {"threshold", c.threshold},
           {"model_checkworthiness", c.model_checkworthiness},
           {"parallelism", c.parallelism},
           {"generation", {{"temperature", c.generation.temperature}, {"max_tokens", c.generation.max_tokens}}}};
  if (c.generation.seed) j["generation"]["seed"] = *c.generation.seed;
}

namespace {

std::size_t count_field(const json& j, const char* name) {
  const json& v = j.at(name);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double real_field(const json& j, const char* name) {
  const json& v = j.at(name);
  if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be a number");
  return v.get<double>();
}

}  // namespace

void apply_overrides(PipelineConfig& config, const json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw Error(ErrorCode::InvalidConfig, "config overrides must be an object");
  static const std::vector<std::string> known = {"size_tokens", "overlap_tokens", "strategy",    "candidate_k",
                                                 "final_k",     "k1",             "b",           "threshold",
                                                 "parallelism", "model_checkworthiness"};
  for (const auto& [key, value] : overrides.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown config key: " + key);
    }
  }
  PipelineConfig next = config;
  if (overrides.contains("size_tokens")) next.chunk.size_tokens = count_field(overrides, "size_tokens");
  if (overrides.contains("overlap_tokens")) next.chunk.overlap_tokens = count_field(overrides, "overlap_tokens");
  if (overrides.contains("strategy")) {
    const json& v = overrides.at("strategy");
    if (!v.is_string()) throw Error(ErrorCode::InvalidConfig, "strategy must be a string");
    next.strategy.kind = retrieval::parse_strategy(v.get<std::string>());
  }
  if (overrides.contains("candidate_k")) next.strategy.candidate_k = count_field(overrides, "candidate_k");
  if (overrides.contains("final_k")) next.strategy.final_k = count_field(overrides, "final_k");
  if (overrides.contains("k1")) next.bm25.k1 = real_field(overrides, "k1");
  if (overrides.contains("b")) next.bm25.b = real_field(overrides, "b");
  if (overrides.contains("threshold")) next.threshold = real_field(overrides, "threshold");
  if (overrides.contains("parallelism")) next.parallelism = count_field(overrides, "parallelism");
  if (overrides.contains("model_checkworthiness")) {
    const json& v = overrides.at("model_checkworthiness");
    if (!v.is_boolean()) throw Error(ErrorCode::InvalidConfig, "model_checkworthiness must be a boolean");
    next.model_checkworthiness = v.get<bool>();
  }
  next.validate();
  config = next;
}

std::string results_jsonl(const ResultBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < bundle.claims.size(); ++i) {
    json line = {{"claim", bundle.claims[i]},
                 {"evidence", i < bundle.evidence.size() ? json(bundle.evidence[i]) : json(nullptr)},
                 {"verdict", i < bundle.verdicts.size() ? json(bundle.verdicts[i]) : json(nullptr)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace claimcheck
