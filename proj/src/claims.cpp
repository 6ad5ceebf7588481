#include "claimcheck/claims.hpp"

#include <algorithm>

#include "claimcheck/error.hpp"
#include "claimcheck/resources.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

std::string_view to_string(Provenance p) { return p == Provenance::RuleBased ? "RuleBased" : "ModelBacked"; }

Provenance parse_provenance(std::string_view s) {
  if (s == "RuleBased") return Provenance::RuleBased;
  if (s == "ModelBacked") return Provenance::ModelBacked;
  throw Error(ErrorCode::ParseError, "unknown provenance: " + std::string(s));
}

namespace claims {
namespace {

const text::Lexicon& opinion_words() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/opinion.v1.txt");
  return lex;
}
const text::Lexicon& imperative_words() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/imperatives.v1.txt");
  return lex;
}
const text::Lexicon& interrogative_words() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/interrogatives.v1.txt");
  return lex;
}
const text::Lexicon& clause_verbs() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/clause_verbs.v1.txt");
  return lex;
}
const text::Lexicon& reference_phrases() {
  static const text::Lexicon lex = text::Lexicon::load("lexicon/references.v1.txt");
  return lex;
}

struct HedgeRule {
  std::string phrase;
  std::string replacement;
};

const std::vector<HedgeRule>& hedge_rules() {
  static const std::vector<HedgeRule> rules = [] {
    std::vector<HedgeRule> out;
    for (const auto& line : resources::lexicon_lines("lexicon/hedges.v1.txt")) {
      auto arrow = line.find("=>");
      if (arrow == std::string::npos) {
        out.push_back({text::to_lower(line), {}});
      } else {
        out.push_back({text::to_lower(std::string(text::trim(std::string_view(line).substr(0, arrow)))),
                       std::string(text::trim(std::string_view(line).substr(arrow + 2)))});
      }
    }
    return out;
  }();
  return rules;
}

const std::vector<std::string_view>& referent_nouns() {
  static const std::vector<std::string_view> nouns = {
      "section", "sec",   "table",       "tab",       "figure",     "fig",  "equation", "eq",  "eqs",
      "lemma",   "theorem", "thm",       "appendix",  "algorithm", "alg", "proposition", "corollary", "definition"};
  return nouns;
}

bool word_boundary_before(std::string_view s, std::size_t pos) {
  return pos == 0 || !text::is_word_byte(static_cast<unsigned char>(s[pos - 1]));
}
bool word_boundary_after(std::string_view s, std::size_t pos) {
  return pos >= s.size() || !text::is_word_byte(static_cast<unsigned char>(s[pos]));
}

// Case-insensitive, word-bounded search for a lowercase phrase.
std::size_t find_phrase(std::string_view haystack_lower, std::string_view phrase, std::size_t from = 0) {
  while (true) {
    auto pos = haystack_lower.find(phrase, from);
    if (pos == std::string_view::npos) return pos;
    if (word_boundary_before(haystack_lower, pos) && word_boundary_after(haystack_lower, pos + phrase.size())) return pos;
    from = pos + 1;
  }
}

bool has_clause_verb(std::string_view segment) {
  for (const auto& t : text::tokenize(segment)) {
    if (clause_verbs().contains(t)) return true;
  }
  return false;
}

void capitalize_first(std::string& s) {
  for (char& c : s) {
    if (text::is_lower(static_cast<unsigned char>(c))) {
      c = static_cast<char>(c - 'a' + 'A');
      return;
    }
    if (text::is_word_byte(static_cast<unsigned char>(c))) return;
  }
}

// Collapses runs of spaces, drops spaces before punctuation and leading
// separators left behind by deletions.
std::string tidy(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool space = text::is_space(static_cast<unsigned char>(c));
    if (space) {
      if (!out.empty() && out.back() != ' ') out += ' ';
      continue;
    }
    if ((c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?') && !out.empty() && out.back() == ' ') {
      out.pop_back();
    }
    out += c;
  }
  std::size_t b = 0;
  while (b < out.size() && (out[b] == ' ' || out[b] == ',' || out[b] == ';' || out[b] == ':')) ++b;
  out.erase(0, b);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool ends_with_terminal(std::string_view s) {
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

std::string substitute(std::string tmpl, std::string_view key, std::string_view value) {
  auto pos = tmpl.find(key);
  if (pos != std::string::npos) tmpl.replace(pos, key.size(), value);
  return tmpl;
}

// Lines of the form "- text", "* text" or "1. text".
std::vector<std::string> parse_list_reply(std::string_view reply) {
  std::vector<std::string> out;
  while (!reply.empty()) {
    auto nl = reply.find('\n');
    std::string_view line = text::trim(reply.substr(0, nl));
    reply = nl == std::string_view::npos ? std::string_view{} : reply.substr(nl + 1);
    std::string_view item;
    if (line.size() > 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') {
      item = line.substr(2);
    } else {
      std::size_t d = 0;
      while (d < line.size() && text::is_digit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') && line[d + 1] == ' ') item = line.substr(d + 2);
    }
    item = text::trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

}  // namespace

std::vector<std::string> split_conjunctions(std::string_view sentence) {
  std::string_view trimmed = text::trim(sentence);
  if (trimmed.empty()) return {};
  std::string terminal;
  std::string_view body = trimmed;
  while (!body.empty() && (body.back() == '.' || body.back() == '!' || body.back() == '?')) {
    terminal.insert(terminal.begin(), body.back());
    body.remove_suffix(1);
  }

  std::vector<std::string> pieces;
  std::size_t part_start = 0;
  auto split_part = [&](std::string_view part) {
    const std::string lower = text::to_lower(part);
    std::size_t segment_start = 0;
    std::size_t search = 0;
    while (true) {
      std::size_t best = std::string::npos;
      std::size_t best_len = 0;
      for (std::string_view conj : {"and", "but"}) {
        auto pos = find_phrase(lower, conj, search);
        if (pos != std::string::npos && pos < best) {
          best = pos;
          best_len = conj.size();
        }
      }
      if (best == std::string::npos) break;
      // Parenthesised asides are never split.
      const auto opens = std::count(part.begin(), part.begin() + static_cast<std::ptrdiff_t>(best), '(');
      const auto closes = std::count(part.begin(), part.begin() + static_cast<std::ptrdiff_t>(best), ')');
      std::string_view left = part.substr(segment_start, best - segment_start);
      std::string_view right = part.substr(best + best_len);
      if (opens == closes && text::tokenize(right).size() >= 2 && has_clause_verb(left) && has_clause_verb(right)) {
        pieces.emplace_back(left);
        segment_start = best + best_len;
      }
      search = best + best_len;
    }
    pieces.emplace_back(part.substr(segment_start));
  };
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ';') {
      split_part(body.substr(part_start, i - part_start));
      part_start = i + 1;
    }
  }

  std::vector<std::string> out;
  for (auto& piece : pieces) {
    std::string t = tidy(piece);
    while (!t.empty() && (t.back() == ',' || t.back() == ' ')) t.pop_back();
    if (text::tokenize(t).empty()) continue;
    out.push_back(std::move(t));
  }
  if (out.size() <= 1) return {std::string(trimmed)};
  for (auto& t : out) {
    capitalize_first(t);
    t += terminal.empty() ? "." : terminal;
  }
  return out;
}

Candidates decompose_sentence(std::string_view sentence, const std::vector<std::string>&,
                              gateway::GenerationBackend* generator) {
  if (text::trim(sentence).empty()) throw Error(ErrorCode::EmptyInput, "cannot decompose an empty sentence");
  Candidates result;
  const auto rule = split_conjunctions(sentence);
  if (generator == nullptr) {
    result.texts = rule;
    return result;
  }
  const std::string tmpl(resources::get("prompts/decompose.v1.txt"));
  try {
    for (const auto& candidate : rule) {
      const std::string reply = generator->generate(substitute(tmpl, "{statement}", candidate), {});
      auto items = parse_list_reply(reply);
      if (items.empty()) {
        result.texts.push_back(candidate);
        continue;
      }
      if (items.size() != 1 || items.front() != candidate) result.model_split = true;
      for (auto& item : items) result.texts.push_back(std::move(item));
    }
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
    result.texts = {std::string(text::trim(sentence))};
    result.degraded = true;
    result.model_split = false;
  }
  return result;
}

bool is_interrogative(std::string_view candidate) {
  std::string_view t = text::trim(candidate);
  while (!t.empty() && (t.back() == '"' || t.back() == '\'' || t.back() == ')')) t.remove_suffix(1);
  if (!t.empty() && t.back() == '?') return true;
  const auto tokens = text::tokenize(t);
  return !tokens.empty() && interrogative_words().contains(tokens.front());
}

ScoreBreakdown explain_checkworthy(std::string_view candidate) {
  ScoreBreakdown r;
  const std::string_view t = text::trim(candidate);
  const auto tokens = text::tokenize(t);

  for (const auto& tok : tokens) {
    if (std::any_of(tok.begin(), tok.end(), [](char c) { return text::is_digit(static_cast<unsigned char>(c)); })) {
      r.concrete_referent = true;
    }
    for (auto noun : referent_nouns()) {
      if (tok == noun) r.concrete_referent = true;
    }
  }
  // Named methods: CamelCase or all-caps words.
  for (std::size_t i = 0; i < t.size();) {
    if (!text::is_word_byte(static_cast<unsigned char>(t[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t upper = 0;
    bool inner_upper = false;
    bool any_lower = false;
    while (j < t.size() && text::is_word_byte(static_cast<unsigned char>(t[j]))) {
      const auto c = static_cast<unsigned char>(t[j]);
      if (text::is_upper(c)) {
        ++upper;
        if (j > i) inner_upper = true;
      }
      if (text::is_lower(c)) any_lower = true;
      ++j;
    }
    if ((inner_upper && any_lower) || (upper >= 2 && !any_lower)) r.concrete_referent = true;
    i = j;
  }
  // Quoted phrase.
  for (std::string_view q : {"\"", "\xE2\x80\x9C"}) {
    auto open = t.find(q);
    if (open == std::string_view::npos) continue;
    std::string_view close_mark = q == "\"" ? "\"" : "\xE2\x80\x9D";
    auto close = t.find(close_mark, open + q.size());
    if (close != std::string_view::npos && !text::tokenize(t.substr(open, close - open)).empty()) {
      r.concrete_referent = true;
    }
  }

  const auto content = text::content_terms(t);
  std::size_t opinion = 0;
  for (const auto& w : content) opinion += opinion_words().contains(w) ? 1 : 0;
  r.opinion_dominated = !r.concrete_referent && opinion > 0 && opinion * 2 >= content.size();

  r.interrogative = is_interrogative(t);
  if (!tokens.empty() && imperative_words().contains(tokens.front())) r.imperative = true;
  const std::string lower = text::to_lower(t);
  for (std::string_view phrase : {"you should", "you must", "you need to"}) {
    if (find_phrase(lower, phrase) != std::string::npos) r.imperative = true;
  }

  double score = 0.5;
  if (r.concrete_referent) score += 0.25;
  if (r.opinion_dominated) score -= 0.4;
  if (r.interrogative || r.imperative) score -= 0.5;
  r.score = std::clamp(score, 0.0, 1.0);
  return r;
}

double classify_checkworthy(std::string_view candidate) { return explain_checkworthy(candidate).score; }

double ModelScorer::score(std::string_view candidate) {
  const std::string prompt = substitute(std::string(resources::get("prompts/checkworthy.v1.txt")), "{statement}", candidate);
  try {
    if (auto s = gateway::parse_score_line(generator_->generate(prompt, {}))) return std::clamp(*s, 0.0, 1.0);
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
  }
  return classify_checkworthy(candidate);
}

std::string remove_hedges(std::string_view candidate) {
  std::string current(text::trim(candidate));
  for (const auto& rule : hedge_rules()) {
    std::string lower = text::to_lower(current);
    std::size_t from = 0;
    while (true) {
      auto pos = find_phrase(lower, rule.phrase, from);
      if (pos == std::string::npos) break;
      current.replace(pos, rule.phrase.size(), rule.replacement);
      lower = text::to_lower(current);
      from = pos + rule.replacement.size();
    }
  }
  std::string out = tidy(current);
  if (text::tokenize(out).empty()) return std::string(text::trim(candidate));
  capitalize_first(out);
  return out;
}

bool needs_context(std::string_view candidate) {
  const std::string lower = text::to_lower(candidate);
  for (const auto& phrase : reference_phrases().entries()) {
    if (find_phrase(lower, phrase) != std::string::npos) return true;
  }
  return false;
}

std::string build_decontextualization_prompt(std::string_view claim, const std::vector<std::string>& context) {
  std::string ctx;
  for (const auto& c : context) {
    ctx += c;
    ctx += '\n';
  }
  if (ctx.empty()) ctx = "(none)\n";
  ctx.pop_back();
  std::string prompt(resources::get("prompts/decontextualize.v1.txt"));
  prompt = substitute(std::move(prompt), "{context}", ctx);
  return substitute(std::move(prompt), "{claim}", claim);
}

NormalizedClaim normalize_claim(std::string_view candidate, const std::vector<std::string>& context,
                                gateway::GenerationBackend* generator) {
  NormalizedClaim result;
  std::string t = remove_hedges(candidate);
  if (!t.empty() && t.back() == '?') t.back() = '.';
  if (!ends_with_terminal(t)) t += '.';
  result.text = t;
  if (generator == nullptr || !needs_context(t)) return result;

  try {
    const std::string reply = generator->generate(build_decontextualization_prompt(t, context), {});
    std::string_view rest = reply;
    while (!rest.empty()) {
      auto nl = rest.find('\n');
      std::string_view line = text::trim(rest.substr(0, nl));
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
      if (line.size() <= 6 || !text::iequals(line.substr(0, 6), "claim:")) continue;
      std::string rewritten = tidy(text::trim(line.substr(6)));
      if (text::tokenize(rewritten).empty()) break;
      if (rewritten.back() == '?') rewritten.back() = '.';
      if (!ends_with_terminal(rewritten)) rewritten += '.';
      result.model_rewrite = rewritten != result.text;
      result.text = std::move(rewritten);
      break;
    }
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
    result.degraded = true;
  }
  return result;
}

ExtractionResult extract_claims(const Review& review, gateway::GenerationBackend* generator,
                                const ExtractOptions& options) {
  if (options.threshold < 0.0 || options.threshold > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0, 1]");
  }
  RuleScorer rule_scorer;
  CheckworthinessScorer& scorer = options.scorer ? *options.scorer : rule_scorer;

  ExtractionResult result;
  std::vector<std::string> context;
  for (const auto& sentence : review.sentences) {
    Candidates candidates = decompose_sentence(sentence.text, context, generator);
    bool sentence_degraded = candidates.degraded;
    for (const auto& candidate : candidates.texts) {
      if (is_interrogative(candidate)) continue;
      const double score = scorer.score(candidate);
      if (score < options.threshold) continue;
      NormalizedClaim normalized = normalize_claim(candidate, context, generator);
      if (normalized.text.empty()) continue;
      sentence_degraded = sentence_degraded || normalized.degraded;

      Claim claim;
      claim.claim_id = review.review_id + "-c" + std::to_string(result.claims.size() + 1);
      claim.review_id = review.review_id;
      claim.text = std::move(normalized.text);
      claim.source_sentence_id = sentence.sentence_id;
      claim.source_start = sentence.char_start;
      claim.source_end = sentence.char_end;
      claim.checkworthiness = std::clamp(score, 0.0, 1.0);
      const bool model_used = scorer.provenance() == Provenance::ModelBacked || candidates.model_split ||
                              normalized.model_rewrite;
      claim.provenance = model_used ? Provenance::ModelBacked : Provenance::RuleBased;
      claim.degraded = candidates.degraded || normalized.degraded;
      result.claims.push_back(std::move(claim));
    }
    if (sentence_degraded) ++result.degraded_sentences;
    context.push_back(sentence.text);
  }
  return result;
}

}  // namespace claims
}  // namespace claimcheck
