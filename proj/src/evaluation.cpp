#include "claimcheck/evaluation.hpp"

#include <cstdio>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <unordered_set>

#include "claimcheck/error.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/resources.hpp"
#include "claimcheck/serialize.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::evaluation {
namespace {

std::string render_atomic_prompt(std::string_view passage) {
  std::string tmpl(resources::get("prompts/atomic_units.v1.txt"));
  const std::string placeholder = "{passage}";
  const auto at = tmpl.find(placeholder);
  if (at == std::string::npos) return tmpl;
  return tmpl.substr(0, at) + std::string(passage) + tmpl.substr(at + placeholder.size());
}

std::vector<std::string> bullet_lines(std::string_view reply) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    auto line = text::trim(reply.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.size() < 2) continue;
    if ((line[0] == '-' || line[0] == '*') && text::is_space(static_cast<unsigned char>(line[1]))) {
      auto item = text::trim(line.substr(2));
      if (!item.empty()) out.emplace_back(item);
    }
  }
  return out;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string numbered(std::string_view prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return std::string(prefix) + buf;
}

// Uniform draw from [0, bound) with rejection, independent of the standard
// library's distribution implementations.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (std::numeric_limits<std::uint64_t>::max() - bound + 1) % bound;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

std::optional<VerdictLabel> parse_benchmark_label(std::string_view s) {
  std::string compact;
  for (char c : s) {
    if (!text::is_space(static_cast<unsigned char>(c)) && c != '_' && c != '-') compact += c;
  }
  for (VerdictLabel l : all_labels()) {
    if (text::iequals(compact, to_string(l))) return l;
  }
  return std::nullopt;
}

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::vector<BenchmarkInstance> parse_lines(std::string_view jsonl, bool keep_origin) {
  std::vector<BenchmarkInstance> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = text::trim(jsonl.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, line_prefix(line_no) + e.what());
    }
    if (!row.is_object()) throw Error(ErrorCode::ParseError, line_prefix(line_no) + "expected a JSON object");
    auto string_field = [&](const char* name, bool required) -> std::optional<std::string> {
      if (!row.contains(name) || row.at(name).is_null()) {
        if (required) throw Error(ErrorCode::ParseError, line_prefix(line_no) + "missing field '" + name + "'");
        return std::nullopt;
      }
      if (!row.at(name).is_string()) {
        throw Error(ErrorCode::ParseError, line_prefix(line_no) + "field '" + name + "' must be a string");
      }
      return row.at(name).get<std::string>();
    };
    BenchmarkInstance inst;
    inst.claim_text = *string_field("claim", true);
    const std::string label = *string_field("label", true);
    auto parsed = parse_benchmark_label(label);
    if (!parsed) throw Error(ErrorCode::UnknownLabel, line_prefix(line_no) + "label '" + label + "'");
    inst.gold_label = *parsed;
    inst.paper_id = *string_field("paper_id", true);
    inst.instance_id = string_field("instance_id", false).value_or(numbered("rrc-", out.size() + 1, 4));
    inst.dialog_context = string_field("dialog", false);
    if (keep_origin) inst.origin_passage_id = string_field("origin_passage_id", false);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace

std::vector<AtomicUnit> extract_atomic_units(const Document& doc, gateway::GenerationBackend& generator,
                                             const gateway::GenerationParams& params) {
  std::vector<AtomicUnit> units;
  std::unordered_set<std::string> seen;
  for (const auto& passage : doc.passages) {
    const std::string reply = generator.generate(render_atomic_prompt(passage.text), params);
    for (auto& line : bullet_lines(reply)) {
      if (seen.insert(line).second) units.push_back({std::move(line), passage.ordinal});
    }
  }
  return units;
}

std::size_t locate_origin(std::string_view unit, const Document& doc, std::size_t preferred_ordinal) {
  const auto terms = text::content_terms(unit);
  const std::set<std::string> unit_terms(terms.begin(), terms.end());
  if (unit_terms.empty() || doc.passages.empty()) return preferred_ordinal;
  std::size_t best = preferred_ordinal < doc.passages.size() ? preferred_ordinal : 0;
  std::size_t best_overlap = 0;
  bool have_best = false;
  for (const auto& passage : doc.passages) {
    const auto pt = text::tokenize(passage.text);
    const std::unordered_set<std::string> passage_terms(pt.begin(), pt.end());
    std::size_t overlap = 0;
    for (const auto& t : unit_terms) overlap += passage_terms.count(t);
    const bool better = !have_best || overlap > best_overlap ||
                        (overlap == best_overlap && passage.ordinal == preferred_ordinal && best != preferred_ordinal);
    if (better) {
      best = passage.ordinal;
      best_overlap = overlap;
      have_best = true;
    }
  }
  return best;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  k = std::min(k, n);
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

CmcBuild build_cmc(const Document& doc, gateway::GenerationBackend& generator, std::size_t n_per_paper,
                   std::uint64_t seed) {
  if (doc.passages.empty()) throw Error(ErrorCode::EmptyCorpus, "document " + doc.doc_id + " has no passages");
  const auto units = extract_atomic_units(doc, generator);
  CmcBuild build;
  build.units_extracted = units.size();
  std::vector<std::size_t> chosen;
  if (units.size() < n_per_paper) {
    build.insufficient_units = true;
    for (std::size_t i = 0; i < units.size(); ++i) chosen.push_back(i);
  } else {
    chosen = sample_indices(units.size(), n_per_paper, seed);
  }
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const AtomicUnit& unit = units[chosen[i]];
    BenchmarkInstance inst;
    inst.instance_id = numbered(doc.doc_id + "-cmc-", i + 1, 3);
    inst.claim_text = unit.text;
    inst.gold_label = VerdictLabel::Supported;
    inst.origin_passage_id = doc.passages[locate_origin(unit.text, doc, unit.source_ordinal)].passage_id;
    inst.paper_id = doc.doc_id;
    build.instances.push_back(std::move(inst));
  }
  return build;
}

std::vector<BenchmarkInstance> parse_rrc(std::string_view jsonl) { return parse_lines(jsonl, false); }

std::vector<BenchmarkInstance> load_rrc(const std::filesystem::path& path) { return parse_rrc(read_file(path)); }

std::vector<BenchmarkInstance> load_benchmark(const std::filesystem::path& path) {
  return parse_lines(read_file(path), true);
}

std::string write_benchmark(const std::vector<BenchmarkInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    json row = {{"instance_id", inst.instance_id},
                {"paper_id", inst.paper_id},
                {"claim", inst.claim_text},
                {"label", to_string(inst.gold_label)}};
    if (inst.origin_passage_id) row["origin_passage_id"] = *inst.origin_passage_id;
    if (inst.dialog_context) row["dialog"] = *inst.dialog_context;
    out += row.dump();
    out += '\n';
  }
  return out;
}

double accuracy(const std::vector<VerdictLabel>& predictions, const std::vector<VerdictLabel>& golds) {
  if (predictions.size() != golds.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(golds.size()) + " gold labels");
  }
  if (golds.empty()) throw Error(ErrorCode::EmptyInput, "accuracy over zero instances");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) correct += predictions[i] == golds[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(golds.size());
}

double retrieval_recall_at_k(const std::vector<std::vector<retrieval::EvidenceHit>>& hits,
                             const std::vector<BenchmarkInstance>& instances, std::size_t k) {
  if (hits.size() != instances.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(hits.size()) + " hit lists for " +
                                               std::to_string(instances.size()) + " instances");
  }
  if (instances.empty()) throw Error(ErrorCode::EmptyInput, "recall over zero instances");
  std::size_t found = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!instances[i].origin_passage_id) {
      throw Error(ErrorCode::MissingOrigin, "instance " + instances[i].instance_id + " has no origin passage");
    }
    const std::size_t limit = std::min(k, hits[i].size());
    for (std::size_t r = 0; r < limit; ++r) {
      if (hits[i][r].passage_id == *instances[i].origin_passage_id) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) / static_cast<double>(instances.size());
}

SweepResult run_sweep(const std::vector<BenchmarkInstance>& instances, const std::map<std::string, Document>& papers,
                      const std::vector<SweepBackend>& backends, const SweepConfig& config) {
  using retrieval::StrategyKind;
  bool need_sparse = false;
  bool need_dense = false;
  for (StrategyKind k : config.strategies) {
    (k == StrategyKind::Bm25 || k == StrategyKind::SparseRerank ? need_sparse : need_dense) = true;
  }

  // Indexes are built once per paper and shared by every cell.
  struct PaperIndexes {
    retrieval::IndexedDocument indexed;
    std::string sparse_error;
    std::string dense_error;
  };
  std::map<std::string, PaperIndexes> indexes;
  for (const auto& [paper_id, doc] : papers) {
    PaperIndexes& pi = indexes[paper_id];
    pi.indexed.doc = &doc;
    if (need_sparse) {
      try {
        pi.indexed.bm25 = std::make_shared<retrieval::Bm25Index>(retrieval::Bm25Index::build(doc.passages, config.bm25));
      } catch (const std::exception& e) {
        pi.sparse_error = e.what();
      }
    }
    if (need_dense) {
      try {
        if (!config.embedder) throw Error(ErrorCode::MissingIndex, "dense strategies need an embedding backend");
        pi.indexed.dense =
            std::make_shared<retrieval::DenseIndex>(retrieval::DenseIndex::build(doc.passages, *config.embedder));
      } catch (const std::exception& e) {
        pi.dense_error = e.what();
      }
    }
  }

  bool all_have_origin = !instances.empty();
  std::vector<VerdictLabel> golds;
  for (const auto& inst : instances) {
    all_have_origin = all_have_origin && inst.origin_passage_id.has_value();
    golds.push_back(inst.gold_label);
  }

  SweepResult result;
  const retrieval::Backends retrieval_backends{config.embedder.get(), config.scorer.get()};
  for (const auto& backend : backends) {
    for (StrategyKind kind : config.strategies) {
      retrieval::RetrievalStrategy strategy{kind, config.candidate_k, config.final_k};
      try {
        strategy.validate();
        if (!backend.generator) throw Error(ErrorCode::InvalidConfig, "backend " + backend.name + " has no generator");
        const bool sparse = kind == StrategyKind::Bm25 || kind == StrategyKind::SparseRerank;
        for (const auto& inst : instances) {
          auto it = indexes.find(inst.paper_id);
          if (it == indexes.end()) throw Error(ErrorCode::NotFound, "no document for paper " + inst.paper_id);
          const std::string& err = sparse ? it->second.sparse_error : it->second.dense_error;
          if (!err.empty()) throw Error(ErrorCode::MissingIndex, "paper " + inst.paper_id + ": " + err);
        }
        std::vector<std::vector<retrieval::EvidenceHit>> hits(instances.size());
        std::vector<VerdictLabel> predictions(instances.size(), VerdictLabel::Undetermined);
        verification::VerifyOptions options;
        options.params = config.generation;
        parallel_for(instances.size(), config.parallelism, [&](std::size_t i) {
          const BenchmarkInstance& inst = instances[i];
          const PaperIndexes& pi = indexes.at(inst.paper_id);
          try {
            hits[i] = retrieval::retrieve(inst.claim_text, pi.indexed, strategy, retrieval_backends).hits;
          } catch (const Error& e) {
            if (!e.is_backend_failure()) throw;
          }
          Claim claim;
          claim.claim_id = inst.instance_id;
          claim.text = inst.claim_text;
          predictions[i] = verification::verify(claim, hits[i], *pi.indexed.doc, *backend.generator, options).label;
        });
        MetricsRow row;
        row.model_name = backend.name;
        row.strategy = strategy;
        row.accuracy = accuracy(predictions, golds);
        if (all_have_origin) row.recall_at_k = retrieval_recall_at_k(hits, instances, config.final_k);
        row.n_instances = instances.size();
        result.rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        result.failures.push_back({backend.name, kind, e.what()});
      }
    }
  }
  return result;
}

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "model,strategy,acc,recall,n\n";
  for (const auto& row : rows) {
    out += row.model_name;
    out += ',';
    out += retrieval::to_string(row.strategy.kind);
    out += ',';
    out += format_fixed(row.accuracy);
    out += ',';
    if (row.recall_at_k) out += format_fixed(*row.recall_at_k);
    out += ',';
    out += std::to_string(row.n_instances);
    out += '\n';
  }
  return out;
}

std::string to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    rows.push_back({{"model", row.model_name},
                    {"strategy", retrieval::to_string(row.strategy.kind)},
                    {"candidate_k", row.strategy.candidate_k},
                    {"final_k", row.strategy.final_k},
                    {"acc", row.accuracy},
                    {"recall", row.recall_at_k ? json(*row.recall_at_k) : json(nullptr)},
                    {"n", row.n_instances}});
  }
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"model", f.model_name}, {"strategy", retrieval::to_string(f.strategy)}, {"error", f.message}});
  }
  json out = {{"schema_version", kSchemaVersion}, {"rows", rows}, {"failures", failures}};
  return out.dump(2) + "\n";
}

}  // namespace claimcheck::evaluation
