#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimcheck/gateway.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/retrieval.hpp"
#include "claimcheck/verification.hpp"

namespace claimcheck::evaluation {

struct BenchmarkInstance {
  std::string instance_id;
  std::string claim_text;
  VerdictLabel gold_label = VerdictLabel::Supported;
  std::optional<std::string> origin_passage_id;  // CMC only
  std::string paper_id;
  std::optional<std::string> dialog_context;     // RRC only
};

struct AtomicUnit {
  std::string text;
  std::size_t source_ordinal = 0;  // passage the generator was shown
};

// Asks the generator for the atomic factual statements of every passage.
// Duplicate units (same text) are kept once.
std::vector<AtomicUnit> extract_atomic_units(const Document& doc, gateway::GenerationBackend& generator,
                                             const gateway::GenerationParams& params = {});

// Passage with the largest share of the unit's content terms. Ties prefer
// `preferred_ordinal`, then the lowest ordinal.
std::size_t locate_origin(std::string_view unit, const Document& doc, std::size_t preferred_ordinal);

// k distinct indices from [0, n) drawn uniformly with a seeded generator,
// returned in draw order. Stable across platforms.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

struct CmcBuild {
  std::vector<BenchmarkInstance> instances;
  std::size_t units_extracted = 0;
  // Fewer units than requested; every unit was kept.
  bool insufficient_units = false;
};

CmcBuild build_cmc(const Document& doc, gateway::GenerationBackend& generator, std::size_t n_per_paper,
                   std::uint64_t seed);

// JSONL with {instance_id?, paper_id, claim, label, dialog?}. Throws
// ParseError or UnknownLabel with the 1-based line number in the message.
std::vector<BenchmarkInstance> load_rrc(const std::filesystem::path& path);
std::vector<BenchmarkInstance> parse_rrc(std::string_view jsonl);

// Either benchmark kind, as written by write_benchmark().
std::vector<BenchmarkInstance> load_benchmark(const std::filesystem::path& path);
std::string write_benchmark(const std::vector<BenchmarkInstance>& instances);

double accuracy(const std::vector<VerdictLabel>& predictions, const std::vector<VerdictLabel>& golds);

// Fraction of instances whose origin passage is among the first k hits.
double retrieval_recall_at_k(const std::vector<std::vector<retrieval::EvidenceHit>>& hits,
                             const std::vector<BenchmarkInstance>& instances, std::size_t k = 3);

struct SweepBackend {
  std::string name;
  std::shared_ptr<gateway::GenerationBackend> generator;
};

struct SweepConfig {
  std::vector<retrieval::StrategyKind> strategies = retrieval::all_strategies();
  std::size_t candidate_k = 20;
  std::size_t final_k = 3;
  retrieval::Bm25Params bm25;
  std::shared_ptr<gateway::EmbeddingBackend> embedder;
  std::shared_ptr<gateway::PairScorerBackend> scorer;
  gateway::GenerationParams generation;
  std::size_t parallelism = 1;
};

struct MetricsRow {
  std::string model_name;
  retrieval::RetrievalStrategy strategy;
  double accuracy = 0.0;
  std::optional<double> recall_at_k;
  std::size_t n_instances = 0;
};

struct CellFailure {
  std::string model_name;
  retrieval::StrategyKind strategy;
  std::string message;
};

struct SweepResult {
  std::vector<MetricsRow> rows;  // model outer, strategy inner
  std::vector<CellFailure> failures;
};

// Documents are keyed by paper_id and must already be segmented.
SweepResult run_sweep(const std::vector<BenchmarkInstance>& instances, const std::map<std::string, Document>& papers,
                      const std::vector<SweepBackend>& backends, const SweepConfig& config);

// model,strategy,acc,recall,n with an empty recall cell when absent.
std::string to_csv(const std::vector<MetricsRow>& rows);
std::string to_json(const SweepResult& result);

}  // namespace claimcheck::evaluation
