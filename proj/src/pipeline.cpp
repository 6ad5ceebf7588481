#include "claimcheck/pipeline.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "claimcheck/error.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

void PipelineConfig::validate() const {
  chunk.validate();
  strategy.validate();
  if (!(bm25.k1 > 0.0) || !(bm25.b >= 0.0 && bm25.b <= 1.0)) throw Error(ErrorCode::InvalidConfig, "bad BM25 parameters");
  if (threshold < 0.0 || threshold > 1.0) throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0, 1]");
  if (parallelism == 0) throw Error(ErrorCode::InvalidConfig, "parallelism must be at least 1");
}

std::size_t ResultBundle::degraded_claims() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const bool degraded = claims[i].degraded || (i < evidence.size() && evidence[i].degraded) ||
                          (i < verdicts.size() && verdicts[i].degraded);
    n += degraded ? 1 : 0;
  }
  return n;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

retrieval::IndexedDocument index_document(const Document& doc, const PipelineConfig& config,
                                          const PipelineBackends& backends, const retrieval::IndexCache* cache) {
  using retrieval::StrategyKind;
  retrieval::IndexedDocument indexed;
  indexed.doc = &doc;
  const StrategyKind kind = config.strategy.kind;
  if (kind == StrategyKind::Bm25 || kind == StrategyKind::SparseRerank) {
    indexed.bm25 = std::make_shared<retrieval::Bm25Index>(retrieval::Bm25Index::build(doc.passages, config.bm25));
  } else {
    if (!backends.embedder) throw Error(ErrorCode::MissingIndex, "dense strategies need an embedding backend");
    retrieval::CacheKey key{doc.doc_id, retrieval::config_hash(doc, config.chunk), backends.embedder->id()};
    if (cache) {
      if (auto hit = cache->load(key)) {
        spdlog::debug("dense index cache hit for {}", doc.doc_id);
        indexed.dense = std::make_shared<retrieval::DenseIndex>(std::move(*hit));
        return indexed;
      }
    }
    auto dense = retrieval::DenseIndex::build(doc.passages, *backends.embedder);
    if (cache) cache->store(key, dense);
    indexed.dense = std::make_shared<retrieval::DenseIndex>(std::move(dense));
  }
  return indexed;
}

ResultBundle run_pipeline(const RawDocument& document, const std::vector<RawReview>& reviews,
                          const PipelineConfig& config, const PipelineBackends& backends,
                          const ProgressObserver& observer, const retrieval::IndexCache* cache) {
  config.validate();
  if (!backends.generator) throw Error(ErrorCode::InvalidConfig, "a generation backend is required");
  auto stage = [&](PipelineStage s) {
    if (observer.should_abort && observer.should_abort()) throw Error(ErrorCode::Timeout, "job exceeded its time budget");
    if (observer.on_stage) observer.on_stage(s);
  };
  auto check_abort = [&] {
    if (observer.should_abort && observer.should_abort()) throw Error(ErrorCode::Timeout, "job exceeded its time budget");
  };

  ResultBundle bundle;
  stage(PipelineStage::Ingesting);
  bundle.document = segment_document(document.full_text, config.chunk, document.doc_id, document.title);
  std::set<std::string> seen_reviews;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    std::string id = reviews[i].review_id.empty() ? "r" + std::to_string(i + 1) : reviews[i].review_id;
    while (!seen_reviews.insert(id).second) id += "_" + std::to_string(i + 1);
    if (text::trim(reviews[i].text).empty()) continue;
    bundle.reviews.push_back(normalize_review(reviews[i].text, id, bundle.document.doc_id));
  }

  stage(PipelineStage::Extracting);
  std::unique_ptr<claims::CheckworthinessScorer> scorer;
  if (config.model_checkworthiness) {
    scorer = std::make_unique<claims::ModelScorer>(backends.extractor ? backends.extractor : backends.generator);
  }
  for (const auto& review : bundle.reviews) {
    check_abort();
    claims::ExtractOptions options;
    options.threshold = config.threshold;
    options.scorer = scorer.get();
    auto extracted = claims::extract_claims(review, backends.extraction_backend(), options);
    for (auto& c : extracted.claims) bundle.claims.push_back(std::move(c));
  }

  stage(PipelineStage::Retrieving);
  const std::size_t n = bundle.claims.size();
  bundle.evidence.resize(n);
  bundle.verdicts.resize(n);
  retrieval::IndexedDocument indexed;
  bool index_failed = false;
  std::string index_error;
  try {
    indexed = index_document(bundle.document, config, backends, cache);
  } catch (const Error& e) {
    if (!e.is_backend_failure()) throw;
    index_failed = true;
    index_error = e.what();
    spdlog::warn("index build failed, claims will have no evidence: {}", index_error);
  }
  const retrieval::Backends retrieval_backends{backends.embedder.get(), backends.scorer.get()};
  parallel_for(n, config.parallelism, [&](std::size_t i) {
    check_abort();
    ClaimEvidence& ev = bundle.evidence[i];
    ev.claim_id = bundle.claims[i].claim_id;
    if (index_failed) {
      ev.degraded = true;
      return;
    }
    try {
      auto result = retrieval::retrieve(bundle.claims[i].text, indexed, config.strategy, retrieval_backends);
      ev.hits = std::move(result.hits);
      ev.candidates_considered = result.candidates_considered;
      ev.degraded = result.degraded;
    } catch (const Error& e) {
      if (!e.is_backend_failure()) throw;
      spdlog::warn("retrieval failed for {}: {}", ev.claim_id, e.what());
      ev.degraded = true;
    }
  });

  stage(PipelineStage::Verifying);
  std::atomic<std::size_t> done{0};
  verification::VerifyOptions verify_options;
  verify_options.params = config.generation;
  parallel_for(n, config.parallelism, [&](std::size_t i) {
    check_abort();
    bundle.verdicts[i] = verification::verify(bundle.claims[i], bundle.evidence[i].hits, bundle.document,
                                              *backends.generator, verify_options);
    const std::size_t finished = ++done;
    if (observer.on_claim_done) observer.on_claim_done(finished, n);
  });
  return bundle;
}

std::vector<std::string> validate_bundle(const ResultBundle& bundle) {
  std::vector<std::string> problems;
  const Document& doc = bundle.document;
  std::set<std::string> passage_ids;
  for (std::size_t i = 0; i < doc.passages.size(); ++i) {
    const Passage& p = doc.passages[i];
    if (!passage_ids.insert(p.passage_id).second) problems.push_back("duplicate passage id " + p.passage_id);
    if (p.ordinal != i) problems.push_back("passage " + p.passage_id + " has ordinal out of order");
    if (p.char_start >= p.char_end || p.char_end > doc.full_text.size() ||
        doc.full_text.compare(p.char_start, p.char_end - p.char_start, p.text) != 0) {
      problems.push_back("passage " + p.passage_id + " offsets do not slice the document");
    }
    if (i > 0 && p.char_start <= doc.passages[i - 1].char_start) {
      problems.push_back("passage " + p.passage_id + " does not start after its predecessor");
    }
  }
  std::map<std::string, const Review*> reviews;
  for (const auto& r : bundle.reviews) reviews[r.review_id] = &r;
  std::set<std::string> claim_ids;
  for (const auto& c : bundle.claims) {
    if (!claim_ids.insert(c.claim_id).second) problems.push_back("duplicate claim id " + c.claim_id);
    auto it = reviews.find(c.review_id);
    if (it == reviews.end()) {
      problems.push_back("claim " + c.claim_id + " references unknown review " + c.review_id);
      continue;
    }
    const Review& r = *it->second;
    bool sentence_found = false;
    for (const auto& s : r.sentences) {
      if (s.sentence_id == c.source_sentence_id) {
        sentence_found = s.char_start == c.source_start && s.char_end == c.source_end;
      }
    }
    if (!sentence_found) problems.push_back("claim " + c.claim_id + " has an unresolvable source sentence");
    if (c.text.empty() || c.text.back() == '?') problems.push_back("claim " + c.claim_id + " is not declarative");
  }
  if (bundle.evidence.size() != bundle.claims.size()) problems.push_back("evidence list count differs from claim count");
  if (bundle.verdicts.size() != bundle.claims.size()) problems.push_back("verdict count differs from claim count");
  for (std::size_t i = 0; i < bundle.evidence.size(); ++i) {
    const auto& ev = bundle.evidence[i];
    if (!claim_ids.count(ev.claim_id)) problems.push_back("evidence references unknown claim " + ev.claim_id);
    for (std::size_t r = 0; r < ev.hits.size(); ++r) {
      const auto& hit = ev.hits[r];
      if (!passage_ids.count(hit.passage_id)) problems.push_back("evidence references unknown passage " + hit.passage_id);
      if (hit.rank != r + 1) problems.push_back("evidence for " + ev.claim_id + " has a rank gap");
      if (r > 0 && hit.score > ev.hits[r - 1].score) problems.push_back("evidence for " + ev.claim_id + " is not sorted");
    }
  }
  for (std::size_t i = 0; i < bundle.verdicts.size(); ++i) {
    const auto& v = bundle.verdicts[i];
    if (!claim_ids.count(v.claim_id)) problems.push_back("verdict references unknown claim " + v.claim_id);
    for (const auto& id : v.evidence) {
      if (!passage_ids.count(id)) problems.push_back("verdict cites unknown passage " + id);
    }
    if (v.evidence.empty() && v.label != VerdictLabel::Undetermined) {
      problems.push_back("verdict for " + v.claim_id + " has no evidence but is not Undetermined");
    }
  }
  return problems;
}

}  // namespace claimcheck
