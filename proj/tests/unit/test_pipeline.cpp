#include <doctest.h>

#include <atomic>
#include <set>

#include "claimcheck/error.hpp"
#include "claimcheck/pipeline.hpp"
#include "oracles.hpp"

using namespace claimcheck;

namespace {

RawDocument foonet() { return load_raw_document(testing::fixture("papers/foonet.txt")); }

PipelineBackends mock_backends(std::shared_ptr<gateway::GenerationBackend> generator) {
  PipelineBackends b;
  b.generator = std::move(generator);
  b.embedder = std::make_shared<gateway::HashEmbedder>(64);
  b.scorer = std::make_shared<gateway::OverlapScorer>();
  b.extractor = std::make_shared<gateway::ScriptedGenerator>(std::map<std::string, std::string, std::less<>>{});
  return b;
}

const std::vector<RawReview> kReviews = {
    {"r1",
     "The dataset is small and the baselines are outdated. Perhaps the proof of Lemma 2 is incomplete. "
     "It seems Table 3 reports 71.2% accuracy on CIFAR-10."},
    {"", "Quokka zebrafish xylophones wobble 777 times."},
    {"", "   "},
};

}  // namespace

TEST_CASE("config validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.parallelism = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.strategy.final_k = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.chunk.overlap_tokens = c.chunk.size_tokens;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  for (std::size_t workers : {1u, 2u, 8u}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                    if (i == 3) throw Error(ErrorCode::BackendError, "x");
                  }),
                  Error);
  parallel_for(0, 4, [](std::size_t) { FAIL("should not run"); });
}

TEST_CASE("end-to-end run with mocks") {
  auto counter = std::make_shared<gateway::CountingGenerator>(
      std::make_shared<gateway::ConstantGenerator>("LABEL: Supported\nIt matches.", "always"));
  std::vector<PipelineStage> stages;
  std::size_t last_done = 0;
  ProgressObserver obs;
  obs.on_stage = [&](PipelineStage s) { stages.push_back(s); };
  obs.on_claim_done = [&](std::size_t done, std::size_t) { last_done = std::max(last_done, done); };

  PipelineConfig cfg;
  auto bundle = run_pipeline(foonet(), kReviews, cfg, mock_backends(counter), obs);
  CHECK(stages == std::vector<PipelineStage>{PipelineStage::Ingesting, PipelineStage::Extracting,
                                             PipelineStage::Retrieving, PipelineStage::Verifying});
  CHECK(bundle.document.doc_id == "foonet");
  REQUIRE(bundle.reviews.size() == 2);
  CHECK(bundle.reviews[1].review_id == "r2");
  REQUIRE(bundle.claims.size() == 5);
  CHECK(bundle.verdicts.size() == 5);
  CHECK(last_done == 5);
  CHECK(validate_bundle(bundle).empty());

  std::size_t empty = 0;
  for (std::size_t i = 0; i < bundle.claims.size(); ++i) {
    CHECK(bundle.verdicts[i].claim_id == bundle.claims[i].claim_id);
    CHECK(bundle.evidence[i].hits.size() <= 3);
    CHECK(bundle.evidence[i].candidates_considered <= 20);
    if (bundle.evidence[i].hits.empty()) {
      ++empty;
      CHECK(bundle.verdicts[i].label == VerdictLabel::Undetermined);
      CHECK_FALSE(bundle.verdicts[i].backend_called);
    } else {
      CHECK(bundle.verdicts[i].label == VerdictLabel::Supported);
    }
  }
  CHECK(empty == 1);
  CHECK(bundle.claims.back().review_id == "r2");
  CHECK(counter->calls() == 4);
  CHECK(bundle.degraded_claims() == 0);
}

TEST_CASE("pipeline is deterministic across parallelism levels") {
  auto gen = std::make_shared<gateway::ConstantGenerator>("LABEL: Contradicted", "c");
  PipelineConfig one;
  one.parallelism = 1;
  PipelineConfig many;
  many.parallelism = 8;
  auto a = run_pipeline(foonet(), kReviews, one, mock_backends(gen));
  auto b = run_pipeline(foonet(), kReviews, many, mock_backends(gen));
  REQUIRE(a.claims.size() == b.claims.size());
  for (std::size_t i = 0; i < a.claims.size(); ++i) {
    CHECK(a.claims[i].text == b.claims[i].text);
    REQUIRE(a.evidence[i].hits.size() == b.evidence[i].hits.size());
    for (std::size_t j = 0; j < a.evidence[i].hits.size(); ++j) {
      CHECK(a.evidence[i].hits[j].passage_id == b.evidence[i].hits[j].passage_id);
      CHECK(a.evidence[i].hits[j].score == b.evidence[i].hits[j].score);
    }
  }
}

TEST_CASE("every strategy respects the default evidence budget") {
  auto gen = std::make_shared<gateway::ConstantGenerator>("LABEL: Supported", "s");
  for (auto kind : retrieval::all_strategies()) {
    PipelineConfig cfg;
    cfg.strategy.kind = kind;
    cfg.chunk = {20, 5, "words+punct"};
    auto bundle = run_pipeline(foonet(), kReviews, cfg, mock_backends(gen));
    CHECK(validate_bundle(bundle).empty());
    for (const auto& ev : bundle.evidence) {
      CHECK(ev.hits.size() <= 3);
      CHECK(ev.candidates_considered <= 20);
      for (const auto& h : ev.hits) {
        CHECK(h.stage == (kind == retrieval::StrategyKind::Bm25 ? retrieval::Stage::Sparse
                          : kind == retrieval::StrategyKind::Dense ? retrieval::Stage::Dense
                                                                   : retrieval::Stage::Reranked));
      }
    }
  }
}

TEST_CASE("degraded mode when backends fail") {
  auto gen = std::make_shared<gateway::FailingGenerator>(gateway::FailureKind::Timeout);
  PipelineConfig cfg;
  auto backends = mock_backends(gen);
  backends.scorer = std::make_shared<gateway::FailingScorer>(gateway::FailureKind::Error);
  auto bundle = run_pipeline(foonet(), kReviews, cfg, backends);
  CHECK(validate_bundle(bundle).empty());
  REQUIRE_FALSE(bundle.claims.empty());
  // A claim with no lexical evidence never reaches the failing backends.
  for (std::size_t i = 0; i < bundle.claims.size(); ++i) {
    CHECK(bundle.verdicts[i].label == VerdictLabel::Undetermined);
    CHECK(bundle.verdicts[i].degraded == !bundle.evidence[i].hits.empty());
    CHECK(bundle.evidence[i].degraded == !bundle.evidence[i].hits.empty());
  }
  CHECK(bundle.degraded_claims() == bundle.claims.size() - 1);

  PipelineConfig dense;
  dense.strategy.kind = retrieval::StrategyKind::Dense;
  auto no_embed = mock_backends(std::make_shared<gateway::ConstantGenerator>("LABEL: Supported", "s"));
  no_embed.embedder = std::make_shared<gateway::FailingEmbedder>(gateway::FailureKind::Error);
  auto b2 = run_pipeline(foonet(), kReviews, dense, no_embed);
  CHECK(b2.degraded_claims() == b2.claims.size());
  for (const auto& ev : b2.evidence) CHECK(ev.hits.empty());
  CHECK(validate_bundle(b2).empty());
}

TEST_CASE("abort and missing generator") {
  PipelineConfig cfg;
  ProgressObserver obs;
  obs.should_abort = [] { return true; };
  auto gen = std::make_shared<gateway::ConstantGenerator>("x", "x");
  try {
    run_pipeline(foonet(), kReviews, cfg, mock_backends(gen), obs);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }
  PipelineBackends none;
  CHECK_THROWS_AS(run_pipeline(foonet(), kReviews, cfg, none), Error);
}

TEST_CASE("dense index goes through the cache") {
  testing::TempDir dir("pipeline-cache");
  retrieval::IndexCache cache(dir.path());
  PipelineConfig cfg;
  cfg.strategy.kind = retrieval::StrategyKind::DenseRerank;
  auto gen = std::make_shared<gateway::ConstantGenerator>("LABEL: Supported", "s");
  auto first = run_pipeline(foonet(), kReviews, cfg, mock_backends(gen), {}, &cache);
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()), std::filesystem::directory_iterator{}) == 1);
  auto second = run_pipeline(foonet(), kReviews, cfg, mock_backends(gen), {}, &cache);
  REQUIRE(first.evidence.size() == second.evidence.size());
  for (std::size_t i = 0; i < first.evidence.size(); ++i) {
    REQUIRE(first.evidence[i].hits.size() == second.evidence[i].hits.size());
    for (std::size_t j = 0; j < first.evidence[i].hits.size(); ++j) {
      CHECK(first.evidence[i].hits[j].passage_id == second.evidence[i].hits[j].passage_id);
    }
  }
}

TEST_CASE("validate_bundle reports broken cross references") {
  auto gen = std::make_shared<gateway::ConstantGenerator>("LABEL: Supported", "s");
  auto bundle = run_pipeline(foonet(), kReviews, {}, mock_backends(gen));
  REQUIRE(validate_bundle(bundle).empty());

  auto broken = bundle;
  broken.verdicts[0].evidence.push_back("p9999");
  CHECK_FALSE(validate_bundle(broken).empty());

  broken = bundle;
  broken.claims[0].review_id = "ghost";
  CHECK_FALSE(validate_bundle(broken).empty());

  broken = bundle;
  broken.verdicts.pop_back();
  CHECK_FALSE(validate_bundle(broken).empty());

  broken = bundle;
  broken.document.passages[0].char_end += 1;
  CHECK_FALSE(validate_bundle(broken).empty());

  broken = bundle;
  for (std::size_t i = 0; i < broken.verdicts.size(); ++i) {
    if (broken.evidence[i].hits.empty()) broken.verdicts[i].label = VerdictLabel::Supported;
  }
  CHECK_FALSE(validate_bundle(broken).empty());
}
