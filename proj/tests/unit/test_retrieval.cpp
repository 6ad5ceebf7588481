#include <doctest.h>

#include <cmath>
#include <random>

#include "claimcheck/error.hpp"
#include "claimcheck/gateway.hpp"
#include "claimcheck/retrieval.hpp"
#include "oracles.hpp"

using namespace claimcheck;
using namespace claimcheck::retrieval;

namespace {

std::vector<Passage> passages_of(const std::vector<std::string>& texts) {
  std::vector<Passage> out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Passage p;
    p.ordinal = i;
    char id[16];
    std::snprintf(id, sizeof id, "p%04zu", i);
    p.passage_id = id;
    p.text = texts[i];
    p.char_start = offset;
    p.char_end = offset + texts[i].size();
    offset = p.char_end + 1;
    out.push_back(p);
  }
  return out;
}

Document document_of(const std::vector<std::string>& texts) {
  Document d;
  d.doc_id = "toy";
  d.passages = passages_of(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) d.full_text += (i ? " " : "") + texts[i];
  return d;
}

void check_rank_invariant(const std::vector<EvidenceHit>& hits) {
  for (std::size_t i = 0; i < hits.size(); ++i) {
    CHECK(hits[i].rank == i + 1);
    if (i > 0) {
      CHECK(hits[i - 1].score >= hits[i].score);
      if (hits[i - 1].score == hits[i].score) CHECK(hits[i - 1].ordinal < hits[i].ordinal);
    }
  }
}

class FixedScorer final : public gateway::PairScorerBackend {
 public:
  explicit FixedScorer(std::vector<double> s) : scores_(std::move(s)) {}
  std::string name() const override { return "fixed"; }
  double score_pair(std::string_view, std::string_view) override { return 0; }
  std::vector<double> score_pairs(std::string_view, const std::vector<std::string>& p) override {
    return {scores_.begin(), scores_.begin() + static_cast<long>(p.size())};
  }

 private:
  std::vector<double> scores_;
};

}  // namespace

TEST_CASE("bm25 index statistics") {
  auto one = Bm25Index::build(passages_of({"a b a"}));
  CHECK(one.doc_len(0) == 3);
  CHECK(one.avg_doc_len() == 3.0);
  CHECK(one.doc_freq("a") == 1);
  REQUIRE(one.term_id("a").has_value());
  CHECK(one.postings(*one.term_id("a")).front().tf == 2);

  auto three = Bm25Index::build(
      passages_of({"neural network training", "network latency measurement", "training data augmentation"}));
  CHECK(three.size() == 3);
  CHECK(three.vocabulary_size() == 7);
  CHECK(three.doc_freq("network") == 2);
  CHECK(three.doc_freq("training") == 2);
  CHECK(three.doc_freq("latency") == 1);
  CHECK(three.doc_freq("absent") == 0);
  CHECK(three.avg_doc_len() == 3.0);
  CHECK(three.idf(2) == doctest::Approx(std::log(1.0 + 1.5 / 2.5)));

  CHECK_THROWS_AS(Bm25Index::build({}), Error);
  CHECK_THROWS_AS(Bm25Index::build(passages_of({"x"}), {0.0, 0.75}), Error);
  CHECK_THROWS_AS(Bm25Index::build(passages_of({"x"}), {1.2, 1.5}), Error);
}

TEST_CASE("bm25 search matches the naive scorer on the toy corpus") {
  const std::vector<std::string> corpus = {"neural network training", "network latency measurement",
                                           "training data augmentation"};
  auto index = Bm25Index::build(passages_of(corpus));
  auto hits = index.search("network training", 3);
  const auto want = testing::naive_bm25(corpus, "network training", 1.2, 0.75);
  const auto order = testing::rank_positive(want);
  REQUIRE(hits.size() == order.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    CHECK(hits[i].ordinal == order[i]);
    CHECK(std::abs(hits[i].score - want[order[i]]) < 1e-9);
    CHECK(hits[i].stage == Stage::Sparse);
  }
  CHECK(hits[0].passage_id == "p0000");
  CHECK(index.search("zebra", 3).empty());
  CHECK(index.search("", 3).empty());
  CHECK(index.search("network", 10).size() == 2);
}

TEST_CASE("property: bm25 equals the naive scorer on random corpora") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> n_pass(1, 20), n_words(1, 30), q_words(1, 6);
    std::vector<std::string> corpus;
    const int n = n_pass(rng);
    for (int i = 0; i < n; ++i) corpus.push_back(testing::random_text(rng, static_cast<std::size_t>(n_words(rng)), 25));
    const std::string query = testing::random_text(rng, static_cast<std::size_t>(q_words(rng)), 30);
    const double k1 = 0.5 + (trial % 5) * 0.4;
    const double b = (trial % 4) * 0.25 + 0.0;
    auto index = Bm25Index::build(passages_of(corpus), {k1, b});
    const auto want = testing::naive_bm25(corpus, query, k1, b);
    const auto order = testing::rank_positive(want);
    auto hits = index.search(query, corpus.size());
    REQUIRE(hits.size() == order.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].ordinal == order[i]);
      CHECK(std::abs(hits[i].score - want[order[i]]) < 1e-9);
    }
    check_rank_invariant(hits);
  }
}

TEST_CASE("repeated query terms contribute once per occurrence") {
  auto index = Bm25Index::build(passages_of({"alpha beta", "gamma delta", "alpha"}));
  auto once = index.search("alpha", 3);
  auto twice = index.search("alpha alpha", 3);
  REQUIRE(once.size() == twice.size());
  CHECK(twice[0].score == doctest::Approx(2 * once[0].score));
}

TEST_CASE("finalize_ranking breaks ties by ordinal and truncates") {
  std::vector<EvidenceHit> hits = {{"p2", 2, 1.0, 0, Stage::Dense, {}},
                                   {"p0", 0, 1.0, 0, Stage::Dense, {}},
                                   {"p1", 1, 2.0, 0, Stage::Dense, {}}};
  finalize_ranking(hits, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].passage_id == "p1");
  CHECK(hits[1].passage_id == "p0");
  CHECK(hits[1].rank == 2);
}

TEST_CASE("dense index search") {
  gateway::HashEmbedder emb(32);
  const std::vector<std::string> texts = {"sparse routing", "dense layers", "image classification", "routing table",
                                          "class imbalance"};
  auto idx = DenseIndex::build(passages_of(texts), emb);
  CHECK(idx.size() == 5);
  CHECK(idx.dim() == 32);
  CHECK(idx.embedder_id() == emb.id());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    double n = 0;
    for (std::size_t i = 0; i < idx.dim(); ++i) n += idx.vector(r)[i] * idx.vector(r)[i];
    CHECK(std::abs(n - 1.0) < 1e-6);
  }
  auto again = DenseIndex::build(passages_of(texts), emb);
  CHECK(again.data() == idx.data());

  std::vector<double> q(idx.vector(2), idx.vector(2) + idx.dim());
  auto hits = idx.search(q, 3);
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0].ordinal == 2);
  CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
  check_rank_invariant(hits);
  CHECK_THROWS_AS(idx.search(std::vector<double>(5, 0.1), 3), Error);
}

TEST_CASE("orthogonal query scores zero") {
  auto idx = DenseIndex::from_vectors({"p0000", "p0001"}, 2, {1, 0, 0, 1}, "manual");
  auto hits = idx.search({0, 1}, 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].passage_id == "p0001");
  CHECK(hits[1].score == 0.0);
}

TEST_CASE("ragged embeddings are rejected") {
  class Ragged final : public gateway::EmbeddingBackend {
   public:
    std::string id() const override { return "ragged"; }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& t) override {
      std::vector<std::vector<double>> out;
      for (std::size_t i = 0; i < t.size(); ++i) out.push_back(std::vector<double>(2 + i, 1.0));
      return out;
    }
  } ragged;
  try {
    DenseIndex::build(passages_of({"a", "b"}), ragged);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("property: dense top-10 equals brute-force cosine") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial * 2);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    std::vector<double> flat;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(testing::random_unit_vector(rng, 32));
      ids.push_back("p" + std::to_string(i));
      flat.insert(flat.end(), rows.back().begin(), rows.back().end());
    }
    auto idx = DenseIndex::from_vectors(ids, 32, flat, "random");
    const auto q = testing::random_unit_vector(rng, 32);
    const auto want = testing::brute_force_cosine(rows, q, 10);
    const auto got = idx.search(q, 10);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].ordinal == want[i].first);
      CHECK(std::abs(got[i].score - want[i].second) < 1e-12);
    }
  }
}

TEST_CASE("rerank with the overlap scorer orders by shared terms") {
  auto doc = document_of({"alpha", "alpha beta gamma", "alpha beta"});
  std::vector<EvidenceHit> cands = {{"p0000", 0, 3.0, 1, Stage::Sparse, {}},
                                    {"p0001", 1, 2.0, 2, Stage::Sparse, {}},
                                    {"p0002", 2, 1.0, 3, Stage::Sparse, {}}};
  gateway::OverlapScorer scorer;
  auto r = rerank("alpha beta gamma", cands, doc, scorer);
  CHECK_FALSE(r.degraded);
  REQUIRE(r.hits.size() == 3);
  CHECK(r.hits[0].passage_id == "p0001");
  CHECK(r.hits[1].passage_id == "p0002");
  CHECK(r.hits[2].passage_id == "p0000");
  CHECK(r.hits[0].stage == Stage::Reranked);
  CHECK(r.hits[0].first_stage_score == 2.0);

  auto single = rerank("alpha", {cands[2]}, doc, scorer);
  REQUIRE(single.hits.size() == 1);
  CHECK(single.hits[0].rank == 1);

  gateway::FailingScorer failing(gateway::FailureKind::Timeout);
  auto failed = rerank("alpha", cands, doc, failing);
  CHECK(failed.degraded);
  REQUIRE(failed.hits.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(failed.hits[i].passage_id == cands[i].passage_id);
}

TEST_CASE("reranking ties fall back to ordinal") {
  auto doc = document_of({"a", "b", "c"});
  std::vector<EvidenceHit> cands = {{"p0002", 2, 3.0, 1, Stage::Sparse, {}}, {"p0000", 0, 2.0, 2, Stage::Sparse, {}}};
  FixedScorer scorer({0.5, 0.5});
  auto r = rerank("q", cands, doc, scorer);
  CHECK(r.hits[0].passage_id == "p0000");
}

TEST_CASE("retrieve respects the strategy budget") {
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back("shared token number " + std::to_string(i) + " routing");
  auto doc = document_of(texts);
  gateway::HashEmbedder emb(32);
  gateway::OverlapScorer scorer;
  IndexedDocument indexed{&doc, std::make_shared<Bm25Index>(Bm25Index::build(doc.passages)),
                          std::make_shared<DenseIndex>(DenseIndex::build(doc.passages, emb))};
  Backends backends{&emb, &scorer};
  for (StrategyKind kind : all_strategies()) {
    CAPTURE(to_string(kind));
    RetrievalStrategy s{kind, 20, 3};
    auto r = retrieve("shared token routing 7", indexed, s, backends);
    CHECK(r.hits.size() <= 3);
    CHECK(r.candidates_considered <= 20);
    const bool reranked = kind == StrategyKind::DenseRerank || kind == StrategyKind::SparseRerank;
    CHECK((r.candidates_considered > 0) == reranked);
    check_rank_invariant(r.hits);
  }
  auto direct = indexed.bm25->search("shared token routing 7", 3);
  auto via = retrieve("shared token routing 7", indexed, {StrategyKind::Bm25, 20, 3}, backends);
  REQUIRE(direct.size() == via.hits.size());
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(direct[i].passage_id == via.hits[i].passage_id);
}

TEST_CASE("verbatim passages are recovered at rank 1 by every strategy") {
  const std::vector<std::string> texts = {"FooNet routes activations through sparse residual branches",
                                          "The CIFAR-10 training set contains 50,000 images",
                                          "Lemma 2 shows that the routed block is a contraction",
                                          "We train with stochastic gradient descent and momentum"};
  auto doc = document_of(texts);
  gateway::HashEmbedder emb(64);
  gateway::OverlapScorer scorer;
  IndexedDocument indexed{&doc, std::make_shared<Bm25Index>(Bm25Index::build(doc.passages)),
                          std::make_shared<DenseIndex>(DenseIndex::build(doc.passages, emb))};
  for (StrategyKind kind : all_strategies()) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto r = retrieve(texts[i], indexed, {kind, 20, 3}, {&emb, &scorer});
      REQUIRE_FALSE(r.hits.empty());
      CHECK(r.hits[0].ordinal == i);
    }
  }
}

TEST_CASE("retrieve reports missing indexes and bad strategies") {
  auto doc = document_of({"a b"});
  IndexedDocument bm25_only{&doc, std::make_shared<Bm25Index>(Bm25Index::build(doc.passages)), nullptr};
  gateway::OverlapScorer scorer;
  try {
    retrieve("a", bm25_only, {StrategyKind::Dense, 20, 3}, {nullptr, &scorer});
    FAIL("expected MissingIndex");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingIndex);
  }
  CHECK_THROWS_AS(retrieve("a", bm25_only, {StrategyKind::SparseRerank, 20, 3}, {}), Error);
  CHECK_THROWS_AS(retrieve("a", bm25_only, {StrategyKind::Bm25, 2, 3}, {}), Error);
  CHECK_THROWS_AS(parse_strategy("hybrid"), Error);
  CHECK(parse_strategy("dense_rerank") == StrategyKind::DenseRerank);
}
