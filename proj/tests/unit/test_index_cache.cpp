#include <doctest.h>

#include <fstream>

#include "claimcheck/gateway.hpp"
#include "claimcheck/index_cache.hpp"
#include "oracles.hpp"

using namespace claimcheck;
using namespace claimcheck::retrieval;

TEST_CASE("dense index cache round-trips and invalidates on key change") {
  testing::TempDir dir("cache");
  IndexCache cache(dir.path());
  const ChunkConfig cfg{20, 5, "words+punct"};
  auto doc = segment_document("FooNet routes activations through sparse residual branches. " 
                              "Each block contains eight branches and a gating network that picks two.",
                              cfg, "foonet");
  gateway::HashEmbedder emb(16);
  auto index = DenseIndex::build(doc.passages, emb);
  CacheKey key{doc.doc_id, config_hash(doc, cfg), emb.id()};

  CHECK_FALSE(cache.load(key).has_value());
  cache.store(key, index);
  auto loaded = cache.load(key);
  REQUIRE(loaded.has_value());
  CHECK(loaded->data() == index.data());
  CHECK(loaded->passage_ids() == index.passage_ids());
  CHECK(loaded->dim() == index.dim());
  CHECK(loaded->embedder_id() == index.embedder_id());

  CacheKey other_embedder = key;
  other_embedder.embedder_id = "hash-embedder/d32";
  CHECK_FALSE(cache.load(other_embedder).has_value());

  const ChunkConfig cfg2{21, 5, "words+punct"};
  CHECK(config_hash(doc, cfg2) != key.config_hash);
  auto doc2 = doc;
  doc2.passages[0].text += "x";
  CHECK(config_hash(doc2, cfg) != key.config_hash);

  // A corrupted entry is treated as a miss.
  { std::ofstream(cache.path_for(key), std::ios::trunc) << "garbage"; }
  CHECK_FALSE(cache.load(key).has_value());
}
