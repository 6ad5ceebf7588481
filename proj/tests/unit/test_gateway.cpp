#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "claimcheck/error.hpp"
#include "claimcheck/gateway.hpp"
#include "claimcheck/http.hpp"
#include "oracles.hpp"

using namespace claimcheck;
using namespace claimcheck::gateway;

namespace {

BackendConfig config_for(Capability cap, int retries = 2) {
  BackendConfig c;
  c.base_url = "http://inference.test/v1";
  c.model_name = "m";
  c.capability = cap;
  c.retries = retries;
  c.backoff = std::chrono::milliseconds(10);
  return c;
}

struct RecordingSleeper {
  std::shared_ptr<std::vector<long long>> delays = std::make_shared<std::vector<long long>>();
  ProtocolClient::Sleeper fn() {
    auto d = delays;
    return [d](std::chrono::milliseconds ms) { d->push_back(ms.count()); };
  }
};

http::ReplayTransport::Recorded timeout_record() {
  http::ReplayTransport::Recorded r;
  r.transport_timeout = true;
  return r;
}

}  // namespace

TEST_CASE("hash embedder is pure and pinned") {
  HashEmbedder e(16);
  auto same = e.embed({"a", "a"});
  CHECK(same[0] == same[1]);
  auto ab = e.embed({"a", "b"});
  CHECK(ab[0] != ab[1]);
  std::vector<double> want_a(16, 0.0), want_b(16, 0.0);
  want_a[12] = -1.0;
  want_b[5] = -1.0;
  CHECK(ab[0] == want_a);
  CHECK(ab[1] == want_b);
  CHECK(e.id() == "hash-embedder/d16");
  CHECK_THROWS_AS(e.embed({}), Error);
  CHECK_THROWS_AS(e.embed({""}), Error);
  CHECK_THROWS_AS(HashEmbedder(0), Error);
  // Text without terms still gets a non-zero vector.
  auto punct = e.embed_one("!!!");
  CHECK(std::count(punct.begin(), punct.end(), 1.0) == 1);
}

TEST_CASE("scripted, constant and extractive generators") {
  ScriptedGenerator s(std::map<std::string, std::string, std::less<>>{{"P1", "LABEL: Supported"}});
  CHECK(s.generate("P1", {}) == "LABEL: Supported");
  CHECK(s.generate("P2", {}) == std::string(kScriptedFallback));
  ConstantGenerator c("LABEL: Contradicted", "c");
  CHECK(c.generate("anything", {}) == "LABEL: Contradicted");
  CHECK(c.name() == "c");

  ExtractiveGenerator x;
  const std::string reply = x.generate("Extract.\n<<<PASSAGE\nFirst fact here. Second fact there.\nPASSAGE>>>\n", {});
  CHECK(reply == "- First fact here.\n- Second fact there.\n");
  CHECK(x.generate("no markers", {}) == std::string(kScriptedFallback));

  testing::TempDir dir("scripted");
  const auto path = dir.path() / "s.json";
  { std::ofstream(path) << R"({"responses": {"q": "r"}, "fallback": "F"})"; }
  auto loaded = ScriptedGenerator::from_file(path);
  CHECK(loaded->generate("q", {}) == "r");
  CHECK(loaded->generate("z", {}) == "F");
  const auto flat = dir.path() / "flat.json";
  { std::ofstream(flat) << R"({"q": "r2"})"; }
  CHECK(ScriptedGenerator::from_file(flat)->generate("q", {}) == "r2");
}

TEST_CASE("overlap scorer") {
  OverlapScorer o;
  CHECK(o.score_pair("a b", "a c") == 0.5);
  CHECK(o.score_pair("network training", "network training") == 1.0);
  CHECK(o.score_pair("a", "b") == 0.0);
  CHECK(o.score_pairs("a b", {"a", "b", "a b", "c"}) == std::vector<double>{0.5, 0.5, 1.0, 0.0});
}

TEST_CASE("failing backends raise backend failures") {
  try {
    FailingGenerator(FailureKind::Timeout).generate("p", {});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
    CHECK(e.is_backend_failure());
  }
  try {
    FailingScorer(FailureKind::Error).score_pair("a", "b");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendError);
  }
  CHECK_THROWS_AS(FailingEmbedder(FailureKind::Error).embed({"x"}), Error);
}

TEST_CASE("backend config validation and environment") {
  BackendConfig c = config_for(Capability::Generate);
  CHECK_NOTHROW(c.validate());
  c.timeout = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(c.validate(), Error);
  c = config_for(Capability::Generate);
  c.max_concurrent = 0;
  CHECK_THROWS_AS(c.validate(), Error);

  ::setenv("PEERISPECT_BASE_URL", "http://env.test/v1", 1);
  ::setenv("PEERISPECT_MODEL", "shared", 1);
  ::setenv("PEERISPECT_EMBED_MODEL", "embedder", 1);
  auto gen = BackendConfig::from_env(Capability::Generate);
  auto emb = BackendConfig::from_env(Capability::Embed);
  CHECK(gen.base_url == "http://env.test/v1");
  CHECK(gen.model_name == "shared");
  CHECK(emb.model_name == "embedder");
  ::unsetenv("PEERISPECT_BASE_URL");
  ::unsetenv("PEERISPECT_MODEL");
  ::unsetenv("PEERISPECT_EMBED_MODEL");
}

TEST_CASE("protocol client retries 5xx and timeouts with exponential backoff") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/chat/completions", 503, "busy");
  t->add("POST", "/chat/completions", timeout_record());
  t->add("POST", "/chat/completions", 200, R"({"choices":[{"message":{"content":"LABEL: Supported"}}]})");
  RecordingSleeper sleeper;
  auto client = std::make_shared<ProtocolClient>(config_for(Capability::Generate), t, sleeper.fn());
  HttpGenerator g(client);
  CHECK(g.generate("prompt", {}) == "LABEL: Supported");
  CHECK(client->attempts() == 3);
  CHECK(*sleeper.delays == std::vector<long long>{10, 20});

  const auto sent = t->requests();
  REQUIRE(sent.size() == 3);
  auto body = nlohmann::json::parse(sent[0].body);
  CHECK(body["temperature"] == 0.0);
  CHECK(body["seed"] == 0);
  CHECK(body["messages"][0]["content"] == "prompt");
}

TEST_CASE("protocol client never retries 4xx") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/chat/completions", 400, R"({"error":"bad"})");
  auto client = std::make_shared<ProtocolClient>(config_for(Capability::Generate), t, RecordingSleeper{}.fn());
  HttpGenerator g(client);
  try {
    g.generate("p", {});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendError);
  }
  CHECK(client->attempts() == 1);
}

TEST_CASE("protocol client gives up after the configured retries") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/chat/completions", timeout_record());
  auto client = std::make_shared<ProtocolClient>(config_for(Capability::Generate, 3), t, RecordingSleeper{}.fn());
  try {
    client->post("/chat/completions", "{}");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Timeout);
  }
  CHECK(client->attempts() == 4);
}

TEST_CASE("protocol client respects max_concurrent") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/x", 200, "{}");
  t->set_latency(std::chrono::milliseconds(20));
  auto cfg = config_for(Capability::Generate);
  cfg.max_concurrent = 2;
  auto client = std::make_shared<ProtocolClient>(cfg, t, RecordingSleeper{}.fn());
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { client->post("/x", "{}"); });
  for (auto& th : threads) th.join();
  CHECK(t->max_in_flight() <= 2);
  CHECK(t->max_in_flight() >= 1);
  CHECK(t->requests().size() == 8);
}

TEST_CASE("credentials are sent but redacted for logging") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/x", 200, "{}");
  auto cfg = config_for(Capability::Generate);
  cfg.api_key = "sk-secret";
  ProtocolClient client(cfg, t, RecordingSleeper{}.fn());
  client.post("/x", "{}");
  const auto headers = t->requests().at(0).headers;
  bool found = false;
  for (const auto& [k, v] : headers) found = found || (k == "Authorization" && v == "Bearer sk-secret");
  CHECK(found);
  for (const auto& [k, v] : http::redact(headers)) CHECK(v.find("sk-secret") == std::string::npos);
}

TEST_CASE("replay fixtures for embeddings, completions and scores") {
  auto t = http::ReplayTransport::from_file(testing::fixture("http/inference.json"));
  auto embed_client = std::make_shared<ProtocolClient>(config_for(Capability::Embed), t, RecordingSleeper{}.fn());
  HttpEmbedder embedder(embed_client);
  auto vecs = embedder.embed({"first", "second"});
  REQUIRE(vecs.size() == 2);
  CHECK(vecs[0] == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(vecs[1] == std::vector<double>{-0.5, 0.0, 0.5});

  auto gen_client = std::make_shared<ProtocolClient>(config_for(Capability::Generate), t, RecordingSleeper{}.fn());
  HttpGenerator generator(gen_client);
  CHECK(generator.generate("Is the claim supported?", {}) == "LABEL: Supported\nThe passage states it.  ");

  auto score_client = std::make_shared<ProtocolClient>(config_for(Capability::ScorePair), t, RecordingSleeper{}.fn());
  HttpPairScorer scorer(score_client, HttpPairScorer::Mode::ScoreEndpoint);
  CHECK(scorer.score_pairs("q", {"p1", "p2"}) == std::vector<double>{0.25, 0.75});
}

TEST_CASE("generative relevance scoring and malformed replies") {
  auto t = std::make_shared<http::ReplayTransport>();
  t->add("POST", "/chat/completions", 200, R"({"choices":[{"message":{"content":"SCORE: 7"}}]})");
  auto client = std::make_shared<ProtocolClient>(config_for(Capability::ScorePair), t, RecordingSleeper{}.fn());
  HttpPairScorer scorer(client, HttpPairScorer::Mode::GenerativePrompt);
  CHECK(scorer.score_pair("q", "p") == doctest::Approx(0.7));

  auto bad = std::make_shared<http::ReplayTransport>();
  bad->add("POST", "/embeddings", 200, R"({"data":[{"embedding":[1,2]},{"embedding":[1]}]})");
  bad->add("POST", "/chat/completions", 200, "not json");
  auto bad_client = std::make_shared<ProtocolClient>(config_for(Capability::Embed), bad, RecordingSleeper{}.fn());
  try {
    HttpEmbedder(bad_client).embed({"a", "b"});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  CHECK_THROWS_AS(HttpGenerator(bad_client).generate("p", {}), Error);
}

TEST_CASE("score line parsing") {
  CHECK(parse_score_line("SCORE: 0.5") == 0.5);
  CHECK(parse_score_line("thinking\nscore: 3\n") == 3.0);
  CHECK_FALSE(parse_score_line("SCORE: high").has_value());
  CHECK_FALSE(parse_score_line("").has_value());
}
