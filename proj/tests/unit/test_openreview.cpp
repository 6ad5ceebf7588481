#include <doctest.h>

#include "claimcheck/error.hpp"
#include "claimcheck/openreview.hpp"
#include "oracles.hpp"

using namespace claimcheck;

namespace {

struct Harness {
  std::shared_ptr<http::ReplayTransport> transport =
      http::ReplayTransport::from_file(testing::fixture("http/openreview_forum.json"));
  std::shared_ptr<std::vector<long long>> waits = std::make_shared<std::vector<long long>>();
  OpenReviewClient client{transport, {2, 3, [w = waits](std::chrono::milliseconds d) { w->push_back(d.count()); }}};
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("forum with three official reviews") {
  Harness h;
  auto forum = h.client.fetch("FooNet2024");
  CHECK(forum.metadata.forum_id == "FooNet2024");
  CHECK(forum.metadata.title == "FooNet: Sparse Residual Routing");
  CHECK(forum.metadata.abstract_text.find("sparse residual routing") != std::string::npos);
  REQUIRE(forum.reviews.size() == 3);
  CHECK(forum.reviews[0].review_id == "rev-a");
  CHECK(forum.reviews[1].review_id == "rev-b");
  CHECK(forum.reviews[2].review_id == "rev-c");
  for (const auto& r : forum.reviews) {
    CHECK_FALSE(r.raw_text.empty());
    CHECK_FALSE(r.sentences.empty());
    CHECK(r.paper_id == "FooNet2024");
  }
  CHECK(forum.reviews[1].raw_text ==
        "The paper proposes FooNet.\n\nTable 3 reports 71.2% accuracy on CIFAR-100.\n\n"
        "The dataset is small and the baselines are outdated.\n\nWhy is ImageNet missing?");
  CHECK(forum.reviews[2].raw_text == "The method ignores class imbalance.");
  REQUIRE(h.transport->requests().size() == 1);
  CHECK(h.transport->requests()[0].method == "GET");
}

TEST_CASE("withdrawn submission has metadata and no reviews") {
  Harness h;
  auto forum = h.client.fetch("Withdrawn7");
  CHECK(forum.reviews.empty());
  CHECK(forum.metadata.title == "A Withdrawn Submission");
  CHECK_FALSE(forum.metadata.abstract_text.empty());
}

TEST_CASE("error paths") {
  Harness h;
  CHECK(code_of([&] { h.client.fetch("Missing"); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { h.client.fetch("Empty"); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { h.client.fetch("Nobody"); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { h.client.fetch("Down"); }) == ErrorCode::NetworkError);
  CHECK(code_of([&] { h.client.fetch(" "); }) == ErrorCode::EmptyInput);
}

TEST_CASE("rate limiting honours Retry-After") {
  Harness h;
  auto forum = h.client.fetch("Busy");
  CHECK(forum.metadata.title == "Busy");
  CHECK(*h.waits == std::vector<long long>{2000});

  auto always = std::make_shared<http::ReplayTransport>();
  http::ReplayTransport::Recorded r;
  r.response.status = 429;
  always->add("GET", "/notes?forum=X", r);
  int sleeps = 0;
  OpenReviewClient client(always, {1, 2, [&](std::chrono::milliseconds) { ++sleeps; }});
  CHECK(code_of([&] { client.fetch("X"); }) == ErrorCode::RateLimited);
  CHECK(sleeps == 2);
}

TEST_CASE("forum ids are url-encoded") {
  auto t = std::make_shared<http::ReplayTransport>();
  OpenReviewClient client(t, {});
  CHECK_THROWS_AS(client.fetch("a b&c"), Error);
  CHECK(t->requests().at(0).path == "/notes?forum=a%20b%26c");
}

TEST_CASE("review text assembly order") {
  CHECK(assemble_review_text(R"({"questions":{"value":"Q?"},"summary":{"value":"S."},"weaknesses":{"value":"W."}})") ==
        "S.\n\nW.\n\nQ?");
  CHECK(assemble_review_text(R"({"summary":"bare v1 field"})") == "bare v1 field");
  CHECK(assemble_review_text("{}").empty());
  CHECK_THROWS_AS(assemble_review_text("{"), Error);
}
