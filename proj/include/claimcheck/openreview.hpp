#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "claimcheck/http.hpp"
#include "claimcheck/ingestion.hpp"

namespace claimcheck {

struct SubmissionMetadata {
  std::string forum_id;
  std::string title;
  std::string abstract_text;
};

struct ForumContents {
  SubmissionMetadata metadata;
  std::vector<Review> reviews;
};

// Read-only client for the OpenReview v2 notes API. Thread-safe; at most
// `max_concurrent` requests in flight.
class OpenReviewClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  struct Options {
    std::size_t max_concurrent = 2;
    int rate_limit_retries = 3;
    Sleeper sleeper;  // defaults to std::this_thread::sleep_for
  };

  OpenReviewClient(std::shared_ptr<http::Transport> transport, Options options);
  // Builds an HttplibTransport; endpoint defaults to https://api2.openreview.net.
  explicit OpenReviewClient(const std::string& endpoint = "https://api2.openreview.net");

  // Throws NotFound, NetworkError or RateLimited.
  ForumContents fetch(const std::string& forum_id);

 private:
  http::Response get(const std::string& path);

  std::shared_ptr<http::Transport> transport_;
  Options options_;
  http::Semaphore gate_;
};

// Concatenates summary, strengths, weaknesses and questions in that order.
std::string assemble_review_text(const std::string& note_content_json);

}  // namespace claimcheck
