#include "claimcheck/openreview.hpp"

#include <algorithm>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "claimcheck/error.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {
namespace {

using json = nlohmann::json;

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (text::is_word_byte(c) && c < 0x80) {
      out += static_cast<char>(c);
    } else if (c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

// API v2 wraps every content field as {"value": ...}; v1 stores it bare.
std::string content_value(const json& content, const char* field) {
  if (!content.is_object() || !content.contains(field)) return {};
  const json& v = content.at(field);
  const json& inner = v.is_object() && v.contains("value") ? v.at("value") : v;
  return inner.is_string() ? inner.get<std::string>() : std::string{};
}

bool is_official_review(const json& note) {
  auto matches = [](const json& v) { return v.is_string() && v.get<std::string>().find("Official_Review") != std::string::npos; };
  if (note.contains("invitations") && note.at("invitations").is_array()) {
    for (const auto& inv : note.at("invitations")) {
      if (matches(inv)) return true;
    }
  }
  return note.contains("invitation") && matches(note.at("invitation"));
}

}  // namespace

std::string assemble_review_text(const std::string& note_content_json) {
  json content;
  try {
    content = json::parse(note_content_json);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("review content: ") + e.what());
  }
  std::string out;
  for (const char* field : {"summary", "strengths", "weaknesses", "questions"}) {
    const std::string value{text::trim(content_value(content, field))};
    if (value.empty()) continue;
    if (!out.empty()) out += "\n\n";
    out += value;
  }
  if (out.empty()) out = std::string(text::trim(content_value(content, "review")));
  return out;
}

OpenReviewClient::OpenReviewClient(std::shared_ptr<http::Transport> transport, Options options)
    : transport_(std::move(transport)), options_(std::move(options)), gate_(std::max<std::size_t>(1, options_.max_concurrent)) {
  if (!options_.sleeper) options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

OpenReviewClient::OpenReviewClient(const std::string& endpoint)
    : OpenReviewClient(std::make_shared<http::HttplibTransport>(endpoint, std::chrono::seconds(30)), Options{}) {}

http::Response OpenReviewClient::get(const std::string& path) {
  for (int attempt = 0;; ++attempt) {
    http::Response response;
    try {
      http::SemaphoreGuard guard(gate_);
      response = transport_->send({"GET", path, "", {{"Accept", "application/json"}}});
    } catch (const http::TransportError& e) {
      throw Error(e.timeout() ? ErrorCode::Timeout : ErrorCode::NetworkError, std::string("openreview: ") + e.what());
    }
    if (response.status != 429) return response;
    if (attempt >= options_.rate_limit_retries) throw Error(ErrorCode::RateLimited, "openreview rate limit persisted");
    std::chrono::milliseconds wait{1000LL << std::min(attempt, 5)};
    const std::string retry_after = response.header("Retry-After");
    if (!retry_after.empty()) {
      try {
        wait = std::chrono::seconds(std::stoll(retry_after));
      } catch (const std::exception&) {
        // Non-numeric Retry-After (an HTTP date) keeps the exponential wait.
      }
    }
    spdlog::info("openreview rate limited, retrying in {} ms", wait.count());
    options_.sleeper(wait);
  }
}

ForumContents OpenReviewClient::fetch(const std::string& forum_id) {
  if (text::trim(forum_id).empty()) throw Error(ErrorCode::EmptyInput, "forum id is empty");
  const http::Response response = get("/notes?forum=" + url_encode(forum_id));
  if (response.status == 404) throw Error(ErrorCode::NotFound, "forum " + forum_id + " not found");
  if (response.status < 200 || response.status >= 300) {
    throw Error(ErrorCode::NetworkError, "openreview returned HTTP " + std::to_string(response.status));
  }
  json body;
  try {
    body = json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("openreview reply: ") + e.what());
  }
  if (!body.contains("notes") || !body.at("notes").is_array() || body.at("notes").empty()) {
    throw Error(ErrorCode::NotFound, "forum " + forum_id + " has no notes");
  }

  ForumContents forum;
  forum.metadata.forum_id = forum_id;
  bool found_submission = false;
  struct Pending {
    long long cdate;
    std::string id;
    std::string text;
  };
  std::vector<Pending> pending;
  for (const auto& note : body.at("notes")) {
    const std::string id = note.value("id", std::string{});
    const json content = note.value("content", json::object());
    if (id == forum_id) {
      forum.metadata.title = content_value(content, "title");
      forum.metadata.abstract_text = content_value(content, "abstract");
      found_submission = true;
      continue;
    }
    if (!is_official_review(note) || note.value("replyto", std::string{}) != forum_id) continue;
    std::string review_text = assemble_review_text(content.dump());
    if (text::trim(review_text).empty()) continue;
    pending.push_back({note.value("cdate", 0LL), id, std::move(review_text)});
  }
  if (!found_submission) throw Error(ErrorCode::NotFound, "forum " + forum_id + " has no submission note");
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return a.cdate != b.cdate ? a.cdate < b.cdate : a.id < b.id;
  });
  for (const auto& p : pending) forum.reviews.push_back(normalize_review(p.text, p.id, forum_id));
  return forum;
}

}  // namespace claimcheck
