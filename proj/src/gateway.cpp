#include "claimcheck/gateway.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "claimcheck/error.hpp"
#include "claimcheck/hashing.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/resources.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::gateway {

using nlohmann::json;

std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::Embed: return "embed";
    case Capability::Generate: return "generate";
    case Capability::ScorePair: return "score_pair";
  }
  return "generate";
}

void BackendConfig::validate() const {
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "backend timeout must be positive");
  if (max_concurrent < 1) throw Error(ErrorCode::InvalidConfig, "max_concurrent must be at least 1");
  if (retries < 0) throw Error(ErrorCode::InvalidConfig, "retries must be non-negative");
  if (base_url.empty()) throw Error(ErrorCode::InvalidConfig, "backend base_url is empty");
}

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

BackendConfig BackendConfig::from_env(Capability capability) {
  BackendConfig cfg;
  cfg.capability = capability;
  cfg.base_url = env_or("PEERISPECT_BASE_URL", "http://localhost:8000/v1");
  cfg.api_key = env_or("PEERISPECT_API_KEY", "");
  const std::string shared = env_or("PEERISPECT_MODEL", "");
  switch (capability) {
    case Capability::Embed: cfg.model_name = env_or("PEERISPECT_EMBED_MODEL", shared); break;
    case Capability::Generate: cfg.model_name = env_or("PEERISPECT_GEN_MODEL", shared); break;
    case Capability::ScorePair: cfg.model_name = env_or("PEERISPECT_RERANK_MODEL", shared); break;
  }
  if (auto t = env_or("PEERISPECT_TIMEOUT_MS", ""); !t.empty()) cfg.timeout = std::chrono::milliseconds(std::stoll(t));
  if (auto c = env_or("PEERISPECT_MAX_CONCURRENT", ""); !c.empty()) cfg.max_concurrent = std::stoul(c);
  if (auto r = env_or("PEERISPECT_RETRIES", ""); !r.empty()) cfg.retries = std::stoi(r);
  return cfg;
}

std::vector<double> PairScorerBackend::score_pairs(std::string_view query, const std::vector<std::string>& passages) {
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& p : passages) out.push_back(score_pair(query, p));
  return out;
}

// ---------------------------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidConfig, "embedding dim must be positive");
}

std::string HashEmbedder::id() const { return "hash-embedder/d" + std::to_string(dim_); }

std::vector<double> HashEmbedder::embed_one(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& term : text::tokenize(text)) {
    const std::uint64_t h = fnv1a64(term);
    v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
    v[fnv1a64(text) % dim_] = 1.0;
  }
  return v;
}

std::vector<std::vector<double>> HashEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::EmptyInput, "embed called with no texts");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorCode::EmptyInput, "embed called with an empty text");
    out.push_back(embed_one(t));
  }
  return out;
}

ScriptedGenerator::ScriptedGenerator(std::map<std::string, std::string, std::less<>> responses, std::string fallback,
                                     std::string name)
    : responses_(std::move(responses)), fallback_(std::move(fallback)), name_(std::move(name)) {}

std::shared_ptr<ScriptedGenerator> ScriptedGenerator::from_file(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  std::map<std::string, std::string, std::less<>> responses;
  std::string fallback(kScriptedFallback);
  const json& table = j.contains("responses") ? j.at("responses") : j;
  if (j.contains("fallback")) fallback = j.at("fallback").get<std::string>();
  for (const auto& [k, v] : table.items()) {
    if (k == "fallback" && !j.contains("responses")) continue;
    responses.emplace(k, v.get<std::string>());
  }
  return std::make_shared<ScriptedGenerator>(std::move(responses), std::move(fallback), path.stem().string());
}

std::string ScriptedGenerator::generate(std::string_view prompt, const GenerationParams&) {
  auto it = responses_.find(prompt);
  return it == responses_.end() ? fallback_ : it->second;
}

ConstantGenerator::ConstantGenerator(std::string response, std::string name)
    : response_(std::move(response)), name_(std::move(name)) {}

std::string ConstantGenerator::generate(std::string_view, const GenerationParams&) { return response_; }

ExtractiveGenerator::ExtractiveGenerator(std::string fallback) : fallback_(std::move(fallback)) {}

std::string ExtractiveGenerator::generate(std::string_view prompt, const GenerationParams&) {
  constexpr std::string_view kOpen = "<<<PASSAGE\n";
  constexpr std::string_view kClose = "\nPASSAGE>>>";
  auto open = prompt.find(kOpen);
  auto close = prompt.rfind(kClose);
  if (open == std::string_view::npos || close == std::string_view::npos || close < open + kOpen.size()) {
    return fallback_;
  }
  std::string_view passage = prompt.substr(open + kOpen.size(), close - open - kOpen.size());
  if (text::trim(passage).empty()) return "";
  std::string out;
  for (const auto& sentence : normalize_review(passage, "extract").sentences) {
    out += "- ";
    for (char c : sentence.text) out += (c == '\n' || c == '\r') ? ' ' : c;
    out += '\n';
  }
  return out;
}

double OverlapScorer::score_pair(std::string_view query, std::string_view passage) {
  const auto q = text::tokenize(query);
  const std::unordered_set<std::string> query_terms(q.begin(), q.end());
  if (query_terms.empty()) return 0.0;
  const auto p = text::tokenize(passage);
  const std::unordered_set<std::string> passage_terms(p.begin(), p.end());
  std::size_t shared = 0;
  for (const auto& t : query_terms) shared += passage_terms.count(t);
  return static_cast<double>(shared) / static_cast<double>(query_terms.size());
}

namespace {

[[noreturn]] void fail(FailureKind kind, const char* what) {
  if (kind == FailureKind::Timeout) throw Error(ErrorCode::Timeout, std::string(what) + " timed out");
  throw Error(ErrorCode::BackendError, std::string(what) + " failed");
}

}  // namespace

std::string FailingGenerator::generate(std::string_view, const GenerationParams&) { fail(kind_, "generation"); }

double FailingScorer::score_pair(std::string_view, std::string_view) { fail(kind_, "pair scoring"); }

std::vector<std::vector<double>> FailingEmbedder::embed(const std::vector<std::string>&) { fail(kind_, "embedding"); }

std::string CountingGenerator::generate(std::string_view prompt, const GenerationParams& params) {
  ++calls_;
  return inner_->generate(prompt, params);
}

// ---------------------------------------------------------------------------

ProtocolClient::ProtocolClient(BackendConfig config, std::shared_ptr<http::Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      gate_(config_.max_concurrent) {
  config_.validate();
}

ProtocolClient::ProtocolClient(BackendConfig config)
    : ProtocolClient(config, std::make_shared<http::HttplibTransport>(config.base_url, config.timeout)) {}

std::string ProtocolClient::post(const std::string& path, const std::string& json_body) {
  http::Request request;
  request.method = "POST";
  request.path = path;
  request.body = json_body;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!config_.api_key.empty()) request.headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  if (spdlog::should_log(spdlog::level::debug)) {
    std::string hdrs;
    for (const auto& [k, v] : http::redact(request.headers)) hdrs += k + ": " + v + "; ";
    spdlog::debug("POST {}{} headers=[{}] body={}", config_.base_url, path, hdrs, json_body);
  }

  std::string last_error;
  bool last_was_timeout = false;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) sleeper_(config_.backoff * (1LL << (attempt - 1)));
    ++attempts_;
    http::Response response;
    try {
      http::SemaphoreGuard guard(gate_);
      response = transport_->send(request);
    } catch (const http::TransportError& e) {
      last_error = e.what();
      last_was_timeout = e.timeout();
      spdlog::warn("{} (attempt {}/{})", last_error, attempt + 1, config_.retries + 1);
      continue;
    }
    spdlog::debug("{} {} -> {} body={}", config_.model_name, path, response.status, response.body);
    if (response.status >= 200 && response.status < 300) return response.body;
    if (response.status >= 400 && response.status < 500) {
      throw Error(ErrorCode::BackendError,
                  "HTTP " + std::to_string(response.status) + " from " + path + ": " + response.body.substr(0, 512));
    }
    last_error = "HTTP " + std::to_string(response.status) + " from " + path;
    last_was_timeout = false;
  }
  throw Error(last_was_timeout ? ErrorCode::Timeout : ErrorCode::BackendError,
              last_error + " after " + std::to_string(config_.retries + 1) + " attempts");
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BackendError, std::string("malformed JSON response: ") + e.what());
  }
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::shared_ptr<ProtocolClient> client, std::size_t batch_size)
    : client_(std::move(client)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::string HttpEmbedder::id() const { return "http/" + client_->config().model_name; }

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::EmptyInput, "embed called with no texts");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += batch_size_) {
    const std::size_t end = std::min(texts.size(), begin + batch_size_);
    json body = {{"model", client_->config().model_name},
                 {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                                    texts.begin() + static_cast<std::ptrdiff_t>(end))}};
    json reply = parse_body(client_->post("/embeddings", body.dump()));
    if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].size() != end - begin) {
      throw Error(ErrorCode::BackendError, "embeddings response has the wrong number of items");
    }
    std::vector<std::vector<double>> batch(end - begin);
    std::size_t position = 0;
    for (const auto& item : reply["data"]) {
      const std::size_t index = item.contains("index") ? item["index"].get<std::size_t>() : position;
      if (index >= batch.size()) throw Error(ErrorCode::BackendError, "embedding index out of range");
      batch[index] = item.at("embedding").get<std::vector<double>>();
      ++position;
    }
    for (auto& v : batch) out.push_back(std::move(v));
  }
  const std::size_t dim = out.front().size();
  for (const auto& v : out) {
    if (v.empty() || v.size() != dim) throw Error(ErrorCode::DimensionMismatch, "embedding dims differ within one response");
  }
  return out;
}

HttpGenerator::HttpGenerator(std::shared_ptr<ProtocolClient> client) : client_(std::move(client)) {}

std::string HttpGenerator::name() const { return client_->config().model_name; }

std::string HttpGenerator::generate(std::string_view prompt, const GenerationParams& params) {
  if (prompt.empty()) throw Error(ErrorCode::EmptyInput, "empty prompt");
  json body = {{"model", client_->config().model_name},
               {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
               {"temperature", params.temperature},
               {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  json reply = parse_body(client_->post("/chat/completions", body.dump()));
  try {
    const json& message = reply.at("choices").at(0).at("message");
    const json& content = message.at("content");
    if (!content.is_string()) throw Error(ErrorCode::BackendError, "completion content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BackendError, std::string("unexpected completion shape: ") + e.what());
  }
}

HttpPairScorer::HttpPairScorer(std::shared_ptr<ProtocolClient> client, Mode mode)
    : client_(std::move(client)), mode_(mode) {}

std::string HttpPairScorer::name() const { return client_->config().model_name; }

double HttpPairScorer::score_pair(std::string_view query, std::string_view passage) {
  return score_pairs(query, {std::string(passage)}).front();
}

std::vector<double> HttpPairScorer::score_pairs(std::string_view query, const std::vector<std::string>& passages) {
  if (passages.empty()) return {};
  if (mode_ == Mode::ScoreEndpoint) {
    json body = {{"model", client_->config().model_name}, {"text_1", std::string(query)}, {"text_2", passages}};
    json reply = parse_body(client_->post("/score", body.dump()));
    std::vector<double> out(passages.size(), 0.0);
    try {
      const json& data = reply.at("data");
      if (data.size() != passages.size()) throw Error(ErrorCode::BackendError, "score response has the wrong length");
      std::size_t position = 0;
      for (const auto& item : data) {
        const std::size_t index = item.contains("index") ? item["index"].get<std::size_t>() : position;
        if (index >= out.size()) throw Error(ErrorCode::BackendError, "score index out of range");
        out[index] = item.at("score").get<double>();
        ++position;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("unexpected score shape: ") + e.what());
    }
    return out;
  }

  const std::string tmpl(resources::get("prompts/relevance.v1.txt"));
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& passage : passages) {
    std::string prompt = tmpl;
    auto replace = [&](std::string_view key, std::string_view value) {
      auto pos = prompt.find(key);
      if (pos != std::string::npos) prompt.replace(pos, key.size(), value);
    };
    replace("{query}", query);
    replace("{passage}", passage);
    json body = {{"model", client_->config().model_name},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", 0.0},
                 {"max_tokens", 16}};
    json reply = parse_body(client_->post("/chat/completions", body.dump()));
    std::string content;
    try {
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendError, std::string("unexpected completion shape: ") + e.what());
    }
    auto score = parse_score_line(content);
    if (!score) throw Error(ErrorCode::BackendError, "relevance reply has no SCORE line");
    out.push_back(*score / 10.0);
  }
  return out;
}

std::optional<double> parse_score_line(std::string_view response) {
  while (!response.empty()) {
    auto nl = response.find('\n');
    std::string_view line = text::trim(response.substr(0, nl));
    response = nl == std::string_view::npos ? std::string_view{} : response.substr(nl + 1);
    if (line.size() < 6 || !text::iequals(line.substr(0, 6), "score:")) continue;
    std::string_view number = text::trim(line.substr(6));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec == std::errc() && ptr != number.data() && std::isfinite(value)) return value;
  }
  return std::nullopt;
}

}  // namespace claimcheck::gateway
