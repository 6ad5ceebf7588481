#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimcheck/http.hpp"

namespace claimcheck::gateway {

enum class Capability { Embed, Generate, ScorePair };

std::string_view to_string(Capability c);

struct BackendConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key;
  Capability capability = Capability::Generate;
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_concurrent = 4;
  int retries = 2;
  // First retry delay; doubles on each further attempt.
  std::chrono::milliseconds backoff{250};

  void validate() const;

  // Reads PEERISPECT_BASE_URL, PEERISPECT_API_KEY and the per-capability
  // model variable (PEERISPECT_GEN_MODEL, PEERISPECT_EMBED_MODEL,
  // PEERISPECT_RERANK_MODEL; PEERISPECT_MODEL is the shared fallback).
  static BackendConfig from_env(Capability capability);
};

// Greedy decoding by default so runs against deterministic servers repeat.
struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  // One vector per text, order preserved.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string generate(std::string_view prompt, const GenerationParams& params) = 0;
};

class PairScorerBackend {
 public:
  virtual ~PairScorerBackend() = default;
  virtual std::string name() const = 0;
  virtual double score_pair(std::string_view query, std::string_view passage) = 0;
  virtual std::vector<double> score_pairs(std::string_view query, const std::vector<std::string>& passages);
};

// ---------------------------------------------------------------------------
// Deterministic in-process backends.

// Signed feature hashing of retrieval terms into `dim` buckets.
class HashEmbedder final : public EmbeddingBackend {
 public:
  explicit HashEmbedder(std::size_t dim);
  std::string id() const override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::vector<double> embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
};

inline constexpr std::string_view kScriptedFallback = "LABEL: Undetermined\nNo scripted response for this prompt.";

class ScriptedGenerator final : public GenerationBackend {
 public:
  explicit ScriptedGenerator(std::map<std::string, std::string, std::less<>> responses,
                             std::string fallback = std::string(kScriptedFallback), std::string name = "scripted");
  // JSON object {prompt: response} or {"responses": {...}, "fallback": "..."}.
  static std::shared_ptr<ScriptedGenerator> from_file(const std::filesystem::path& path);

  std::string name() const override { return name_; }
  std::string generate(std::string_view prompt, const GenerationParams& params) override;

 private:
  std::map<std::string, std::string, std::less<>> responses_;
  std::string fallback_;
  std::string name_;
};

// Same reply to every prompt.
class ConstantGenerator final : public GenerationBackend {
 public:
  ConstantGenerator(std::string response, std::string name);
  std::string name() const override { return name_; }
  std::string generate(std::string_view prompt, const GenerationParams& params) override;

 private:
  std::string response_;
  std::string name_;
};

// Answers atomic-unit prompts by echoing the sentences of the passage found
// between the <<<PASSAGE / PASSAGE>>> markers, one "- " line each. Any other
// prompt gets `fallback`.
class ExtractiveGenerator final : public GenerationBackend {
 public:
  explicit ExtractiveGenerator(std::string fallback = std::string(kScriptedFallback));
  std::string name() const override { return "extractive"; }
  std::string generate(std::string_view prompt, const GenerationParams& params) override;

 private:
  std::string fallback_;
};

// |distinct query terms that occur in the passage| / |distinct query terms|.
class OverlapScorer final : public PairScorerBackend {
 public:
  std::string name() const override { return "overlap"; }
  double score_pair(std::string_view query, std::string_view passage) override;
};

enum class FailureKind { Timeout, Error };

class FailingGenerator final : public GenerationBackend {
 public:
  explicit FailingGenerator(FailureKind kind) : kind_(kind) {}
  std::string name() const override { return "failing"; }
  std::string generate(std::string_view prompt, const GenerationParams& params) override;

 private:
  FailureKind kind_;
};

class FailingScorer final : public PairScorerBackend {
 public:
  explicit FailingScorer(FailureKind kind) : kind_(kind) {}
  std::string name() const override { return "failing"; }
  double score_pair(std::string_view query, std::string_view passage) override;

 private:
  FailureKind kind_;
};

class FailingEmbedder final : public EmbeddingBackend {
 public:
  explicit FailingEmbedder(FailureKind kind) : kind_(kind) {}
  std::string id() const override { return "failing"; }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  FailureKind kind_;
};

// Wraps another generator and counts calls.
class CountingGenerator final : public GenerationBackend {
 public:
  explicit CountingGenerator(std::shared_ptr<GenerationBackend> inner) : inner_(std::move(inner)) {}
  std::string name() const override { return inner_->name(); }
  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<GenerationBackend> inner_;
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// JSON-over-HTTP inference protocol (chat completions, embeddings, score).

// Retries transport failures and 5xx responses up to `retries` times with
// exponential backoff; 4xx responses fail immediately. At most
// `max_concurrent` requests are in flight.
class ProtocolClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ProtocolClient(BackendConfig config, std::shared_ptr<http::Transport> transport, Sleeper sleeper = {});
  // Builds an HttplibTransport for config.base_url.
  explicit ProtocolClient(BackendConfig config);

  // POSTs a JSON body; returns the response body of the first 2xx reply.
  std::string post(const std::string& path, const std::string& json_body);

  const BackendConfig& config() const { return config_; }
  std::size_t attempts() const { return attempts_.load(); }

 private:
  BackendConfig config_;
  std::shared_ptr<http::Transport> transport_;
  Sleeper sleeper_;
  std::string prefix_;
  http::Semaphore gate_;
  std::atomic<std::size_t> attempts_{0};
};

class HttpEmbedder final : public EmbeddingBackend {
 public:
  explicit HttpEmbedder(std::shared_ptr<ProtocolClient> client, std::size_t batch_size = 64);
  std::string id() const override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<ProtocolClient> client_;
  std::size_t batch_size_;
};

class HttpGenerator final : public GenerationBackend {
 public:
  explicit HttpGenerator(std::shared_ptr<ProtocolClient> client);
  std::string name() const override;
  std::string generate(std::string_view prompt, const GenerationParams& params) override;

 private:
  std::shared_ptr<ProtocolClient> client_;
};

// Cross-encoder access: a dedicated `/v1/score` endpoint, or a relevance
// prompt sent through chat completions when no such endpoint exists.
class HttpPairScorer final : public PairScorerBackend {
 public:
  enum class Mode { ScoreEndpoint, GenerativePrompt };

  HttpPairScorer(std::shared_ptr<ProtocolClient> client, Mode mode);
  std::string name() const override;
  double score_pair(std::string_view query, std::string_view passage) override;
  std::vector<double> score_pairs(std::string_view query, const std::vector<std::string>& passages) override;

 private:
  std::shared_ptr<ProtocolClient> client_;
  Mode mode_;
};

// Parses the first "SCORE: <number>" line; nullopt when absent.
std::optional<double> parse_score_line(std::string_view response);

}  // namespace claimcheck::gateway
