#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace claimcheck::http {

struct Request {
  std::string method;  // "GET" or "POST"
  std::string path;    // path plus query string
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct Response {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;

  std::string header(const std::string& name) const;
};

// Raised when no HTTP response was obtained at all.
class TransportError : public std::runtime_error {
 public:
  TransportError(bool timeout, const std::string& what) : std::runtime_error(what), timeout_(timeout) {}
  bool timeout() const noexcept { return timeout_; }

 private:
  bool timeout_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual Response send(const Request& request) = 0;
};

// cpp-httplib client bound to one base URL ("http://host:port" or https).
class HttplibTransport final : public Transport {
 public:
  HttplibTransport(std::string base_url, std::chrono::milliseconds timeout);
  Response send(const Request& request) override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

// Serves recorded responses keyed by "METHOD path". Each key holds a queue;
// the last response of a queue repeats once earlier ones are consumed.
class ReplayTransport final : public Transport {
 public:
  struct Recorded {
    Response response;
    bool transport_timeout = false;
    bool transport_failure = false;
  };

  void add(const std::string& method, const std::string& path, Recorded recorded);
  void add(const std::string& method, const std::string& path, int status, std::string body);

  // Fixture file: {"interactions": [{"method", "path", "status", "body"|"json",
  // "headers"?, "timeout"?, "failure"?}]}
  static std::shared_ptr<ReplayTransport> from_file(const std::filesystem::path& path);

  Response send(const Request& request) override;

  std::vector<Request> requests() const;
  std::size_t max_in_flight() const;
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Recorded>> queues_;
  std::map<std::string, std::size_t> cursor_;
  std::vector<Request> requests_;
  std::size_t in_flight_ = 0;
  std::size_t max_in_flight_ = 0;
  std::chrono::milliseconds latency_{0};
};

// Counting semaphore with a runtime bound.
class Semaphore {
 public:
  explicit Semaphore(std::size_t permits) : permits_(permits) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t permits_;
};

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  Semaphore& s_;
};

// Split "scheme://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url);

// Copy of headers with credential values masked, for logging.
std::vector<std::pair<std::string, std::string>> redact(
    const std::vector<std::pair<std::string, std::string>>& headers);

}  // namespace claimcheck::http
