#include "claimcheck/http.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "claimcheck/error.hpp"
#include "claimcheck/ingestion.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::http {

std::string Response::header(const std::string& name) const {
  for (const auto& [key, value] : headers) {
    if (text::iequals(key, name)) return value;
  }
  return {};
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

std::vector<std::pair<std::string, std::string>> redact(const std::vector<std::pair<std::string, std::string>>& headers) {
  auto out = headers;
  for (auto& [key, value] : out) {
    if (text::iequals(key, "authorization") || text::iequals(key, "x-api-key") || text::iequals(key, "api-key")) {
      value = "<redacted>";
    }
  }
  return out;
}

HttplibTransport::HttplibTransport(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

Response HttplibTransport::send(const Request& request) {
  auto [origin, prefix] = split_url(base_url_);
  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  const std::string path = prefix + request.path;

  httplib::Result result = request.method == "POST"
                               ? client.Post(path, headers, request.body, "application/json")
                               : client.Get(path, headers);
  if (!result) {
    const auto err = result.error();
    const bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                         err == httplib::Error::ConnectionTimeout;
    throw TransportError(timeout, "HTTP " + request.method + " " + origin + path + ": " + httplib::to_string(err));
  }
  Response response;
  response.status = result->status;
  response.body = result->body;
  for (const auto& [k, v] : result->headers) response.headers[k] = v;
  return response;
}

void ReplayTransport::add(const std::string& method, const std::string& path, Recorded recorded) {
  std::lock_guard lock(mu_);
  queues_[method + " " + path].push_back(std::move(recorded));
}

void ReplayTransport::add(const std::string& method, const std::string& path, int status, std::string body) {
  Recorded r;
  r.response.status = status;
  r.response.body = std::move(body);
  add(method, path, std::move(r));
}

std::shared_ptr<ReplayTransport> ReplayTransport::from_file(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  auto transport = std::make_shared<ReplayTransport>();
  for (const auto& item : j.at("interactions")) {
    Recorded r;
    r.transport_timeout = item.value("timeout", false);
    r.transport_failure = item.value("failure", false);
    r.response.status = item.value("status", 200);
    if (item.contains("json")) {
      r.response.body = item.at("json").dump();
    } else {
      r.response.body = item.value("body", std::string{});
    }
    if (item.contains("headers")) {
      for (const auto& [k, v] : item.at("headers").items()) r.response.headers[k] = v.get<std::string>();
    }
    transport->add(item.value("method", std::string("GET")), item.at("path").get<std::string>(), std::move(r));
  }
  return transport;
}

Response ReplayTransport::send(const Request& request) {
  Recorded recorded;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    ++in_flight_;
    max_in_flight_ = std::max(max_in_flight_, in_flight_);
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  {
    std::lock_guard lock(mu_);
    --in_flight_;
    const std::string key = request.method + " " + request.path;
    auto it = queues_.find(key);
    if (it == queues_.end() || it->second.empty()) {
      recorded.response.status = 404;
      recorded.response.body = R"({"name":"NotFoundError","message":"no recorded interaction"})";
    } else {
      std::size_t& cursor = cursor_[key];
      recorded = it->second[std::min(cursor, it->second.size() - 1)];
      ++cursor;
    }
  }
  if (recorded.transport_timeout) throw TransportError(true, "replayed timeout for " + request.path);
  if (recorded.transport_failure) throw TransportError(false, "replayed connection failure for " + request.path);
  return recorded.response;
}

std::vector<Request> ReplayTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t ReplayTransport::max_in_flight() const {
  std::lock_guard lock(mu_);
  return max_in_flight_;
}

void Semaphore::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return permits_ > 0; });
  --permits_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mu_);
    ++permits_;
  }
  cv_.notify_one();
}

}  // namespace claimcheck::http
