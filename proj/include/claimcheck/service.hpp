#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "claimcheck/openreview.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/serialize.hpp"

namespace httplib {
class Server;
}

namespace claimcheck::service {

enum class JobState { Queued, Ingesting, Extracting, Retrieving, Verifying, Done, Failed };

std::string_view to_string(JobState s);
std::optional<JobState> parse_job_state(std::string_view s);
bool is_terminal(JobState s);
// Forward along the listed order; Failed from any non-terminal state.
bool can_transition(JobState from, JobState to);

struct Job {
  std::string job_id;
  JobState state = JobState::Queued;
  std::string created_at;  // ISO-8601 UTC
  std::string updated_at;
  json config;
  std::optional<std::string> error;
  std::size_t claims_done = 0;
  std::size_t claims_total = 0;
};

json job_to_json(const Job& job);
Job job_from_json(const json& j);

// Key-value persistence for job records, requests and result bundles.
class JobStore {
 public:
  virtual ~JobStore() = default;
  virtual void put(const std::string& key, const std::string& value) = 0;
  virtual std::optional<std::string> get(const std::string& key) const = 0;
  virtual std::vector<std::string> keys_with_suffix(const std::string& suffix) const = 0;
};

class MemoryJobStore final : public JobStore {
 public:
  void put(const std::string& key, const std::string& value) override;
  std::optional<std::string> get(const std::string& key) const override;
  std::vector<std::string> keys_with_suffix(const std::string& suffix) const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> data_;
};

// One file per key under `dir`, written via rename so readers never see a
// partial value.
class FileJobStore final : public JobStore {
 public:
  explicit FileJobStore(std::filesystem::path dir);
  void put(const std::string& key, const std::string& value) override;
  std::optional<std::string> get(const std::string& key) const override;
  std::vector<std::string> keys_with_suffix(const std::string& suffix) const override;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

struct ServiceOptions {
  std::size_t workers = 2;
  std::chrono::milliseconds job_timeout{300'000};
  std::string cors_origin = "*";
  PipelineConfig defaults;
};

struct ApiResponse {
  int status = 200;
  json body;
};

class JobManager {
 public:
  JobManager(std::shared_ptr<JobStore> store, PipelineBackends backends, ServiceOptions options,
             std::shared_ptr<OpenReviewClient> openreview = nullptr);
  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  // 202 {job_id}; 400 malformed; 422 both/neither document sources.
  ApiResponse submit(const std::string& body);
  ApiResponse get_job(const std::string& job_id) const;
  // 200 bundle; 404 unknown; 409 not Done.
  ApiResponse get_results(const std::string& job_id) const;
  ApiResponse health() const;

  std::optional<Job> snapshot(const std::string& job_id) const;
  // Blocks until the job is terminal or `timeout` passes.
  std::optional<Job> wait(const std::string& job_id, std::chrono::milliseconds timeout) const;

  void shutdown();

 private:
  struct Task {
    std::string job_id;
    json request;
  };

  void worker_loop();
  void process(const Task& task);
  void transition(const std::string& job_id, JobState state, std::optional<std::string> error = std::nullopt);
  void update_progress(const std::string& job_id, std::size_t done, std::size_t total);
  void persist(const Job& job);
  void recover();
  std::string next_job_id();

  std::shared_ptr<JobStore> store_;
  PipelineBackends backends_;
  ServiceOptions options_;
  std::shared_ptr<OpenReviewClient> openreview_;

  mutable std::mutex mu_;
  mutable std::condition_variable changed_;
  std::map<std::string, std::shared_ptr<const Job>> jobs_;
  std::deque<Task> queue_;
  std::condition_variable queue_cv_;
  bool stopping_ = false;
  std::atomic<std::uint64_t> counter_{0};
  std::vector<std::thread> workers_;
};

// Routes one request; used by Server and directly by tests.
ApiResponse route(JobManager& jobs, const std::string& method, const std::string& path, const std::string& body);

class Server {
 public:
  Server(JobManager& jobs, std::string cors_origin = "*");
  ~Server();

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host, int port);
  // Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  JobManager& jobs_;
  std::string cors_origin_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace claimcheck::service
