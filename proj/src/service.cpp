#include "claimcheck/service.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "claimcheck/error.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::service {
namespace {

constexpr const char* kJobSuffix = ".job";
constexpr const char* kRequestSuffix = ".request";
constexpr const char* kResultsSuffix = ".results";

const std::vector<JobState>& state_order() {
  static const std::vector<JobState> order = {JobState::Queued,     JobState::Ingesting, JobState::Extracting,
                                              JobState::Retrieving, JobState::Verifying, JobState::Done,
                                              JobState::Failed};
  return order;
}

std::size_t position(JobState s) {
  const auto& order = state_order();
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), s) - order.begin());
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(ms));
  return buf;
}

ApiResponse error_response(int status, const std::string& message) {
  return {status, json{{"schema_version", kSchemaVersion}, {"error", message}}};
}

JobState stage_state(PipelineStage s) {
  switch (s) {
    case PipelineStage::Ingesting: return JobState::Ingesting;
    case PipelineStage::Extracting: return JobState::Extracting;
    case PipelineStage::Retrieving: return JobState::Retrieving;
    case PipelineStage::Verifying: return JobState::Verifying;
  }
  return JobState::Ingesting;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.') return false;
  for (unsigned char c : key) {
    if (!(text::is_word_byte(c) && c < 0x80) && c != '-' && c != '_' && c != '.') return false;
  }
  return true;
}

// Parsed and validated submission.
struct Submission {
  std::optional<RawDocument> document;
  std::optional<std::string> forum_id;
  std::vector<RawReview> reviews;
  PipelineConfig config;
};

Submission parse_submission(const json& body, const PipelineConfig& defaults) {
  if (!body.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
  Submission sub;
  if (body.contains("document") && !body.at("document").is_null()) {
    const json& d = body.at("document");
    RawDocument doc;
    if (d.is_string()) {
      doc.full_text = d.get<std::string>();
    } else if (d.is_object() && d.contains("text") && d.at("text").is_string()) {
      doc.full_text = d.at("text").get<std::string>();
      if (d.contains("title")) {
        if (!d.at("title").is_string()) throw Error(ErrorCode::ParseError, "document.title must be a string");
        doc.title = d.at("title").get<std::string>();
      }
      if (d.contains("doc_id")) {
        if (!d.at("doc_id").is_string()) throw Error(ErrorCode::ParseError, "document.doc_id must be a string");
        doc.doc_id = d.at("doc_id").get<std::string>();
      }
    } else {
      throw Error(ErrorCode::ParseError, "document must be a string or an object with a string 'text'");
    }
    if (!text::trim(doc.full_text).empty()) sub.document = std::move(doc);
  }
  if (body.contains("forum_id") && !body.at("forum_id").is_null()) {
    if (!body.at("forum_id").is_string()) throw Error(ErrorCode::ParseError, "forum_id must be a string");
    std::string forum{text::trim(body.at("forum_id").get<std::string>())};
    if (!forum.empty()) sub.forum_id = std::move(forum);
  }
  if (body.contains("reviews") && !body.at("reviews").is_null()) {
    const json& reviews = body.at("reviews");
    if (!reviews.is_array()) throw Error(ErrorCode::ParseError, "reviews must be an array");
    for (std::size_t i = 0; i < reviews.size(); ++i) {
      const json& r = reviews.at(i);
      RawReview raw;
      if (r.is_string()) {
        raw.text = r.get<std::string>();
      } else if (r.is_object() && r.contains("text") && r.at("text").is_string()) {
        raw.text = r.at("text").get<std::string>();
        if (r.contains("review_id")) {
          if (!r.at("review_id").is_string()) throw Error(ErrorCode::ParseError, "review_id must be a string");
          raw.review_id = r.at("review_id").get<std::string>();
        }
      } else {
        throw Error(ErrorCode::ParseError, "reviews[" + std::to_string(i) + "] must be a string or {text}");
      }
      sub.reviews.push_back(std::move(raw));
    }
  }
  sub.config = defaults;
  if (body.contains("config")) apply_overrides(sub.config, body.at("config"));
  return sub;
}

}  // namespace

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "Queued";
    case JobState::Ingesting: return "Ingesting";
    case JobState::Extracting: return "Extracting";
    case JobState::Retrieving: return "Retrieving";
    case JobState::Verifying: return "Verifying";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "Failed";
}

std::optional<JobState> parse_job_state(std::string_view s) {
  for (JobState state : state_order()) {
    if (s == to_string(state)) return state;
  }
  return std::nullopt;
}

bool is_terminal(JobState s) { return s == JobState::Done || s == JobState::Failed; }

bool can_transition(JobState from, JobState to) {
  if (is_terminal(from)) return false;
  if (to == JobState::Failed) return true;
  return position(to) > position(from);
}

json job_to_json(const Job& job) {
  json j = {{"schema_version", kSchemaVersion},
            {"job_id", job.job_id},
            {"state", to_string(job.state)},
            {"created_at", job.created_at},
            {"updated_at", job.updated_at},
            {"config", job.config},
            {"progress", {{"claims_done", job.claims_done}, {"claims_total", job.claims_total}}}};
  if (job.error) j["error"] = *job.error;
  return j;
}

Job job_from_json(const json& j) {
  Job job;
  job.job_id = j.at("job_id").get<std::string>();
  const auto state_text = j.at("state").get<std::string>();
  auto state = parse_job_state(state_text);
  if (!state) throw Error(ErrorCode::ParseError, "unknown job state " + state_text);
  job.state = *state;
  job.created_at = j.value("created_at", std::string{});
  job.updated_at = j.value("updated_at", std::string{});
  job.config = j.value("config", json::object());
  if (j.contains("error") && j.at("error").is_string()) job.error = j.at("error").get<std::string>();
  if (j.contains("progress")) {
    job.claims_done = j.at("progress").value("claims_done", std::size_t{0});
    job.claims_total = j.at("progress").value("claims_total", std::size_t{0});
  }
  return job;
}

// ---------------------------------------------------------------------------

void MemoryJobStore::put(const std::string& key, const std::string& value) {
  std::lock_guard lock(mu_);
  data_[key] = value;
}

std::optional<std::string> MemoryJobStore::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = data_.find(key);
  if (it == data_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MemoryJobStore::keys_with_suffix(const std::string& suffix) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [key, value] : data_) {
    if (key.size() >= suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(key);
    }
  }
  return out;
}

FileJobStore::FileJobStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create job store " + dir_.string() + ": " + ec.message());
}

void FileJobStore::put(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw Error(ErrorCode::InvalidConfig, "invalid store key " + key);
  std::lock_guard lock(mu_);
  const auto final_path = dir_ / key;
  const auto tmp_path = dir_ / (key + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp_path.string());
    out << value;
    if (!out.flush()) throw Error(ErrorCode::Io, "short write to " + tmp_path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename into " + final_path.string() + ": " + ec.message());
}

std::optional<std::string> FileJobStore::get(const std::string& key) const {
  if (!valid_key(key)) return std::nullopt;
  std::lock_guard lock(mu_);
  std::ifstream in(dir_ / key, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> FileJobStore::keys_with_suffix(const std::string& suffix) const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

JobManager::JobManager(std::shared_ptr<JobStore> store, PipelineBackends backends, ServiceOptions options,
                       std::shared_ptr<OpenReviewClient> openreview)
    : store_(std::move(store)),
      backends_(std::move(backends)),
      options_(std::move(options)),
      openreview_(std::move(openreview)) {
  if (!store_) store_ = std::make_shared<MemoryJobStore>();
  options_.defaults.validate();
  recover();
  const std::size_t n = std::max<std::size_t>(1, options_.workers);
  for (std::size_t i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager() { shutdown(); }

void JobManager::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

std::string JobManager::next_job_id() {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "job-%011llx-%04llx", static_cast<unsigned long long>(ms),
                static_cast<unsigned long long>(counter_.fetch_add(1) & 0xFFFF));
  return buf;
}

void JobManager::recover() {
  for (const auto& key : store_->keys_with_suffix(kJobSuffix)) {
    auto raw = store_->get(key);
    if (!raw) continue;
    Job job;
    try {
      job = job_from_json(json::parse(*raw));
    } catch (const std::exception& e) {
      spdlog::warn("skipping unreadable job record {}: {}", key, e.what());
      continue;
    }
    if (job.state == JobState::Queued) {
      auto request = store_->get(job.job_id + kRequestSuffix);
      if (request) {
        queue_.push_back({job.job_id, json::parse(*request)});
      } else {
        job.state = JobState::Failed;
        job.error = "request record missing after restart";
      }
    } else if (!is_terminal(job.state)) {
      job.state = JobState::Failed;
      job.error = "service restarted while the job was running";
    }
    if (job.state == JobState::Failed) {
      job.updated_at = now_iso8601();
      persist(job);
    }
    const std::string id = job.job_id;
    jobs_[id] = std::make_shared<const Job>(std::move(job));
  }
}

void JobManager::persist(const Job& job) { store_->put(job.job_id + kJobSuffix, job_to_json(job).dump()); }

ApiResponse JobManager::submit(const std::string& body) {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  Submission sub;
  try {
    sub = parse_submission(request, options_.defaults);
  } catch (const Error& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  }
  if (sub.document.has_value() == sub.forum_id.has_value()) {
    return error_response(422, "provide exactly one of 'document' and 'forum_id'");
  }

  Job job;
  job.job_id = next_job_id();
  job.created_at = job.updated_at = now_iso8601();
  job.config = json(sub.config);
  json stored_request = request;
  stored_request["resolved_config"] = job.config;
  {
    std::lock_guard lock(mu_);
    if (stopping_) return error_response(503, "service is shutting down");
    store_->put(job.job_id + kRequestSuffix, stored_request.dump());
    persist(job);
    jobs_[job.job_id] = std::make_shared<const Job>(job);
    queue_.push_back({job.job_id, std::move(stored_request)});
  }
  queue_cv_.notify_one();
  spdlog::info("job {} queued", job.job_id);
  return {202, json{{"schema_version", kSchemaVersion}, {"job_id", job.job_id}, {"state", to_string(job.state)}}};
}

std::optional<Job> JobManager::snapshot(const std::string& job_id) const {
  std::shared_ptr<const Job> job;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    job = it->second;
  }
  return *job;
}

std::optional<Job> JobManager::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    if (is_terminal(it->second->state)) return *it->second;
    if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) {
      it = jobs_.find(job_id);
      return it == jobs_.end() ? std::nullopt : std::optional<Job>(*it->second);
    }
  }
}

ApiResponse JobManager::get_job(const std::string& job_id) const {
  auto job = snapshot(job_id);
  if (!job) return error_response(404, "unknown job " + job_id);
  return {200, job_to_json(*job)};
}

ApiResponse JobManager::get_results(const std::string& job_id) const {
  auto job = snapshot(job_id);
  if (!job) return error_response(404, "unknown job " + job_id);
  if (job->state != JobState::Done) {
    return error_response(409, "job " + job_id + " is " + std::string(to_string(job->state)));
  }
  auto results = store_->get(job_id + kResultsSuffix);
  if (!results) return error_response(500, "results for job " + job_id + " are missing");
  return {200, json::parse(*results)};
}

ApiResponse JobManager::health() const {
  std::lock_guard lock(mu_);
  std::size_t active = 0;
  for (const auto& [id, job] : jobs_) active += is_terminal(job->state) ? 0 : 1;
  return {200, json{{"schema_version", kSchemaVersion},
                    {"status", stopping_ ? "stopping" : "ok"},
                    {"workers", workers_.size()},
                    {"queued", queue_.size()},
                    {"active_jobs", active},
                    {"total_jobs", jobs_.size()}}};
}

void JobManager::transition(const std::string& job_id, JobState state, std::optional<std::string> error) {
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return;
    if (it->second->state == state) return;
    if (!can_transition(it->second->state, state)) {
      spdlog::warn("job {}: ignoring transition {} -> {}", job_id, to_string(it->second->state), to_string(state));
      return;
    }
    auto next = std::make_shared<Job>(*it->second);
    next->state = state;
    next->updated_at = now_iso8601();
    if (error) next->error = std::move(error);
    persist(*next);
    it->second = std::move(next);
  }
  changed_.notify_all();
}

void JobManager::update_progress(const std::string& job_id, std::size_t done, std::size_t total) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return;
  auto next = std::make_shared<Job>(*it->second);
  next->claims_done = done;
  next->claims_total = total;
  next->updated_at = now_iso8601();
  it->second = std::move(next);
}

void JobManager::worker_loop() {
  while (true) {
    Task task;
    {
      std::unique_lock lock(mu_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    process(task);
  }
}

void JobManager::process(const Task& task) {
  const auto deadline = std::chrono::steady_clock::now() + options_.job_timeout;
  try {
    json request = task.request;
    request.erase("resolved_config");
    Submission sub = parse_submission(request, options_.defaults);
    RawDocument document;
    std::vector<RawReview> reviews = sub.reviews;
    if (sub.forum_id) {
      transition(task.job_id, JobState::Ingesting);
      if (!openreview_) throw Error(ErrorCode::InvalidConfig, "OpenReview access is not configured");
      ForumContents forum = openreview_->fetch(*sub.forum_id);
      document.doc_id = *sub.forum_id;
      document.title = forum.metadata.title;
      document.full_text = forum.metadata.title + "\n\n" + forum.metadata.abstract_text;
      if (reviews.empty()) {
        for (const auto& r : forum.reviews) reviews.push_back({r.review_id, r.raw_text});
      }
    } else {
      document = *sub.document;
    }
    ProgressObserver observer;
    observer.on_stage = [&](PipelineStage s) { transition(task.job_id, stage_state(s)); };
    observer.on_claim_done = [&](std::size_t done, std::size_t total) { update_progress(task.job_id, done, total); };
    observer.should_abort = [&] { return std::chrono::steady_clock::now() > deadline; };
    ResultBundle bundle = run_pipeline(document, reviews, sub.config, backends_, observer);
    update_progress(task.job_id, bundle.claims.size(), bundle.claims.size());
    store_->put(task.job_id + kResultsSuffix, json(bundle).dump());
    transition(task.job_id, JobState::Done);
    spdlog::info("job {} done with {} claims", task.job_id, bundle.claims.size());
  } catch (const std::exception& e) {
    spdlog::warn("job {} failed: {}", task.job_id, e.what());
    transition(task.job_id, JobState::Failed, std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------

ApiResponse route(JobManager& jobs, const std::string& method, const std::string& path, const std::string& body) {
  std::string p = path.substr(0, path.find('?'));
  while (p.size() > 1 && p.back() == '/') p.pop_back();
  constexpr std::string_view kJobs = "/api/v1/jobs";
  if (p == "/api/v1/health") {
    if (method != "GET") return error_response(405, "method not allowed");
    return jobs.health();
  }
  if (p == kJobs) {
    if (method != "POST") return error_response(405, "method not allowed");
    return jobs.submit(body);
  }
  if (p.size() > kJobs.size() + 1 && p.compare(0, kJobs.size() + 1, std::string(kJobs) + "/") == 0) {
    std::string rest = p.substr(kJobs.size() + 1);
    bool results = false;
    const std::string suffix = "/results";
    if (rest.size() > suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
      results = true;
      rest.resize(rest.size() - suffix.size());
    }
    if (rest.empty() || rest.find('/') != std::string::npos) return error_response(404, "not found");
    if (method != "GET") return error_response(405, "method not allowed");
    return results ? jobs.get_results(rest) : jobs.get_job(rest);
  }
  return error_response(404, "not found");
}

Server::Server(JobManager& jobs, std::string cors_origin)
    : jobs_(jobs), cors_origin_(std::move(cors_origin)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Server::~Server() { stop(); }

void Server::install_routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  auto handle = [this](const httplib::Request& req, httplib::Response& res) {
    ApiResponse api = route(jobs_, req.method, req.path, req.body);
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };
  server_->Get(".*", handle);
  server_->Post(".*", handle);
  server_->Put(".*", handle);
  server_->Delete(".*", handle);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

int Server::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  return bound;
}

bool Server::listen(const std::string& host, int port) { return server_->listen(host, port); }

void Server::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace claimcheck::service
