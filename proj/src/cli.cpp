#include "claimcheck/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "claimcheck/error.hpp"
#include "claimcheck/evaluation.hpp"
#include "claimcheck/index_cache.hpp"
#include "claimcheck/pipeline.hpp"
#include "claimcheck/serialize.hpp"
#include "claimcheck/service.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck::cli {
namespace {

struct Options {
  bool mock = false;
  std::uint64_t seed = 0;
  bool json_output = false;
  bool strict = false;
  std::string log_level = "warn";

  std::string base_url;
  std::string api_key;
  std::string model;
  std::string gen_model;
  std::string embed_model;
  std::string rerank_model;
  std::string rerank_mode = "score";
  std::string script;
  std::size_t embed_dim = 64;

  std::string strategy = "sparse_rerank";
  std::size_t candidate_k = 20;
  std::size_t final_k = 3;
  std::size_t size_tokens = 180;
  std::size_t overlap_tokens = 30;
  double threshold = 0.5;
  double k1 = 1.2;
  double b = 0.75;
  std::size_t parallelism = 4;
  bool model_checkworthiness = false;
  std::string cache_dir;

  std::string out_path;
  std::string paper;
  std::vector<std::string> papers;
  std::string reviews;
  std::vector<std::string> claim_texts;
  std::string claims_file;
  std::string bundle_path;

  std::string benchmark;
  bool build_cmc = false;
  std::size_t n_per_paper = 10;
  std::string strategies;
  std::vector<std::string> mock_labels;
  std::vector<std::string> script_backends;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 2;
  std::string store_dir;
  std::size_t job_timeout_s = 300;
  std::string cors_origin = "*";
  std::string openreview_endpoint = "https://api2.openreview.net";
};

bool has_network_config(const Options& o) {
  return !o.base_url.empty() || !o.api_key.empty() || !o.model.empty() || !o.gen_model.empty() ||
         !o.embed_model.empty() || !o.rerank_model.empty();
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("claimcheck");
  if (!logger) logger = spdlog::stderr_logger_mt("claimcheck");
  spdlog::set_default_logger(logger);
  const auto parsed = spdlog::level::from_str(level);
  spdlog::set_level(parsed);
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig cfg;
  cfg.chunk.size_tokens = o.size_tokens;
  cfg.chunk.overlap_tokens = o.overlap_tokens;
  cfg.strategy.kind = retrieval::parse_strategy(o.strategy);
  cfg.strategy.candidate_k = o.candidate_k;
  cfg.strategy.final_k = o.final_k;
  cfg.bm25 = {o.k1, o.b};
  cfg.threshold = o.threshold;
  cfg.parallelism = o.parallelism;
  cfg.model_checkworthiness = o.model_checkworthiness;
  cfg.generation.seed = o.seed;
  cfg.validate();
  return cfg;
}

gateway::BackendConfig network_config(const Options& o, gateway::Capability capability) {
  auto cfg = gateway::BackendConfig::from_env(capability);
  if (!o.base_url.empty()) cfg.base_url = o.base_url;
  if (!o.api_key.empty()) cfg.api_key = o.api_key;
  std::string specific;
  switch (capability) {
    case gateway::Capability::Generate: specific = o.gen_model; break;
    case gateway::Capability::Embed: specific = o.embed_model; break;
    case gateway::Capability::ScorePair: specific = o.rerank_model; break;
  }
  if (!specific.empty()) {
    cfg.model_name = specific;
  } else if (!o.model.empty()) {
    cfg.model_name = o.model;
  }
  cfg.validate();
  return cfg;
}

std::shared_ptr<gateway::GenerationBackend> mock_generator(const Options& o) {
  if (!o.script.empty()) return gateway::ScriptedGenerator::from_file(o.script);
  return std::make_shared<gateway::ScriptedGenerator>(std::map<std::string, std::string, std::less<>>{});
}

PipelineBackends make_backends(const Options& o) {
  PipelineBackends b;
  if (o.mock) {
    b.generator = mock_generator(o);
    b.embedder = std::make_shared<gateway::HashEmbedder>(o.embed_dim);
    b.scorer = std::make_shared<gateway::OverlapScorer>();
    return b;
  }
  using gateway::Capability;
  b.generator = std::make_shared<gateway::HttpGenerator>(
      std::make_shared<gateway::ProtocolClient>(network_config(o, Capability::Generate)));
  b.embedder = std::make_shared<gateway::HttpEmbedder>(
      std::make_shared<gateway::ProtocolClient>(network_config(o, Capability::Embed)));
  if (o.rerank_mode != "score" && o.rerank_mode != "generative") {
    throw Error(ErrorCode::InvalidConfig, "--rerank-mode must be 'score' or 'generative'");
  }
  const auto mode = o.rerank_mode == "score" ? gateway::HttpPairScorer::Mode::ScoreEndpoint
                                             : gateway::HttpPairScorer::Mode::GenerativePrompt;
  b.scorer = std::make_shared<gateway::HttpPairScorer>(
      std::make_shared<gateway::ProtocolClient>(network_config(o, Capability::ScorePair)), mode);
  return b;
}

// Writes to --out when given, otherwise to `out`.
void emit(const Options& o, std::ostream& out, const std::string& payload) {
  if (o.out_path.empty()) {
    out << payload;
    return;
  }
  std::ofstream file(o.out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::Io, "cannot write " + o.out_path);
  file << payload;
  if (!file.flush()) throw Error(ErrorCode::Io, "short write to " + o.out_path);
}

void write_file(const std::string& path, const std::string& payload) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::Io, "cannot write " + path);
  file << payload;
}

std::vector<Claim> load_claims(const Options& o) {
  std::vector<Claim> claims;
  for (std::size_t i = 0; i < o.claim_texts.size(); ++i) {
    Claim c;
    c.claim_id = "cli-c" + std::to_string(i + 1);
    c.text = o.claim_texts[i];
    claims.push_back(std::move(c));
  }
  if (!o.claims_file.empty()) {
    std::istringstream lines(read_file(o.claims_file));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, o.claims_file + " line " + std::to_string(line_no) + ": " + e.what());
      }
      const json& obj = j.contains("claim") ? j.at("claim") : j;
      Claim c;
      if (obj.contains("source_span")) {
        obj.get_to(c);
      } else {
        c.text = obj.at("text").get<std::string>();
        c.claim_id = obj.value("claim_id", "cli-c" + std::to_string(claims.size() + 1));
      }
      claims.push_back(std::move(c));
    }
  }
  if (claims.empty()) throw Error(ErrorCode::EmptyInput, "no claims given (use --claim or --claims)");
  return claims;
}

Document load_document(const std::string& path, const ChunkConfig& chunk) {
  RawDocument raw = load_raw_document(path);
  return segment_document(raw.full_text, chunk, raw.doc_id, raw.title);
}

std::string summary_line(const ResultBundle& bundle) {
  std::map<VerdictLabel, std::size_t> counts;
  for (const auto& v : bundle.verdicts) ++counts[v.label];
  std::ostringstream s;
  s << "claims=" << bundle.claims.size() << " degraded=" << bundle.degraded_claims();
  for (VerdictLabel l : all_labels()) s << ' ' << to_string(l) << '=' << counts[l];
  s << '\n';
  return s.str();
}

json summary_json(const ResultBundle& bundle) {
  json labels = json::object();
  std::map<VerdictLabel, std::size_t> counts;
  for (const auto& v : bundle.verdicts) ++counts[v.label];
  for (VerdictLabel l : all_labels()) labels[std::string(to_string(l))] = counts[l];
  return {{"schema_version", kSchemaVersion},
          {"doc_id", bundle.document.doc_id},
          {"claims", bundle.claims.size()},
          {"degraded", bundle.degraded_claims()},
          {"labels", labels}};
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const auto cfg = pipeline_config(o);
  Document doc = load_document(o.paper, cfg.chunk);
  json j = {{"schema_version", kSchemaVersion}, {"document", doc}};
  if (!o.reviews.empty()) {
    json reviews = json::array();
    const auto raw = load_raw_reviews(o.reviews);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::string id = raw[i].review_id.empty() ? "r" + std::to_string(i + 1) : raw[i].review_id;
      reviews.push_back(normalize_review(raw[i].text, id, doc.doc_id));
    }
    j["reviews"] = reviews;
  }
  emit(o, out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out, std::ostream& err) {
  const auto cfg = pipeline_config(o);
  const auto backends = make_backends(o);
  std::string paper_id;
  if (!o.paper.empty()) paper_id = load_raw_document(o.paper).doc_id;
  std::unique_ptr<claims::CheckworthinessScorer> scorer;
  if (cfg.model_checkworthiness) scorer = std::make_unique<claims::ModelScorer>(backends.generator);
  std::vector<Claim> all;
  std::size_t degraded = 0;
  const auto raw = load_raw_reviews(o.reviews);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (text::trim(raw[i].text).empty()) continue;
    const std::string id = raw[i].review_id.empty() ? "r" + std::to_string(i + 1) : raw[i].review_id;
    claims::ExtractOptions options{cfg.threshold, scorer.get()};
    auto result = claims::extract_claims(normalize_review(raw[i].text, id, paper_id),
                                         backends.extraction_backend(), options);
    degraded += result.degraded_sentences;
    for (auto& c : result.claims) all.push_back(std::move(c));
  }
  emit(o, out, to_jsonl(all));
  if (!o.json_output) err << "claims=" << all.size() << " degraded_sentences=" << degraded << '\n';
  return o.strict && degraded > 0 ? kExitDegraded : kExitOk;
}

int cmd_retrieve_or_verify(const Options& o, std::ostream& out, bool verify) {
  const auto cfg = pipeline_config(o);
  const auto backends = make_backends(o);
  Document doc = load_document(o.paper, cfg.chunk);
  std::unique_ptr<retrieval::IndexCache> cache;
  if (!o.cache_dir.empty()) cache = std::make_unique<retrieval::IndexCache>(o.cache_dir);
  const auto indexed = index_document(doc, cfg, backends, cache.get());
  const auto claims = load_claims(o);
  const retrieval::Backends rb{backends.embedder.get(), backends.scorer.get()};
  verification::VerifyOptions vo;
  vo.params = cfg.generation;
  std::string payload;
  bool any_degraded = false;
  for (const auto& claim : claims) {
    ClaimEvidence ev;
    ev.claim_id = claim.claim_id;
    try {
      auto r = retrieval::retrieve(claim.text, indexed, cfg.strategy, rb);
      ev.hits = std::move(r.hits);
      ev.candidates_considered = r.candidates_considered;
      ev.degraded = r.degraded;
    } catch (const Error& e) {
      if (!e.is_backend_failure()) throw;
      spdlog::warn("retrieval failed for {}: {}", claim.claim_id, e.what());
      ev.degraded = true;
    }
    json line = {{"claim", claim}, {"evidence", ev}};
    any_degraded = any_degraded || ev.degraded;
    if (verify) {
      Verdict v = verification::verify(claim, ev.hits, doc, *backends.generator, vo);
      any_degraded = any_degraded || v.degraded;
      line["verdict"] = v;
    }
    payload += line.dump() + "\n";
  }
  emit(o, out, payload);
  return o.strict && any_degraded ? kExitDegraded : kExitOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  const auto cfg = pipeline_config(o);
  const auto backends = make_backends(o);
  const RawDocument document = load_raw_document(o.paper);
  const auto reviews = load_raw_reviews(o.reviews);
  std::unique_ptr<retrieval::IndexCache> cache;
  if (!o.cache_dir.empty()) cache = std::make_unique<retrieval::IndexCache>(o.cache_dir);
  ResultBundle bundle = run_pipeline(document, reviews, cfg, backends, {}, cache.get());
  if (!o.bundle_path.empty()) write_file(o.bundle_path, json(bundle).dump(2) + "\n");
  emit(o, out, results_jsonl(bundle));
  if (o.json_output) {
    if (!o.out_path.empty()) out << summary_json(bundle).dump() << '\n';
  } else {
    (o.out_path.empty() ? err : out) << summary_line(bundle);
  }
  return o.strict && bundle.degraded_claims() > 0 ? kExitDegraded : kExitOk;
}

std::vector<retrieval::StrategyKind> parse_strategy_list(const std::string& list) {
  if (text::trim(list).empty()) return retrieval::all_strategies();
  std::vector<retrieval::StrategyKind> out;
  std::stringstream s(list);
  std::string item;
  while (std::getline(s, item, ',')) {
    const auto t = text::trim(item);
    if (!t.empty()) out.push_back(retrieval::parse_strategy(t));
  }
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& spec, const char* flag) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw Error(ErrorCode::InvalidConfig, std::string(flag) + " expects NAME=VALUE, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = pipeline_config(o);
  std::vector<std::string> paper_paths = o.papers;
  if (!o.paper.empty()) paper_paths.insert(paper_paths.begin(), o.paper);
  if (paper_paths.empty()) throw Error(ErrorCode::EmptyInput, "eval needs at least one --paper");
  std::map<std::string, Document> papers;
  for (const auto& path : paper_paths) {
    Document doc = load_document(path, cfg.chunk);
    const std::string id = doc.doc_id;
    papers.emplace(id, std::move(doc));
  }

  if (o.build_cmc) {
    std::shared_ptr<gateway::GenerationBackend> generator =
        o.mock ? std::make_shared<gateway::ExtractiveGenerator>() : make_backends(o).generator;
    std::vector<evaluation::BenchmarkInstance> all;
    for (const auto& path : paper_paths) {
      const std::string id = load_raw_document(path).doc_id;
      auto build = evaluation::build_cmc(papers.at(id), *generator, o.n_per_paper, o.seed);
      if (build.insufficient_units) {
        err << "warning: " << id << " yielded only " << build.units_extracted << " atomic units\n";
      }
      for (auto& inst : build.instances) all.push_back(std::move(inst));
    }
    emit(o, out, evaluation::write_benchmark(all));
    return kExitOk;
  }

  if (o.benchmark.empty()) throw Error(ErrorCode::EmptyInput, "eval needs --benchmark (or --build-cmc)");
  const auto instances = evaluation::load_benchmark(o.benchmark);
  PipelineBackends base = make_backends(o);
  std::vector<evaluation::SweepBackend> sweep_backends;
  for (const auto& spec : o.mock_labels) {
    if (!o.mock) throw Error(ErrorCode::InvalidConfig, "--mock-label requires --mock");
    auto [name, label] = split_assignment(spec, "--mock-label");
    if (!parse_verdict_label(label)) throw Error(ErrorCode::UnknownLabel, label);
    sweep_backends.push_back({name, std::make_shared<gateway::ConstantGenerator>("LABEL: " + label, name)});
  }
  for (const auto& spec : o.script_backends) {
    if (!o.mock) throw Error(ErrorCode::InvalidConfig, "--script-backend requires --mock");
    auto [name, path] = split_assignment(spec, "--script-backend");
    sweep_backends.push_back({name, gateway::ScriptedGenerator::from_file(path)});
  }
  if (sweep_backends.empty()) sweep_backends.push_back({base.generator->name(), base.generator});

  evaluation::SweepConfig sc;
  sc.strategies = parse_strategy_list(o.strategies);
  sc.candidate_k = cfg.strategy.candidate_k;
  sc.final_k = cfg.strategy.final_k;
  sc.bm25 = cfg.bm25;
  sc.embedder = base.embedder;
  sc.scorer = base.scorer;
  sc.generation = cfg.generation;
  sc.parallelism = cfg.parallelism;
  const auto result = evaluation::run_sweep(instances, papers, sweep_backends, sc);
  for (const auto& f : result.failures) {
    err << "cell failed: " << f.model_name << '/' << retrieval::to_string(f.strategy) << ": " << f.message << '\n';
  }
  emit(o, out, o.json_output ? evaluation::to_json(result) : evaluation::to_csv(result.rows));
  return result.failures.empty() ? kExitOk : (o.strict ? kExitDegraded : kExitOk);
}

std::atomic<service::Server*> g_server{nullptr};

void handle_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const Options& o, std::ostream& err) {
  service::ServiceOptions so;
  so.workers = o.workers;
  so.job_timeout = std::chrono::seconds(o.job_timeout_s);
  so.cors_origin = o.cors_origin;
  so.defaults = pipeline_config(o);
  std::shared_ptr<service::JobStore> store;
  if (o.store_dir.empty()) {
    store = std::make_shared<service::MemoryJobStore>();
  } else {
    store = std::make_shared<service::FileJobStore>(o.store_dir);
  }
  std::shared_ptr<OpenReviewClient> openreview;
  if (!o.mock) openreview = std::make_shared<OpenReviewClient>(o.openreview_endpoint);
  service::JobManager jobs(store, make_backends(o), so, openreview);
  service::Server server(jobs, o.cors_origin);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  err << "listening on " << o.host << ':' << o.port << '\n';
  const bool ok = server.listen(o.host, o.port);
  g_server = nullptr;
  jobs.shutdown();
  if (!ok) {
    err << "error: server stopped unexpectedly or could not bind\n";
    return kExitFatal;
  }
  return kExitOk;
}

void add_common_options(CLI::App& app, Options& o) {
  app.add_flag("--mock", o.mock, "Use deterministic in-process backends")->envname("PEERISPECT_MOCK");
  app.add_option("--seed", o.seed, "Seed for sampling and generation")->envname("PEERISPECT_SEED")->capture_default_str();
  app.add_flag("--json", o.json_output, "Machine-readable output only on stdout");
  app.add_flag("--strict", o.strict, "Exit 1 when any claim ran in degraded mode");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")
      ->envname("PEERISPECT_LOG_LEVEL")
      ->capture_default_str();

  app.add_option("--base-url", o.base_url, "Inference server URL including /v1")->envname("PEERISPECT_BASE_URL");
  app.add_option("--api-key", o.api_key, "Bearer token for the inference server")->envname("PEERISPECT_API_KEY");
  app.add_option("--model", o.model, "Model used for every capability")->envname("PEERISPECT_MODEL");
  app.add_option("--gen-model", o.gen_model, "Generation model")->envname("PEERISPECT_GEN_MODEL");
  app.add_option("--embed-model", o.embed_model, "Embedding model")->envname("PEERISPECT_EMBED_MODEL");
  app.add_option("--rerank-model", o.rerank_model, "Reranking model")->envname("PEERISPECT_RERANK_MODEL");
  app.add_option("--rerank-mode", o.rerank_mode, "score (dedicated endpoint) or generative")
      ->envname("PEERISPECT_RERANK_MODE")
      ->capture_default_str();
  app.add_option("--script", o.script, "Scripted responses for the mock generator (JSON)");
  app.add_option("--embed-dim", o.embed_dim, "Dimension of the mock hash embedder")->capture_default_str();

  app.add_option("--strategy", o.strategy, "bm25, dense, dense_rerank or sparse_rerank")
      ->envname("PEERISPECT_STRATEGY")
      ->capture_default_str();
  app.add_option("--candidate-k", o.candidate_k, "First-stage candidates handed to the reranker")
      ->envname("PEERISPECT_CANDIDATE_K")
      ->capture_default_str();
  app.add_option("--final-k", o.final_k, "Evidence passages per claim")
      ->envname("PEERISPECT_FINAL_K")
      ->capture_default_str();
  app.add_option("--chunk-size", o.size_tokens, "Passage size in tokens")->capture_default_str();
  app.add_option("--chunk-overlap", o.overlap_tokens, "Overlap between passages in tokens")->capture_default_str();
  app.add_option("--threshold", o.threshold, "Check-worthiness threshold")
      ->envname("PEERISPECT_THRESHOLD")
      ->capture_default_str();
  app.add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
  app.add_option("--b", o.b, "BM25 b")->capture_default_str();
  app.add_option("--parallelism", o.parallelism, "Claims processed concurrently")
      ->envname("PEERISPECT_PARALLELISM")
      ->capture_default_str();
  app.add_flag("--model-checkworthiness", o.model_checkworthiness, "Score check-worthiness with the generator");
  app.add_option("--cache-dir", o.cache_dir, "Directory for cached dense indexes")->envname("PEERISPECT_CACHE_DIR");
  app.add_option("-o,--out", o.out_path, "Write results here instead of stdout");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Verify factual claims in peer reviews against the manuscript", "claimcheck"};
  app.set_config("--config", "", "Read options from a TOML or INI file");
  app.require_subcommand(1);
  add_common_options(app, o);

  auto* ingest = app.add_subcommand("ingest", "Segment a manuscript (and optionally reviews)");
  ingest->fallthrough();
  ingest->add_option("--paper", o.paper, "Manuscript (.txt or .json)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--reviews", o.reviews, "Reviews (.txt, .json or .jsonl)")->check(CLI::ExistingFile);

  auto* extract = app.add_subcommand("extract", "Extract check-worthy claims from reviews");
  extract->fallthrough();
  extract->add_option("--reviews", o.reviews, "Reviews (.txt, .json or .jsonl)")->required()->check(CLI::ExistingFile);
  extract->add_option("--paper", o.paper, "Manuscript the reviews refer to")->check(CLI::ExistingFile);

  auto* retrieve = app.add_subcommand("retrieve", "Retrieve evidence passages for claims");
  auto* verify = app.add_subcommand("verify", "Retrieve evidence and verify claims");
  for (auto* sub : {retrieve, verify}) {
    sub->fallthrough();
    sub->add_option("--paper", o.paper, "Manuscript (.txt or .json)")->required()->check(CLI::ExistingFile);
    sub->add_option("--claim", o.claim_texts, "Claim text (repeatable)");
    sub->add_option("--claims", o.claims_file, "JSONL of claims")->check(CLI::ExistingFile);
  }

  auto* run_cmd = app.add_subcommand("run", "Full pipeline: ingest, extract, retrieve, verify");
  run_cmd->fallthrough();
  run_cmd->add_option("--paper", o.paper, "Manuscript (.txt or .json)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--reviews", o.reviews, "Reviews (.txt, .json or .jsonl)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--bundle", o.bundle_path, "Also write the full result bundle as JSON");

  auto* eval = app.add_subcommand("eval", "Build benchmarks and run evaluation sweeps");
  eval->fallthrough();
  eval->add_option("--paper", o.papers, "Manuscript files (repeatable)")->check(CLI::ExistingFile);
  eval->add_option("--benchmark", o.benchmark, "Benchmark JSONL (CMC or RRC)")->check(CLI::ExistingFile);
  eval->add_flag("--build-cmc", o.build_cmc, "Write a CMC benchmark built from the papers");
  eval->add_option("--n-per-paper", o.n_per_paper, "CMC claims sampled per paper")->capture_default_str();
  eval->add_option("--strategies", o.strategies, "Comma-separated strategies (default: all four)");
  eval->add_option("--mock-label", o.mock_labels, "Mock backend NAME=LABEL answering one label (repeatable)");
  eval->add_option("--script-backend", o.script_backends, "Mock backend NAME=responses.json (repeatable)");

  auto* serve = app.add_subcommand("serve", "Run the REST service");
  serve->fallthrough();
  serve->add_option("--host", o.host, "Bind address")->envname("PEERISPECT_HOST")->capture_default_str();
  serve->add_option("--port", o.port, "Port")->envname("PEERISPECT_PORT")->capture_default_str();
  serve->add_option("--workers", o.workers, "Concurrent jobs")->envname("PEERISPECT_WORKERS")->capture_default_str();
  serve->add_option("--store", o.store_dir, "Directory for job records (default: in memory)")
      ->envname("PEERISPECT_STORE");
  serve->add_option("--job-timeout", o.job_timeout_s, "Seconds before a job is failed")->capture_default_str();
  serve->add_option("--cors-origin", o.cors_origin, "Allowed browser origin")
      ->envname("PEERISPECT_CORS_ORIGIN")
      ->capture_default_str();
  serve->add_option("--openreview", o.openreview_endpoint, "OpenReview API endpoint")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    configure_logging(o.log_level);
    if (o.mock && has_network_config(o)) {
      throw Error(ErrorCode::InvalidConfig, "--mock cannot be combined with network backend settings");
    }
    if (*ingest) return cmd_ingest(o, out);
    if (*extract) return cmd_extract(o, out, err);
    if (*retrieve) return cmd_retrieve_or_verify(o, out, false);
    if (*verify) return cmd_retrieve_or_verify(o, out, true);
    if (*run_cmd) return cmd_run(o, out, err);
    if (*eval) return cmd_eval(o, out, err);
    if (*serve) return cmd_serve(o, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}

}  // namespace claimcheck::cli
