#include "idas/service.hpp"

#include <cstdio>

#include <httplib.h>

#include "idas/error.hpp"
#include "idas/text.hpp"

namespace idas {

using nlohmann::json;

namespace {

HttpReply fail(int status, std::string_view code, std::string_view message) {
  return {status, error_body(code, message)};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::RemoteUnavailable:
    case ErrorCode::NoRuleMatched:
    case ErrorCode::ResponseEmpty:
    case ErrorCode::UnparseableResponse: return 502;
    case ErrorCode::NoDocuments: return 422;
    default: return 500;
  }
}

HttpReply from_error(const Error& e) { return fail(status_for(e.code()), to_string(e.code()), e.what()); }

void log_line(LogLevel threshold, LogLevel level, const std::string& message) {
  if (level > threshold) return;
  std::fprintf(stderr, "[%s] %s\n", std::string(to_string(level)).c_str(), message.c_str());
}

}  // namespace

json error_body(std::string_view code, std::string_view message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

Service::Service(AppConfig config, std::shared_ptr<const TemplateStore> templates,
                 std::shared_ptr<const FlatIndex> index)
    : config_(std::move(config)), templates_(std::move(templates)) {
  engine_ = std::make_shared<const AdvisoryEngine>(std::move(index), config_.embedder,
                                                   config_.backend, templates_, config_.engine);
}

Service::~Service() { stop(); }

std::size_t Service::index_size() const {
  std::shared_lock lock(swap_mutex_);
  return engine_->index().size();
}

HttpReply Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    if (path == "/v1/health") {
      if (method != "GET") return fail(405, "METHOD_NOT_ALLOWED", "use GET");
      return health();
    }
    if (path == "/v1/config") {
      if (method != "GET") return fail(405, "METHOD_NOT_ALLOWED", "use GET");
      return {200, redacted_config(config_)};
    }
    if (path == "/v1/ask") {
      if (method != "POST") return fail(405, "METHOD_NOT_ALLOWED", "use POST");
      return ask(body);
    }
    if (path == "/v1/ingest") {
      if (method != "POST") return fail(405, "METHOD_NOT_ALLOWED", "use POST");
      return ingest();
    }
    constexpr std::string_view kChunks = "/v1/chunks/";
    if (path.starts_with(kChunks) && path.size() > kChunks.size()) {
      if (method != "GET") return fail(405, "METHOD_NOT_ALLOWED", "use GET");
      return chunk(path.substr(kChunks.size()));
    }
    return fail(404, "NOT_FOUND", "no route for " + std::string(path));
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(500, "INTERNAL", e.what());
  }
}

HttpReply Service::health() const {
  std::shared_lock lock(swap_mutex_);
  return {200, json{{"status", "ok"},
                    {"index_size", engine_->index().size()},
                    {"index_dim", engine_->index().dim()},
                    {"embedder", config_.embedder.kind == EmbedderKind::Hashed ? "hashed" : "remote"},
                    {"backend", to_string(config_.backend.kind)}}};
}

HttpReply Service::ask(std::string_view body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception& e) {
    return fail(400, "INVALID_JSON", e.what());
  }
  if (!request.is_object() || !request.contains("question") || !request["question"].is_string()) {
    return fail(400, "INVALID_JSON", "body must be {\"question\": string}");
  }
  const auto question = request["question"].get<std::string>();
  if (text::trim(question).empty()) return fail(400, "EMPTY_QUESTION", "question is empty");

  std::shared_ptr<const AdvisoryEngine> engine;
  {
    std::shared_lock lock(swap_mutex_, std::try_to_lock);
    if (!lock.owns_lock()) return fail(503, "RETRY_LATER", "index swap in progress");
    engine = engine_;
  }
  return {200, json(engine->ask(question))};
}

HttpReply Service::ingest() {
  std::unique_lock serial(ingest_mutex_, std::try_to_lock);
  if (!serial.owns_lock()) return fail(503, "RETRY_LATER", "ingest already running");
  log_line(config_.log_level, LogLevel::Info, "ingest: rebuilding index");
  auto out = ingest_corpus(config_);
  out.index->persist(config_.index_path);
  auto engine = std::make_shared<const AdvisoryEngine>(out.index, config_.embedder, config_.backend,
                                                       templates_, config_.engine);
  {
    std::unique_lock lock(swap_mutex_);
    engine_ = std::move(engine);
  }
  json per_category = json::object();
  for (const auto& [c, n] : out.summary.chunks_per_category) per_category[std::string(to_string(c))] = n;
  json errors = json::array();
  for (const auto& e : out.summary.errors) errors.push_back({{"path", e.path}, {"message", e.message}});
  log_line(config_.log_level, LogLevel::Info,
           "ingest: " + std::to_string(out.summary.chunks) + " chunks indexed");
  return {200, json{{"documents", out.summary.documents},
                    {"chunks", out.summary.chunks},
                    {"chunks_per_category", per_category},
                    {"errors", errors}}};
}

HttpReply Service::chunk(std::string_view id) const {
  std::shared_ptr<const AdvisoryEngine> engine;
  {
    std::shared_lock lock(swap_mutex_);
    engine = engine_;
  }
  const auto entry = engine->index().find(id);
  if (!entry) return fail(404, "CHUNK_NOT_FOUND", "no chunk '" + std::string(id) + "'");
  return {200, json{{"chunk_id", entry->chunk_id},
                    {"source_label", entry->source_label},
                    {"category", entry->category},
                    {"text", entry->text}}};
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  const auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
    log_line(config_.log_level, LogLevel::Debug,
             req.method + " " + req.path + " -> " + std::to_string(reply.status));
  };
  server_->Get(R"(/.*)", route);
  server_->Post(R"(/.*)", route);
  // The UI is served from another origin during development.
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Service::listen() {
  if (!server_) throw Error(ErrorCode::InvalidArgument, "listen() before bind()");
  log_line(config_.log_level, LogLevel::Info, "serving");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace idas
