#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "idas/app_config.hpp"
#include "idas/rag_engine.hpp"

namespace httplib {
class Server;
}

namespace idas {

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

/// The HTTP surface. `handle` is transport-free so routes can be tested
/// directly; `bind`/`listen` put it behind a real socket.
///
/// Requests run against a snapshot of the engine. /v1/ingest builds a new
/// index off to the side and swaps it in under the writer lock; an /v1/ask
/// arriving during that swap gets 503 RETRY_LATER.
class Service {
 public:
  Service(AppConfig config, std::shared_ptr<const TemplateStore> templates,
          std::shared_ptr<const FlatIndex> index);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  HttpReply handle(std::string_view method, std::string_view path, std::string_view body);

  /// Binds host:port (port 0 picks a free one); returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); in-flight requests complete before it returns.
  void listen();
  void stop();

  std::size_t index_size() const;

 private:
  HttpReply health() const;
  HttpReply ask(std::string_view body) const;
  HttpReply ingest();
  HttpReply chunk(std::string_view id) const;

  AppConfig config_;
  std::shared_ptr<const TemplateStore> templates_;
  mutable std::shared_mutex swap_mutex_;
  std::shared_ptr<const AdvisoryEngine> engine_;
  std::mutex ingest_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

/// {"error": {"code": ..., "message": ...}}
nlohmann::json error_body(std::string_view code, std::string_view message);

}  // namespace idas
