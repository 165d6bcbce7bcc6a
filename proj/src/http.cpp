#include "idas/http.hpp"

#include <thread>

#include <httplib.h>

#include "idas/error.hpp"

namespace idas::http {

Target parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint URL lacks a scheme: '" + url + "'");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidConfig, "unsupported URL scheme '" + scheme + "'");
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Target target;
  target.origin = url.substr(0, path_begin);
  target.path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (target.origin.size() <= scheme_end + 3) {
    throw Error(ErrorCode::InvalidConfig, "endpoint URL lacks a host: '" + url + "'");
  }
  return target;
}

bool is_transient(int status) noexcept {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers,
                   std::chrono::milliseconds timeout) {
  const auto target = parse_url(url);
  httplib::Client client(target.origin);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto result = client.Post(target.path, hdrs, body, "application/json");
  if (!result) return {0, httplib::to_string(result.error())};
  return {result->status, result->body};
}

Response with_retries(int max_retries, std::chrono::milliseconds backoff,
                      const std::function<Response()>& attempt) {
  Response last;
  for (int i = 0; i <= max_retries; ++i) {
    if (i > 0) std::this_thread::sleep_for(backoff * (1 << std::min(i - 1, 10)));
    last = attempt();
    if (!is_transient(last.status)) break;
  }
  return last;
}

}  // namespace idas::http
