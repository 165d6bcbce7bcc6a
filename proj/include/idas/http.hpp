#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>

// Minimal JSON-over-HTTP POST used by the remote embedder and chat backends.
namespace idas::http {

struct Response {
  int status = 0;
  std::string body;
};

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

/// Splits "http://host:port/v1/x" into origin and path. Throws
/// Error(InvalidConfig) on a malformed URL.
Target parse_url(const std::string& url);

bool is_transient(int status) noexcept;

/// A connection or timeout failure is reported as status 0 with the
/// transport error text in `body`; it never throws.
Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers,
                   std::chrono::milliseconds timeout);

/// Runs `attempt` up to 1 + max_retries times while it reports a transient
/// failure, sleeping backoff * 2^i between tries. The last response is
/// returned. Status 0 (transport failure) counts as transient.
Response with_retries(int max_retries, std::chrono::milliseconds backoff,
                      const std::function<Response()>& attempt);

}  // namespace idas::http
