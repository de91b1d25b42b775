#pragma once

// Thin JSON-over-HTTP POST with retries, shared by the remote embedding and
// chat backends.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>

#include "taxoforge/error.hpp"

namespace taxoforge::http {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

// Splits "http://host:8080/v1/x" into origin and path. `default_path` is used
// when the URL has no path component.
inline Endpoint split_url(const std::string& url, const std::string& default_path) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (ep.path.size() > 1 && ep.path.back() == '/') ep.path.pop_back();
  if (ep.path.empty() || ep.path == "/") ep.path = default_path;
  return ep;
}

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};
};

struct Response {
  int status = 0;
  std::string body;
};

inline bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

inline std::string api_key_from_env(const char* var = "TAXOFORGE_API_KEY") {
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

enum class Failure { none, timeout, transport, status };

struct Outcome {
  Response response;
  Failure failure = Failure::none;
  std::string detail;
};

// POSTs `body` and retries transport errors and 408/429/5xx with doubling
// backoff. Returns the last outcome; callers map failures to their own errors.
inline Outcome post_json(const Endpoint& ep, const std::string& body, const std::string& api_key,
                         const RetryPolicy& policy) {
  httplib::Client cli(ep.origin);
  const auto secs = static_cast<time_t>(policy.timeout.count());
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  Outcome last;
  auto backoff = policy.initial_backoff;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = cli.Post(ep.path, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      last.failure = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                         ? Failure::timeout
                         : Failure::transport;
      last.detail = httplib::to_string(err);
      last.response = {};
      continue;
    }
    last.response = {res->status, res->body};
    if (res->status >= 200 && res->status < 300) {
      last.failure = Failure::none;
      return last;
    }
    last.failure = Failure::status;
    last.detail = res->body;
    if (!retryable_status(res->status)) return last;
  }
  return last;
}

}  // namespace taxoforge::http
