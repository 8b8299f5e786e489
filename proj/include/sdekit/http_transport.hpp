#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <httplib.h>

#include "sdekit/llm.hpp"

namespace sdekit {

// Splits "http://host:port/some/path" into {"http://host:port", "/some/path"}.
inline std::pair<std::string, std::string> split_endpoint(
    const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw AgentError("endpoint must include a scheme: " + endpoint);
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {endpoint, "/"};
  }
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

// Chat-completion client over plain HTTP.  The endpoint and bearer token ride
// on each request, so one transport can serve several configurations.
class HttpTransport final : public Transport {
 public:
  LlmResponse complete(const LlmRequest& req) override {
    const auto [base, path] = split_endpoint(req.endpoint);
    httplib::Client client(base);
    const auto whole = std::chrono::duration<double>(req.timeout_seconds);
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(whole);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        whole - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!req.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + req.api_key);
    }

    const std::string body = build_request_body(req).dump();
    const auto start = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(path, headers, body, "application/json");
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (!res) {
      throw TransportError("request to " + req.endpoint +
                           " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError("request to " + req.endpoint + " returned HTTP " +
                           std::to_string(res->status));
    }
    LlmResponse out = parse_response_body(res->body);
    out.latency_seconds = latency;
    return out;
  }
};

}  // namespace sdekit
