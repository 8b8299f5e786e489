#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/hash.hpp"

namespace sdekit {

// Raised when an agent reply cannot be interpreted (bad JSON, no parseable
// models, undecidable trade call, ...).
struct AgentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the transport itself fails (connection refused, timeout,
// non-2xx status).  Retryable, unlike AgentError.
struct TransportError : AgentError {
  using AgentError::AgentError;
};

struct LlmRequest {
  std::string endpoint;
  std::string api_key;
  std::string model;
  std::string system_text;
  std::string user_text;
  double temperature = 0.2;  // valid range [0, 2]
  int max_tokens = 1024;
  double timeout_seconds = 30.0;
  int retries = 2;               // extra attempts after the first
  double backoff_seconds = 0.25; // doubles after every failed attempt
};

struct LlmResponse {
  std::string text;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  double latency_seconds = 0.0;
};

// Outbound chat-completion body.  Kept as a free function so the exact wire
// format can be asserted without a live server.
inline nlohmann::json build_request_body(const LlmRequest& req) {
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    throw AgentError("temperature must be within [0, 2], got " +
                     std::to_string(req.temperature));
  }
  if (req.max_tokens <= 0) {
    throw AgentError("max_tokens must be positive");
  }
  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  return nlohmann::json{{"model", req.model},
                        {"messages", std::move(messages)},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_tokens}};
}

// Interprets a chat-completion reply: choices[0].message.content plus the
// optional usage block.
inline LlmResponse parse_response_body(const std::string& raw) {
  nlohmann::json body = nlohmann::json::parse(raw, nullptr, false);
  if (body.is_discarded()) {
    throw AgentError("malformed response body: not valid JSON");
  }
  if (!body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw AgentError("malformed response body: missing choices");
  }
  const nlohmann::json& first = body["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw AgentError("malformed response body: missing message content");
  }
  LlmResponse out;
  out.text = first["message"]["content"].get<std::string>();
  if (body.contains("usage") && body["usage"].is_object()) {
    const nlohmann::json& usage = body["usage"];
    if (usage.contains("prompt_tokens") &&
        usage["prompt_tokens"].is_number_unsigned()) {
      out.prompt_tokens = usage["prompt_tokens"].get<std::uint64_t>();
    }
    if (usage.contains("completion_tokens") &&
        usage["completion_tokens"].is_number_unsigned()) {
      out.completion_tokens = usage["completion_tokens"].get<std::uint64_t>();
    }
  }
  return out;
}

class Transport {
 public:
  virtual ~Transport() = default;
  virtual LlmResponse complete(const LlmRequest& req) = 0;
};

// Scripted transport for tests: replies are consumed in push order and every
// request is recorded for inspection.
class MockTransport final : public Transport {
 public:
  void push_reply(std::string text) { script_.push_back({false, std::move(text)}); }
  void push_failure(std::string message) {
    script_.push_back({true, std::move(message)});
  }

  LlmResponse complete(const LlmRequest& req) override {
    requests_.push_back(req);
    if (script_.empty()) {
      throw TransportError("mock transport has no scripted reply");
    }
    auto [fails, text] = std::move(script_.front());
    script_.pop_front();
    if (fails) {
      throw TransportError(text);
    }
    LlmResponse out;
    out.text = std::move(text);
    return out;
  }

  const std::vector<LlmRequest>& requests() const { return requests_; }

 private:
  std::deque<std::pair<bool, std::string>> script_;
  std::vector<LlmRequest> requests_;
};

// Replays canned replies from a directory.  The file name is a stable hash of
// the request's (model, system, user) triple, so a missing fixture reports
// exactly which file to create.
class FixtureTransport final : public Transport {
 public:
  explicit FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string request_key(const LlmRequest& req) {
    std::string joined = req.model;
    joined.push_back('\x1f');
    joined += req.system_text;
    joined.push_back('\x1f');
    joined += req.user_text;
    const std::uint64_t h = fnv1a64(joined);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

  LlmResponse complete(const LlmRequest& req) override {
    const std::filesystem::path path = dir_ / (request_key(req) + ".txt");
    std::ifstream in(path);
    if (!in) {
      throw AgentError("no fixture for this request; expected file " +
                       path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    LlmResponse out;
    out.text = buf.str();
    return out;
  }

 private:
  std::filesystem::path dir_;
};

// Offline guard: any attempt to reach a model is an error.
class FailTransport final : public Transport {
 public:
  LlmResponse complete(const LlmRequest&) override {
    throw TransportError("offline mode forbids network calls");
  }
};

// Runs the request with retry-on-transport-error semantics: `retries` extra
// attempts, sleeping backoff_seconds * 2^attempt between them.
inline LlmResponse llm_complete(const LlmRequest& req, Transport& transport) {
  if (req.retries < 0) {
    throw AgentError("retries must be non-negative");
  }
  const int attempts = req.retries + 1;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0 && req.backoff_seconds > 0.0) {
      const double sleep_s = req.backoff_seconds * double(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      LlmResponse out = transport.complete(req);
      if (out.latency_seconds == 0.0) {
        out.latency_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
      }
      return out;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("all " + std::to_string(attempts) +
                       " attempts failed; last error: " + last_error);
}

}  // namespace sdekit
