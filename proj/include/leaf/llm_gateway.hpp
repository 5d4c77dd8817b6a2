#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "leaf/error.hpp"

namespace leaf::llm {

enum class Role { system, user, assistant };

std::string_view role_name(Role role);

struct Message {
  Role role = Role::user;
  std::string content;
};

struct GenRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  int n = 1;
  int max_tokens = 1024;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct GenResponse {
  std::vector<std::string> texts;
  std::string backend_id;
  Usage usage;
};

// Throws Errc::invalid_argument unless: messages non-empty, last message is
// from the user, temperature >= 0, n >= 1, max_tokens >= 1.
void validate(const GenRequest& req);

// Convenience: a single user turn.
GenRequest user_request(std::string model, std::string prompt, double temperature,
                        int n = 1, int max_tokens = 1024);

// OpenAI-compatible chat-completions body. Pure function of the request.
nlohmann::json to_wire(const GenRequest& req);

// Text a scripted backend matches against: message contents joined by a blank
// line.
std::string prompt_text(const GenRequest& req);

// 16 hex digits of FNV-1a 64 over the prompt text.
std::string prompt_hash(std::string_view text);

class GatewayError : public Error {
 public:
  GatewayError(Errc code, const std::string& message, bool retryable, int status = 0,
               std::string body_excerpt = {}, int attempts = 1,
               std::vector<std::string> history = {})
      : Error(code, message),
        retryable_(retryable),
        status_(status),
        body_excerpt_(std::move(body_excerpt)),
        attempts_(attempts),
        history_(std::move(history)) {}

  bool retryable() const { return retryable_; }
  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }
  int attempts() const { return attempts_; }
  const std::vector<std::string>& history() const { return history_; }

 private:
  bool retryable_;
  int status_;
  std::string body_excerpt_;
  int attempts_;
  std::vector<std::string> history_;
};

// Backends must tolerate concurrent generate() calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenResponse generate(const GenRequest& req) = 0;
  virtual std::string id() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

// Validates the request, delegates, and checks that exactly n texts came back.
GenResponse generate(Backend& backend, const GenRequest& req);

// One scripted rule. `match` is a substring of the prompt text, or an
// ECMAScript regex searched anywhere in it when `regex` is set.
struct FixtureEntry {
  std::string match;
  bool regex = false;
  std::vector<std::string> responses;
};

// Deterministic scripted backend. The first entry (in file order) whose
// pattern matches supplies the completions: sample i of a request receives
// responses[i % responses.size()].
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<FixtureEntry> entries);
  // JSONL lines: {"match": str, "responses": [str, ...], "regex": bool?}.
  static std::shared_ptr<MockBackend> from_jsonl(const std::filesystem::path& path);

  GenResponse generate(const GenRequest& req) override;
  std::string id() const override { return "mock"; }

  // Number of generate() calls served, including fixture misses.
  long calls() const { return calls_.load(); }

 private:
  struct Compiled;
  std::vector<FixtureEntry> entries_;
  std::shared_ptr<const std::vector<Compiled>> compiled_;
  std::atomic<long> calls_{0};
};

struct HttpConfig {
  // scheme://host[:port][/prefix]; "/v1/chat/completions" is appended, or
  // just "/chat/completions" when the prefix already ends in "/v1".
  std::string base_url = "http://localhost:8000";
  std::string api_key;
  // With the default header the key is sent as "Bearer <key>".
  std::string api_key_header = "Authorization";
  double timeout_s = 120.0;
};

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpConfig config);
  GenResponse generate(const GenRequest& req) override;
  std::string id() const override;

 private:
  HttpConfig config_;
  std::string origin_;
  std::string path_;
};

// Extracts choices[i].message.content from a chat-completions reply.
GenResponse parse_wire_response(const nlohmann::json& body, int n, std::string backend_id);

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_ms = 500;
};

// Retries retryable GatewayErrors with exponential backoff starting at
// backoff_ms. On exhaustion throws Errc::retries_exhausted carrying the
// message of every attempt.
BackendPtr with_retry(BackendPtr inner, RetryPolicy policy);

// Caps the number of in-flight requests to the wrapped backend.
BackendPtr with_limit(BackendPtr inner, int max_parallel = 4);

}  // namespace leaf::llm
