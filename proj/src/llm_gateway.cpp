#include "leaf/llm_gateway.hpp"

#include <chrono>
#include <cstdio>
#include <optional>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>

#include "leaf/jsonl.hpp"

namespace leaf::llm {

using json = nlohmann::json;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void validate(const GenRequest& req) {
  if (req.messages.empty()) throw Error(Errc::invalid_argument, "request has no messages");
  if (req.messages.back().role != Role::user) {
    throw Error(Errc::invalid_argument, "last message must have role user");
  }
  if (!(req.temperature >= 0.0)) throw Error(Errc::invalid_argument, "temperature must be >= 0");
  if (req.n < 1) throw Error(Errc::invalid_argument, "n must be >= 1");
  if (req.max_tokens < 1) throw Error(Errc::invalid_argument, "max_tokens must be >= 1");
}

GenRequest user_request(std::string model, std::string prompt, double temperature, int n,
                        int max_tokens) {
  GenRequest req;
  req.model = std::move(model);
  req.messages.push_back({Role::user, std::move(prompt)});
  req.temperature = temperature;
  req.n = n;
  req.max_tokens = max_tokens;
  return req;
}

json to_wire(const GenRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  return {{"model", req.model},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"n", req.n},
          {"max_tokens", req.max_tokens}};
}

std::string prompt_text(const GenRequest& req) {
  std::string text;
  for (std::size_t i = 0; i < req.messages.size(); ++i) {
    if (i) text += "\n\n";
    text += req.messages[i].content;
  }
  return text;
}

std::string prompt_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GenResponse generate(Backend& backend, const GenRequest& req) {
  validate(req);
  GenResponse resp = backend.generate(req);
  if (resp.texts.size() != static_cast<std::size_t>(req.n)) {
    throw GatewayError(Errc::malformed_input,
                       "backend " + backend.id() + " returned " +
                           std::to_string(resp.texts.size()) + " completions, expected " +
                           std::to_string(req.n),
                       false);
  }
  return resp;
}

// ---------------------------------------------------------------------------
// MockBackend

struct MockBackend::Compiled {
  std::optional<std::regex> re;
};

namespace {

long word_count(std::string_view s) {
  long n = 0;
  bool in_word = false;
  for (const char c : s) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

MockBackend::MockBackend(std::vector<FixtureEntry> entries) : entries_(std::move(entries)) {
  auto compiled = std::make_shared<std::vector<Compiled>>();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.responses.empty()) {
      throw Error(Errc::malformed_input,
                  "fixture entry " + std::to_string(i + 1) + " has no responses");
    }
    Compiled c;
    if (e.regex) {
      try {
        c.re.emplace(e.match, std::regex::ECMAScript);
      } catch (const std::regex_error& err) {
        throw Error(Errc::malformed_input, "fixture entry " + std::to_string(i + 1) +
                                               ": bad regex: " + err.what());
      }
    }
    compiled->push_back(std::move(c));
  }
  compiled_ = std::move(compiled);
}

std::shared_ptr<MockBackend> MockBackend::from_jsonl(const std::filesystem::path& path) {
  std::vector<FixtureEntry> entries;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    FixtureEntry e;
    e.match = jsonl::get_string(j, "match", line_no);
    e.regex = j.value("regex", false);
    const auto it = j.find("responses");
    if (it == j.end() || !it->is_array()) {
      throw Error(Errc::malformed_input,
                  "line " + std::to_string(line_no) + ": \"responses\" must be an array");
    }
    for (const auto& r : *it) {
      if (!r.is_string()) {
        throw Error(Errc::malformed_input,
                    "line " + std::to_string(line_no) + ": responses must be strings");
      }
      e.responses.push_back(r.get<std::string>());
    }
    entries.push_back(std::move(e));
  });
  return std::make_shared<MockBackend>(std::move(entries));
}

GenResponse MockBackend::generate(const GenRequest& req) {
  ++calls_;
  const std::string text = prompt_text(req);
  const auto& compiled = *compiled_;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    const bool hit = compiled[i].re ? std::regex_search(text, *compiled[i].re)
                                    : text.find(e.match) != std::string::npos;
    if (!hit) continue;
    GenResponse resp;
    resp.backend_id = id();
    resp.usage.prompt_tokens = word_count(text);
    for (int s = 0; s < req.n; ++s) {
      resp.texts.push_back(e.responses[static_cast<std::size_t>(s) % e.responses.size()]);
      resp.usage.completion_tokens += word_count(resp.texts.back());
    }
    return resp;
  }
  throw GatewayError(Errc::fixture_miss,
                     "no fixture entry matches prompt " + prompt_hash(text), false);
}

// ---------------------------------------------------------------------------
// Decorators

namespace {

class RetryBackend final : public Backend {
 public:
  RetryBackend(BackendPtr inner, RetryPolicy policy)
      : inner_(std::move(inner)), policy_(policy) {}

  GenResponse generate(const GenRequest& req) override {
    std::vector<std::string> history;
    for (int attempt = 1;; ++attempt) {
      try {
        return inner_->generate(req);
      } catch (const GatewayError& e) {
        if (!e.retryable()) throw;
        history.push_back("attempt " + std::to_string(attempt) + ": " + e.what());
        if (attempt >= policy_.max_attempts) {
          std::string msg = "gave up after " + std::to_string(attempt) + " attempt(s)";
          for (const auto& h : history) msg += "; " + h;
          throw GatewayError(Errc::retries_exhausted, msg, false, e.status(), e.body_excerpt(),
                             attempt, std::move(history));
        }
      }
      if (policy_.backoff_ms > 0) {
        const long delay = static_cast<long>(policy_.backoff_ms) << std::min(attempt - 1, 10);
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
    }
  }

  std::string id() const override { return inner_->id(); }

 private:
  BackendPtr inner_;
  RetryPolicy policy_;
};

class LimitedBackend final : public Backend {
 public:
  LimitedBackend(BackendPtr inner, int max_parallel)
      : inner_(std::move(inner)), slots_(max_parallel) {}

  GenResponse generate(const GenRequest& req) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};
    return inner_->generate(req);
  }

  std::string id() const override { return inner_->id(); }

 private:
  BackendPtr inner_;
  std::counting_semaphore<> slots_;
};

}  // namespace

BackendPtr with_retry(BackendPtr inner, RetryPolicy policy) {
  if (policy.max_attempts < 1) throw Error(Errc::invalid_argument, "max_attempts must be >= 1");
  if (policy.backoff_ms < 0) throw Error(Errc::invalid_argument, "backoff_ms must be >= 0");
  return std::make_shared<RetryBackend>(std::move(inner), policy);
}

BackendPtr with_limit(BackendPtr inner, int max_parallel) {
  if (max_parallel < 1) throw Error(Errc::invalid_argument, "max_parallel must be >= 1");
  return std::make_shared<LimitedBackend>(std::move(inner), max_parallel);
}

GenResponse parse_wire_response(const json& body, int n, std::string backend_id) {
  const auto fail = [](const std::string& what) {
    return GatewayError(Errc::malformed_input, "chat-completions reply: " + what, false);
  };
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array()) {
    throw fail("missing choices array");
  }
  const auto& choices = body["choices"];
  if (choices.size() < static_cast<std::size_t>(n)) {
    throw fail("expected " + std::to_string(n) + " choices, got " +
               std::to_string(choices.size()));
  }
  GenResponse resp;
  resp.backend_id = std::move(backend_id);
  for (int i = 0; i < n; ++i) {
    const auto& c = choices[static_cast<std::size_t>(i)];
    const auto msg = c.find("message");
    if (msg == c.end() || !msg->is_object()) throw fail("choice without message");
    const auto content = msg->find("content");
    if (content == msg->end()) throw fail("message without content");
    resp.texts.push_back(content->is_string() ? content->get<std::string>() : std::string());
  }
  if (const auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
    resp.usage.prompt_tokens = usage->value("prompt_tokens", 0L);
    resp.usage.completion_tokens = usage->value("completion_tokens", 0L);
  }
  return resp;
}

}  // namespace leaf::llm
