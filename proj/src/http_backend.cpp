#include <cmath>

#include "httplib.h"
#include "leaf/llm_gateway.hpp"

namespace leaf::llm {

using json = nlohmann::json;

namespace {

std::string excerpt(const std::string& body, std::size_t max_len = 256) {
  return body.size() <= max_len ? body : body.substr(0, max_len) + "...";
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_argument, "base_url needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  origin_ = config_.base_url.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? std::string() : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const bool has_v1 = prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0;
  path_ = prefix + (has_v1 ? "/chat/completions" : "/v1/chat/completions");
  if (!(config_.timeout_s > 0.0)) throw Error(Errc::invalid_argument, "timeout must be > 0");
}

std::string HttpBackend::id() const { return "http:" + origin_ + path_; }

GenResponse HttpBackend::generate(const GenRequest& req) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - std::floor(config_.timeout_s)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    const bool bearer = config_.api_key_header == "Authorization";
    headers.emplace(config_.api_key_header,
                    bearer ? "Bearer " + config_.api_key : config_.api_key);
  }

  const std::string body = to_wire(req).dump();
  auto result = client.Post(path_, headers, body, "application/json");
  if (!result) {
    throw GatewayError(Errc::transport,
                       "transport failure talking to " + origin_ + ": " +
                           httplib::to_string(result.error()),
                       true);
  }
  const int status = result->status;
  if (status < 200 || status >= 300) {
    const bool retryable = status == 429 || status >= 500;
    throw GatewayError(Errc::http_status,
                       "HTTP " + std::to_string(status) + " from " + origin_ + path_ + ": " +
                           excerpt(result->body),
                       retryable, status, excerpt(result->body));
  }
  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::exception&) {
    throw GatewayError(Errc::malformed_input,
                       "reply is not JSON: " + excerpt(result->body), false, status,
                       excerpt(result->body));
  }
  return parse_wire_response(parsed, req.n, id());
}

}  // namespace leaf::llm
