#include "leaf/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "leaf/error.hpp"

namespace leaf::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw Error(Errc::malformed_input, "config line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, std::size_t line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(line, key + " is not a number: \"" + v + "\"");
    return d;
  } catch (const std::logic_error&) {
    bad(line, key + " is not a number: \"" + v + "\"");
  }
}

long to_long(const std::string& v, std::size_t line, const std::string& key) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    bad(line, key + " is not an integer: \"" + v + "\"");
  }
  return out;
}

using Setter = std::function<void(Settings&, const std::string&, std::size_t, const std::string&)>;

template <class T>
Setter set_int(T Settings::*field) {
  return [field](Settings& s, const std::string& v, std::size_t line, const std::string& key) {
    const long x = to_long(v, line, key);
    if constexpr (std::is_unsigned_v<T>) {
      if (x < 0) bad(line, key + " must be >= 0");
    }
    s.*field = static_cast<T>(x);
  };
}

Setter set_double(double Settings::*field) {
  return [field](Settings& s, const std::string& v, std::size_t line, const std::string& key) {
    s.*field = to_double(v, line, key);
  };
}

Setter set_string(std::string Settings::*field) {
  return [field](Settings& s, const std::string& v, std::size_t, const std::string&) { s.*field = v; };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"backend", set_string(&Settings::backend)},
      {"base_url", set_string(&Settings::base_url)},
      {"api_key", set_string(&Settings::api_key)},
      {"api_key_header", set_string(&Settings::api_key_header)},
      {"timeout_s", set_double(&Settings::timeout_s)},
      {"max_parallel", set_int(&Settings::max_parallel)},
      {"max_attempts", set_int(&Settings::max_attempts)},
      {"backoff_ms", set_int(&Settings::backoff_ms)},
      {"model", set_string(&Settings::model)},
      {"rater_model", set_string(&Settings::rater_model)},
      {"generator_fixture", set_string(&Settings::generator_fixture)},
      {"rater_fixture", set_string(&Settings::rater_fixture)},
      {"query_gen_template", set_string(&Settings::query_gen_template)},
      {"fact_check_template", set_string(&Settings::fact_check_template)},
      {"fc_rag_template", set_string(&Settings::fc_rag_template)},
      {"max_tokens", set_int(&Settings::max_tokens)},
      {"factcheck_temperature", set_double(&Settings::factcheck_temperature)},
      {"factcheck_samples", set_int(&Settings::factcheck_samples)},
      {"ranking_temperature", set_double(&Settings::ranking_temperature)},
      {"ranking_samples", set_int(&Settings::ranking_samples)},
      {"rater_temperature", set_double(&Settings::rater_temperature)},
      {"first_temperature", set_double(&Settings::first_temperature)},
      {"regen_temperature", set_double(&Settings::regen_temperature)},
      {"top_k", set_int(&Settings::top_k)},
      {"max_queries", set_int(&Settings::max_queries)},
      {"max_rounds", set_int(&Settings::max_rounds)},
      {"workers", set_int(&Settings::workers)},
  };
  return table;
}

}  // namespace

Settings parse(std::string_view text, const std::filesystem::path& base_dir) {
  Settings s;
  s.base_dir = base_dir;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) bad(line_no, "unknown key \"" + key + "\"");
    it->second(s, value, line_no, key);
  }
  validate(s);
  return s;
}

Settings load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.parent_path());
}

void apply_env(Settings& s, const std::function<std::optional<std::string>(const char*)>& getenv) {
  if (auto v = getenv("LEAF_BASE_URL")) s.base_url = *v;
  if (auto v = getenv("LEAF_API_KEY")) s.api_key = *v;
  if (auto v = getenv("LEAF_MODEL")) s.model = *v;
}

void apply_env(Settings& s) {
  apply_env(s, [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  });
}

void validate(const Settings& s) {
  const auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, what); };
  if (s.backend != "mock" && s.backend != "http") fail("backend must be mock or http");
  if (!(s.timeout_s > 0.0)) fail("timeout_s must be > 0");
  if (s.max_parallel < 1) fail("max_parallel must be >= 1");
  if (s.max_attempts < 1) fail("max_attempts must be >= 1");
  if (s.backoff_ms < 0) fail("backoff_ms must be >= 0");
  if (s.max_tokens < 1) fail("max_tokens must be >= 1");
  for (const double t : {s.factcheck_temperature, s.ranking_temperature, s.rater_temperature,
                         s.first_temperature, s.regen_temperature}) {
    if (!(t >= 0.0)) fail("temperatures must be >= 0");
  }
  if (s.factcheck_samples < 1 || s.ranking_samples < 1) fail("sample counts must be >= 1");
  if (s.top_k < 1) fail("top_k must be >= 1");
  if (s.max_queries < 1) fail("max_queries must be >= 1");
  if (s.max_rounds < 1) fail("max_rounds must be >= 1");
  if (s.workers < 1) fail("workers must be >= 1");
}

std::filesystem::path resolve(const Settings& s, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || s.base_dir.empty()) return p;
  return s.base_dir / p;
}

llm::BackendPtr make_backend(const Settings& s, Role role) {
  llm::BackendPtr backend;
  if (s.backend == "mock") {
    const std::string& fixture = role == Role::generator ? s.generator_fixture : s.rater_fixture;
    if (fixture.empty()) {
      throw Error(Errc::invalid_argument,
                  std::string("mock backend needs ") +
                      (role == Role::generator ? "generator_fixture" : "rater_fixture"));
    }
    backend = llm::MockBackend::from_jsonl(resolve(s, fixture));
  } else {
    backend = std::make_shared<llm::HttpBackend>(
        llm::HttpConfig{s.base_url, s.api_key, s.api_key_header, s.timeout_s});
    backend = llm::with_retry(std::move(backend), {s.max_attempts, s.backoff_ms});
  }
  return llm::with_limit(std::move(backend), s.max_parallel);
}

}  // namespace leaf::config
