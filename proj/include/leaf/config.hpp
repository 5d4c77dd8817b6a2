#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "leaf/llm_gateway.hpp"

namespace leaf::config {

// Experiment settings read from a key = value file. '#' starts a comment;
// blank lines are ignored; unknown keys are errors. See README for the schema.
struct Settings {
  // "mock" or "http"
  std::string backend = "mock";
  std::string base_url = "http://localhost:8000";
  std::string api_key;
  std::string api_key_header = "Authorization";
  double timeout_s = 120.0;
  int max_parallel = 4;
  int max_attempts = 3;
  int backoff_ms = 500;

  std::string model = "generator";
  std::string rater_model = "rater";
  // Mock fixtures for the answering model and the rater.
  std::string generator_fixture;
  std::string rater_fixture;

  // Optional replacement prompt templates.
  std::string query_gen_template;
  std::string fact_check_template;
  std::string fc_rag_template;

  int max_tokens = 1024;
  double factcheck_temperature = 1.2;
  int factcheck_samples = 10;
  double ranking_temperature = 0.8;
  int ranking_samples = 5;
  double rater_temperature = 0.0;
  double first_temperature = 0.0;
  double regen_temperature = 0.0;
  std::size_t top_k = 3;
  int max_queries = 3;
  int max_rounds = 3;
  std::size_t workers = 4;

  // Relative fixture and template paths resolve against this directory.
  std::filesystem::path base_dir;
};

Settings parse(std::string_view text, const std::filesystem::path& base_dir = {});
Settings load(const std::filesystem::path& path);

// LEAF_BASE_URL, LEAF_API_KEY and LEAF_MODEL override the file. `getenv` is
// injectable for tests.
void apply_env(Settings& s, const std::function<std::optional<std::string>(const char*)>& getenv);
void apply_env(Settings& s);

// Range checks across all keys; throws Errc::invalid_argument.
void validate(const Settings& s);

enum class Role { generator, rater };

// Backend for a role, wrapped with retry (http only) and the parallelism cap.
llm::BackendPtr make_backend(const Settings& s, Role role);

std::filesystem::path resolve(const Settings& s, const std::string& path);

}  // namespace leaf::config
