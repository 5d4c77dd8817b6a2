#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace leaf::selftrain {

struct ScoredResponse {
  std::string prompt_id;
  std::string response;
  double leaf_score = 0.0;
  std::size_t sample_index = 0;
};

struct SftRecord {
  std::string prompt;
  std::string response;
};

struct PreferencePair {
  std::string prompt_id;
  std::string prompt;
  ScoredResponse chosen;
  ScoredResponse rejected;
};

struct PairPolicy {
  double min_gap = 0.0;
};

struct PairResult {
  std::vector<PreferencePair> pairs;
  // Prompts with fewer than two samples.
  std::size_t skipped_too_few = 0;
  // Prompts whose best and worst sample scored the same.
  std::size_t skipped_tied = 0;
  // Prompts whose gap fell below min_gap.
  std::size_t skipped_gap = 0;
};

using PromptMap = std::map<std::string, std::string>;

// Responses with a LEAF score of exactly 1, ordered by (prompt_id,
// sample_index). Unknown prompt ids and repeated (prompt_id, sample_index)
// are errors.
std::vector<SftRecord> build_sft(std::span<const ScoredResponse> scored, const PromptMap& prompts);

// One pair per prompt: the highest score against the lowest, the lower sample
// index winning ties in both roles. Ordered by prompt_id.
PairResult build_pairs(std::span<const ScoredResponse> scored, const PromptMap& prompts,
                       const PairPolicy& policy = {});

nlohmann::json to_json(const SftRecord& r);
nlohmann::json to_json(const PreferencePair& p);

// {"prompt_id", "sample_index", "response", "leaf_score"} per line.
std::vector<ScoredResponse> load_scored_jsonl(const std::filesystem::path& path);

}  // namespace leaf::selftrain
