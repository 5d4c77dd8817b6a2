#include "leaf/self_training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "leaf/error.hpp"
#include "leaf/jsonl.hpp"

namespace leaf::selftrain {

using json = nlohmann::json;

namespace {

void validate(std::span<const ScoredResponse> scored, const PromptMap& prompts) {
  std::set<std::pair<std::string_view, std::size_t>> seen;
  for (const auto& r : scored) {
    if (!prompts.contains(r.prompt_id)) {
      throw Error(Errc::unknown_id, "no prompt for prompt_id \"" + r.prompt_id + "\"");
    }
    if (!std::isfinite(r.leaf_score) || r.leaf_score < 0.0 || r.leaf_score > 1.0) {
      throw Error(Errc::invalid_argument,
                  "leaf_score of \"" + r.prompt_id + "\" is outside [0, 1]");
    }
    if (!seen.emplace(r.prompt_id, r.sample_index).second) {
      throw Error(Errc::duplicate_id, "prompt \"" + r.prompt_id + "\" repeats sample_index " +
                                          std::to_string(r.sample_index));
    }
  }
}

std::vector<const ScoredResponse*> ordered(std::span<const ScoredResponse> scored) {
  std::vector<const ScoredResponse*> out;
  out.reserve(scored.size());
  for (const auto& r : scored) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const ScoredResponse* a, const ScoredResponse* b) {
    if (a->prompt_id != b->prompt_id) return a->prompt_id < b->prompt_id;
    return a->sample_index < b->sample_index;
  });
  return out;
}

}  // namespace

std::vector<SftRecord> build_sft(std::span<const ScoredResponse> scored, const PromptMap& prompts) {
  validate(scored, prompts);
  std::vector<SftRecord> out;
  for (const auto* r : ordered(scored)) {
    if (r->leaf_score == 1.0) out.push_back({prompts.at(r->prompt_id), r->response});
  }
  return out;
}

PairResult build_pairs(std::span<const ScoredResponse> scored, const PromptMap& prompts,
                       const PairPolicy& policy) {
  if (!std::isfinite(policy.min_gap) || policy.min_gap < 0.0) {
    throw Error(Errc::invalid_argument, "min_gap must be a finite value >= 0");
  }
  validate(scored, prompts);
  const auto rows = ordered(scored);

  PairResult result;
  for (std::size_t lo = 0; lo < rows.size();) {
    std::size_t hi = lo;
    while (hi < rows.size() && rows[hi]->prompt_id == rows[lo]->prompt_id) ++hi;
    if (hi - lo < 2) {
      ++result.skipped_too_few;
      lo = hi;
      continue;
    }
    // rows are in sample_index order, so strict comparisons keep the earliest.
    const ScoredResponse* best = rows[lo];
    const ScoredResponse* worst = rows[lo];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      if (rows[i]->leaf_score > best->leaf_score) best = rows[i];
      if (rows[i]->leaf_score < worst->leaf_score) worst = rows[i];
    }
    const double gap = best->leaf_score - worst->leaf_score;
    if (gap == 0.0) {
      ++result.skipped_tied;
    } else if (gap < policy.min_gap) {
      ++result.skipped_gap;
    } else {
      result.pairs.push_back({best->prompt_id, prompts.at(best->prompt_id), *best, *worst});
    }
    lo = hi;
  }
  return result;
}

json to_json(const SftRecord& r) { return {{"prompt", r.prompt}, {"response", r.response}}; }

json to_json(const PreferencePair& p) {
  return {{"prompt", p.prompt},
          {"chosen", p.chosen.response},
          {"rejected", p.rejected.response},
          {"chosen_score", p.chosen.leaf_score},
          {"rejected_score", p.rejected.leaf_score}};
}

std::vector<ScoredResponse> load_scored_jsonl(const std::filesystem::path& path) {
  std::vector<ScoredResponse> out;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    ScoredResponse r;
    r.prompt_id = jsonl::get_string(j, "prompt_id", line_no);
    r.response = jsonl::get_string(j, "response", line_no);
    r.leaf_score = jsonl::get_number(j, "leaf_score", line_no);
    const double idx = jsonl::get_number(j, "sample_index", line_no);
    if (idx < 0 || idx != std::floor(idx)) {
      throw Error(Errc::malformed_input,
                  "line " + std::to_string(line_no) + ": sample_index must be an integer >= 0");
    }
    r.sample_index = static_cast<std::size_t>(idx);
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace leaf::selftrain
