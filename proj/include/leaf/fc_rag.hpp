#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaf/fact_check.hpp"
#include "leaf/mcq.hpp"

namespace leaf::fcrag {

enum class StopReason { passed, budget_exhausted, no_answer };

std::string_view stop_reason_name(StopReason r);

struct Round {
  // KNOWLEDGE block the answer prompt was rendered with.
  std::string knowledge;
  std::string response;
  // An empty response yields a report without verdicts and score 0.
  factcheck::FactCheckReport report;
  std::optional<char> answer;
};

struct Trace {
  eval::McqItem question;
  std::vector<Round> rounds;
  std::optional<char> final_answer;
  StopReason stop_reason = StopReason::budget_exhausted;
};

struct Config {
  int max_rounds = 3;
  std::string model = "generator";
  double first_temperature = 0.0;
  double regen_temperature = 0.0;
  int max_tokens = 1024;
  factcheck::Config check;
  // Single round answering with passages retrieved for the raw question.
  bool medrag_baseline = false;
};

struct Deps {
  const corpus::Retriever& retriever;
  llm::Backend& generator;
  llm::Backend& rater;
  const prompt::PromptTemplate& answer_template =
      prompt::default_template(prompt::TemplateKind::fc_rag);
  const prompt::PromptTemplate& query_gen =
      prompt::default_template(prompt::TemplateKind::query_gen);
  const prompt::PromptTemplate& fact_check =
      prompt::default_template(prompt::TemplateKind::fact_check);
};

// Answer, fact-check, and regenerate with the evidence of failed sentences
// until a response passes or max_rounds is spent.
Trace run_fc_rag(const eval::McqItem& item, const Deps& deps, const Config& cfg);

// The plain answering prompt: the FC-RAG template with the given knowledge.
std::string answer_prompt(const eval::McqItem& item, std::string_view knowledge,
                          const prompt::PromptTemplate& answer_template =
                              prompt::default_template(prompt::TemplateKind::fc_rag));

struct DeltaReport {
  std::size_t total = 0;
  std::size_t baseline_correct = 0;
  std::size_t fcrag_correct = 0;
  double baseline_accuracy = 0.0;
  double fcrag_accuracy = 0.0;
  // (fcrag_correct - baseline_correct) / total
  double delta = 0.0;
};

// Baseline accuracy uses each baseline trace's first-round answer; FC-RAG
// accuracy uses the final answer. Both runs must cover the same ids.
DeltaReport compare_runs(std::span<const Trace> baseline, std::span<const Trace> fcrag,
                         const std::map<std::string, char>& gold);

nlohmann::json to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DeltaReport& delta);

}  // namespace leaf::fcrag
