#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "leaf/corpus_index.hpp"
#include "leaf/llm_gateway.hpp"
#include "leaf/prompt_kit.hpp"

namespace leaf::factcheck {

struct Config {
  int max_queries = 3;
  std::size_t top_k = 3;
  std::string model = "rater";
  double temperature = 0.0;
  int max_tokens = 1024;
  // Sentences of one response checked concurrently.
  std::size_t workers = 1;
};

struct Deps {
  const corpus::Retriever& retriever;
  llm::Backend& rater;
  const prompt::PromptTemplate& query_gen =
      prompt::default_template(prompt::TemplateKind::query_gen);
  const prompt::PromptTemplate& fact_check =
      prompt::default_template(prompt::TemplateKind::fact_check);
};

struct SentenceVerdict {
  std::string sentence;
  prompt::Support label = prompt::Support::unparseable;
  std::vector<std::string> queries;
  // Union of every query's retrievals, first-seen order, unique by doc_id.
  std::vector<corpus::RetrievedDoc> evidence;
  std::string rater_raw;
  // Backend or parse failure behind an Unparseable label; empty otherwise.
  std::string error;
};

struct FactCheckReport {
  std::string context;
  std::string response;
  std::vector<SentenceVerdict> verdicts;
  std::size_t supported = 0;
  double leaf_score = 0.0;
};

// Iterative query generation and retrieval, then one rating over all the
// evidence gathered for the sentence.
SentenceVerdict check_sentence(std::string_view sentence, std::string_view context,
                               const Deps& deps, const Config& cfg);

// Splits the response into sentences and checks each. Throws
// Errc::empty_response when there is no sentence.
FactCheckReport check_response(std::string_view response, std::string_view context,
                               const Deps& deps, const Config& cfg);

// Assembles a report from verdicts already obtained; Unparseable counts as not
// supported. Throws Errc::empty_response on an empty verdict list.
FactCheckReport make_report(std::string context, std::string response,
                            std::vector<SentenceVerdict> verdicts);

// Evidence of every sentence that did not pass, unique by doc_id.
std::vector<corpus::RetrievedDoc> failed_evidence(const FactCheckReport& report);

nlohmann::json to_json(const FactCheckReport& report);
FactCheckReport report_from_json(const nlohmann::json& j);

}  // namespace leaf::factcheck
