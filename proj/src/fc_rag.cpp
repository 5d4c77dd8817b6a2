#include "leaf/fc_rag.hpp"

#include <algorithm>
#include <set>

namespace leaf::fcrag {

using json = nlohmann::json;
using prompt::Placeholder;

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::passed: return "Passed";
    case StopReason::budget_exhausted: return "BudgetExhausted";
    case StopReason::no_answer: return "NoAnswer";
  }
  return "BudgetExhausted";
}

namespace {

StopReason parse_stop_reason(std::string_view s) {
  if (s == "Passed") return StopReason::passed;
  if (s == "BudgetExhausted") return StopReason::budget_exhausted;
  if (s == "NoAnswer") return StopReason::no_answer;
  throw Error(Errc::malformed_input, "unknown stop reason \"" + std::string(s) + "\"");
}

json letter_json(const std::optional<char>& c) {
  return c ? json(std::string(1, *c)) : json(nullptr);
}

std::optional<char> letter_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  const auto s = j.get<std::string>();
  if (s.size() != 1) throw Error(Errc::malformed_input, "bad answer letter \"" + s + "\"");
  return s[0];
}

}  // namespace

std::string answer_prompt(const eval::McqItem& item, std::string_view knowledge,
                          const prompt::PromptTemplate& answer_template) {
  return prompt::render(answer_template, {{Placeholder::knowledge, std::string(knowledge)},
                                          {Placeholder::question, item.question},
                                          {Placeholder::options, eval::options_block(item)}});
}

Trace run_fc_rag(const eval::McqItem& item, const Deps& deps, const Config& cfg) {
  if (cfg.max_rounds < 1) throw Error(Errc::invalid_argument, "max_rounds must be >= 1");

  const factcheck::Deps check_deps{deps.retriever, deps.rater, deps.query_gen, deps.fact_check};
  const std::string context = eval::question_context(item);
  const std::string letters = item.letters();
  const int rounds = cfg.medrag_baseline ? 1 : cfg.max_rounds;

  Trace trace;
  trace.question = item;
  std::string knowledge(prompt::kNoKnowledge);
  if (cfg.medrag_baseline) {
    knowledge = prompt::format_knowledge(deps.retriever.retrieve(item.question, cfg.check.top_k));
  }

  for (int r = 0; r < rounds; ++r) {
    Round round;
    round.knowledge = knowledge;
    const double temperature = r == 0 ? cfg.first_temperature : cfg.regen_temperature;
    const auto req = llm::user_request(cfg.model, answer_prompt(item, knowledge, deps.answer_template),
                                       temperature, 1, cfg.max_tokens);
    round.response = llm::generate(deps.generator, req).texts.front();
    try {
      round.answer = prompt::parse_mcq_answer(round.response, letters);
    } catch (const Error& e) {
      if (e.code() != Errc::no_answer) throw;
    }
    try {
      round.report = factcheck::check_response(round.response, context, check_deps, cfg.check);
    } catch (const Error& e) {
      if (e.code() != Errc::empty_response) throw;
      round.report.context = context;
      round.report.response = round.response;
    }
    const bool passed = !round.report.verdicts.empty() && round.report.leaf_score == 1.0;
    knowledge = prompt::format_knowledge(factcheck::failed_evidence(round.report));
    trace.rounds.push_back(std::move(round));
    if (passed) break;
  }

  const Round& last = trace.rounds.back();
  trace.final_answer = last.answer;
  const bool passed = !last.report.verdicts.empty() && last.report.leaf_score == 1.0;
  const bool never_answered = std::none_of(trace.rounds.begin(), trace.rounds.end(),
                                           [](const Round& rd) { return rd.answer.has_value(); });
  if (passed) {
    trace.stop_reason = StopReason::passed;
  } else if (never_answered) {
    trace.stop_reason = StopReason::no_answer;
  } else {
    trace.stop_reason = StopReason::budget_exhausted;
  }
  return trace;
}

DeltaReport compare_runs(std::span<const Trace> baseline, std::span<const Trace> fcrag,
                         const std::map<std::string, char>& gold) {
  if (baseline.empty() || fcrag.empty()) {
    throw Error(Errc::empty_input, "compare_runs needs non-empty baseline and FC-RAG runs");
  }
  std::map<std::string, std::optional<char>> base_answers;
  for (const auto& t : baseline) {
    if (t.rounds.empty()) throw Error(Errc::malformed_input, "baseline trace has no rounds");
    if (!base_answers.emplace(t.question.id, t.rounds.front().answer).second) {
      throw Error(Errc::duplicate_id, "baseline repeats id \"" + t.question.id + "\"");
    }
  }
  std::set<std::string> fc_ids;
  for (const auto& t : fcrag) {
    if (!fc_ids.insert(t.question.id).second) {
      throw Error(Errc::duplicate_id, "FC-RAG run repeats id \"" + t.question.id + "\"");
    }
    if (!base_answers.contains(t.question.id)) {
      throw Error(Errc::id_mismatch, "id \"" + t.question.id + "\" missing from baseline");
    }
  }
  if (fc_ids.size() != base_answers.size()) {
    throw Error(Errc::id_mismatch, "baseline has ids the FC-RAG run lacks");
  }

  DeltaReport d;
  d.total = fcrag.size();
  for (const auto& t : fcrag) {
    const auto g = gold.find(t.question.id);
    if (g == gold.end()) {
      throw Error(Errc::unknown_id, "no gold answer for id \"" + t.question.id + "\"");
    }
    const auto& base = base_answers.at(t.question.id);
    if (base && *base == g->second) ++d.baseline_correct;
    if (t.final_answer && *t.final_answer == g->second) ++d.fcrag_correct;
  }
  const double n = static_cast<double>(d.total);
  d.baseline_accuracy = static_cast<double>(d.baseline_correct) / n;
  d.fcrag_accuracy = static_cast<double>(d.fcrag_correct) / n;
  d.delta = (static_cast<double>(d.fcrag_correct) - static_cast<double>(d.baseline_correct)) / n;
  return d;
}

json to_json(const Trace& trace) {
  json rounds = json::array();
  for (const auto& r : trace.rounds) {
    rounds.push_back({{"knowledge", r.knowledge},
                      {"response", r.response},
                      {"report", factcheck::to_json(r.report)},
                      {"answer", letter_json(r.answer)}});
  }
  return {{"id", trace.question.id},
          {"question", eval::to_json(trace.question)},
          {"rounds", std::move(rounds)},
          {"final_answer", letter_json(trace.final_answer)},
          {"stop_reason", stop_reason_name(trace.stop_reason)}};
}

Trace trace_from_json(const json& j) {
  try {
    Trace t;
    t.question = eval::parse_item(j.at("question"), 0);
    for (const auto& jr : j.at("rounds")) {
      Round r;
      r.knowledge = jr.at("knowledge").get<std::string>();
      r.response = jr.at("response").get<std::string>();
      r.report = factcheck::report_from_json(jr.at("report"));
      r.answer = letter_from_json(jr.at("answer"));
      t.rounds.push_back(std::move(r));
    }
    t.final_answer = letter_from_json(j.at("final_answer"));
    t.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    return t;
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("bad FC-RAG trace: ") + e.what());
  }
}

json to_json(const DeltaReport& d) {
  return {{"total", d.total},
          {"baseline_correct", d.baseline_correct},
          {"fcrag_correct", d.fcrag_correct},
          {"baseline_accuracy", d.baseline_accuracy},
          {"fcrag_accuracy", d.fcrag_accuracy},
          {"delta", d.delta}};
}

}  // namespace leaf::fcrag
