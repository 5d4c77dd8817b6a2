#include "leaf/fact_check.hpp"

#include <unordered_set>

#include "leaf/parallel.hpp"

namespace leaf::factcheck {

using json = nlohmann::json;
using prompt::Placeholder;
using prompt::Support;

namespace {

std::string ask(const Deps& deps, const Config& cfg, std::string prompt_text) {
  const auto req = llm::user_request(cfg.model, std::move(prompt_text), cfg.temperature, 1,
                                     cfg.max_tokens);
  return llm::generate(deps.rater, req).texts.front();
}

}  // namespace

SentenceVerdict check_sentence(std::string_view sentence, std::string_view context,
                               const Deps& deps, const Config& cfg) {
  if (sentence.empty()) throw Error(Errc::invalid_argument, "cannot check an empty sentence");
  if (cfg.max_queries < 1) throw Error(Errc::invalid_argument, "max_queries must be >= 1");
  if (cfg.top_k < 1) throw Error(Errc::invalid_argument, "top_k must be >= 1");

  SentenceVerdict v;
  v.sentence = std::string(sentence);
  std::unordered_set<std::string> seen;

  const auto bindings = [&](std::string knowledge) {
    return prompt::Bindings{{Placeholder::knowledge, std::move(knowledge)},
                            {Placeholder::context, std::string(context)},
                            {Placeholder::statement, v.sentence}};
  };

  for (int i = 0; i < cfg.max_queries; ++i) {
    std::string output;
    try {
      output = ask(deps, cfg,
                   prompt::render(deps.query_gen, bindings(prompt::format_knowledge(v.evidence))));
    } catch (const Error& e) {
      v.label = Support::unparseable;
      v.error = std::string("query generation failed: ") + e.what();
      return v;
    }
    std::string query;
    try {
      query = prompt::parse_query(output);
    } catch (const Error& e) {
      if (e.code() == Errc::empty_output) continue;
      throw;
    }
    v.queries.push_back(query);
    for (auto& doc : deps.retriever.retrieve(query, cfg.top_k)) {
      if (seen.insert(doc.doc_id).second) v.evidence.push_back(std::move(doc));
    }
  }

  try {
    v.rater_raw = ask(deps, cfg,
                      prompt::render(deps.fact_check, bindings(prompt::format_knowledge(v.evidence))));
  } catch (const Error& e) {
    v.label = Support::unparseable;
    v.error = std::string("rating failed: ") + e.what();
    return v;
  }
  try {
    v.label = prompt::parse_verdict(v.rater_raw).label;
  } catch (const Error& e) {
    if (e.code() != Errc::unparseable) throw;
    v.label = Support::unparseable;
    v.error = e.what();
  }
  return v;
}

FactCheckReport make_report(std::string context, std::string response,
                            std::vector<SentenceVerdict> verdicts) {
  if (verdicts.empty()) throw Error(Errc::empty_response, "response has no sentences to check");
  FactCheckReport r;
  r.context = std::move(context);
  r.response = std::move(response);
  r.verdicts = std::move(verdicts);
  for (const auto& v : r.verdicts) {
    if (v.label == Support::supported) ++r.supported;
  }
  r.leaf_score = static_cast<double>(r.supported) / static_cast<double>(r.verdicts.size());
  return r;
}

FactCheckReport check_response(std::string_view response, std::string_view context,
                               const Deps& deps, const Config& cfg) {
  const auto sentences = prompt::split_sentences(response);
  if (sentences.empty()) throw Error(Errc::empty_response, "response has no sentences to check");
  std::vector<SentenceVerdict> verdicts(sentences.size());
  parallel_for(sentences.size(), cfg.workers, [&](std::size_t i) {
    verdicts[i] = check_sentence(sentences[i], context, deps, cfg);
  });
  return make_report(std::string(context), std::string(response), std::move(verdicts));
}

std::vector<corpus::RetrievedDoc> failed_evidence(const FactCheckReport& report) {
  std::vector<corpus::RetrievedDoc> out;
  std::unordered_set<std::string> seen;
  for (const auto& v : report.verdicts) {
    if (v.label == Support::supported) continue;
    for (const auto& doc : v.evidence) {
      if (seen.insert(doc.doc_id).second) out.push_back(doc);
    }
  }
  return out;
}

json to_json(const FactCheckReport& report) {
  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    json evidence = json::array();
    for (const auto& d : v.evidence) {
      evidence.push_back({{"doc_id", d.doc_id}, {"score", d.score}, {"snippet", d.snippet}});
    }
    json jv = {{"sentence", v.sentence},
               {"label", prompt::support_name(v.label)},
               {"queries", v.queries},
               {"evidence", std::move(evidence)},
               {"rater_raw", v.rater_raw}};
    if (!v.error.empty()) jv["error"] = v.error;
    verdicts.push_back(std::move(jv));
  }
  return {{"context", report.context},
          {"response", report.response},
          {"verdicts", std::move(verdicts)},
          {"supported", report.supported},
          {"total", report.verdicts.size()},
          {"leaf_score", report.leaf_score}};
}

FactCheckReport report_from_json(const json& j) {
  try {
    FactCheckReport r;
    r.context = j.at("context").get<std::string>();
    r.response = j.at("response").get<std::string>();
    for (const auto& jv : j.at("verdicts")) {
      SentenceVerdict v;
      v.sentence = jv.at("sentence").get<std::string>();
      v.label = prompt::parse_support_name(jv.at("label").get<std::string>());
      v.queries = jv.at("queries").get<std::vector<std::string>>();
      for (const auto& d : jv.at("evidence")) {
        v.evidence.push_back({d.at("doc_id").get<std::string>(), d.at("score").get<double>(),
                              d.at("snippet").get<std::string>()});
      }
      v.rater_raw = jv.at("rater_raw").get<std::string>();
      v.error = jv.value("error", std::string());
      r.verdicts.push_back(std::move(v));
    }
    for (const auto& v : r.verdicts) {
      if (v.label == Support::supported) ++r.supported;
    }
    r.leaf_score = r.verdicts.empty() ? 0.0
                                      : static_cast<double>(r.supported) /
                                            static_cast<double>(r.verdicts.size());
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_input, std::string("bad fact-check report: ") + e.what());
  }
}

}  // namespace leaf::factcheck
