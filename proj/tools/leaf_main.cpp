// leaf: command-line driver for indexing, fact-checking, FC-RAG answering,
// self-training data construction, SimPO numerics, and evaluation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "leaf/config.hpp"
#include "leaf/corpus_index.hpp"
#include "leaf/eval.hpp"
#include "leaf/fact_check.hpp"
#include "leaf/fc_rag.hpp"
#include "leaf/jsonl.hpp"
#include "leaf/mcq.hpp"
#include "leaf/parallel.hpp"
#include "leaf/prompt_kit.hpp"
#include "leaf/self_training.hpp"
#include "leaf/simpo.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct ResponseRow {
  std::string id;
  std::size_t sample_index = 0;
  std::string response;
};

std::optional<char> answer_or_none(std::string_view response, std::string_view letters) {
  try {
    return leaf::prompt::parse_mcq_answer(response, letters);
  } catch (const leaf::Error& e) {
    if (e.code() != leaf::Errc::no_answer) throw;
    return std::nullopt;
  }
}

json letter(const std::optional<char>& c) {
  return c ? json(std::string(1, *c)) : json(nullptr);
}

std::size_t sample_index_of(const json& j, std::size_t line_no) {
  const double v = leaf::jsonl::get_number(j, "sample_index", line_no);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw leaf::Error(leaf::Errc::malformed_input,
                      "line " + std::to_string(line_no) + ": sample_index must be an integer >= 0");
  }
  return static_cast<std::size_t>(v);
}

std::vector<ResponseRow> load_responses(const fs::path& path) {
  std::vector<ResponseRow> rows;
  leaf::jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    rows.push_back({leaf::jsonl::get_string(j, "id", line_no), sample_index_of(j, line_no),
                    leaf::jsonl::get_string(j, "response", line_no)});
  });
  return rows;
}

struct ReportRow {
  std::string id;
  std::size_t sample_index = 0;
  leaf::factcheck::FactCheckReport report;
};

std::vector<ReportRow> load_reports(const fs::path& path) {
  std::vector<ReportRow> rows;
  leaf::jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    rows.push_back({leaf::jsonl::get_string(j, "id", line_no), sample_index_of(j, line_no),
                    leaf::factcheck::report_from_json(j)});
  });
  return rows;
}

std::vector<leaf::fcrag::Trace> load_traces(const fs::path& path) {
  std::vector<leaf::fcrag::Trace> out;
  leaf::jsonl::for_each_line(path, [&](const json& j, std::size_t) {
    out.push_back(leaf::fcrag::trace_from_json(j));
  });
  return out;
}

std::map<std::string, const leaf::eval::McqItem*> by_id(const std::vector<leaf::eval::McqItem>& items) {
  std::map<std::string, const leaf::eval::McqItem*> m;
  for (const auto& item : items) m.emplace(item.id, &item);
  return m;
}

const leaf::eval::McqItem& find_item(const std::map<std::string, const leaf::eval::McqItem*>& items,
                                     const std::string& id) {
  const auto it = items.find(id);
  if (it == items.end()) throw leaf::Error(leaf::Errc::unknown_id, "id \"" + id + "\" not in dataset");
  return *it->second;
}

leaf::config::Settings settings_from(const std::string& path) {
  leaf::config::Settings s = path.empty() ? leaf::config::Settings{} : leaf::config::load(path);
  leaf::config::apply_env(s);
  leaf::config::validate(s);
  return s;
}

struct Templates {
  leaf::prompt::PromptTemplate query_gen;
  leaf::prompt::PromptTemplate fact_check;
  leaf::prompt::PromptTemplate fc_rag;
};

Templates templates_from(const leaf::config::Settings& s) {
  using leaf::prompt::TemplateKind;
  const auto pick = [&](TemplateKind kind, const std::string& path) {
    return path.empty() ? leaf::prompt::default_template(kind)
                        : leaf::prompt::load_template(kind, leaf::config::resolve(s, path));
  };
  return {pick(TemplateKind::query_gen, s.query_gen_template),
          pick(TemplateKind::fact_check, s.fact_check_template),
          pick(TemplateKind::fc_rag, s.fc_rag_template)};
}

leaf::factcheck::Config check_config(const leaf::config::Settings& s) {
  leaf::factcheck::Config c;
  c.max_queries = s.max_queries;
  c.top_k = s.top_k;
  c.model = s.rater_model;
  c.temperature = s.rater_temperature;
  c.max_tokens = s.max_tokens;
  c.workers = 1;
  return c;
}

std::ofstream output(const std::string& path) { return leaf::jsonl::open_output(path); }

std::string read_file(const fs::path& path) {
  std::ifstream in = leaf::jsonl::open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// --- subcommands ---------------------------------------------------------

void cmd_index(const std::string& corpus, const std::string& out) {
  const auto docs = leaf::corpus::load_corpus_jsonl(corpus);
  const auto index = leaf::corpus::Bm25Index::build(docs);
  index.save_file(out);
  const auto& st = index.stats();
  std::cout << json{{"doc_count", st.doc_count},
                    {"avg_doc_len", st.avg_doc_len},
                    {"vocab_size", st.vocab_size}}
                   .dump()
            << '\n';
}

struct GenerateArgs {
  std::string config, dataset, out;
  // "factcheck" or "ranking" take sample count and temperature from config.
  std::string stage;
  std::optional<int> samples;
  std::optional<double> temperature;
};

void cmd_generate(const GenerateArgs& a) {
  const auto s = settings_from(a.config);
  const auto templates = templates_from(s);
  const auto items = leaf::eval::load_dataset(a.dataset);
  const auto backend = leaf::config::make_backend(s, leaf::config::Role::generator);
  int samples = 1;
  double temperature = s.first_temperature;
  if (a.stage == "factcheck") {
    samples = s.factcheck_samples;
    temperature = s.factcheck_temperature;
  } else if (a.stage == "ranking") {
    samples = s.ranking_samples;
    temperature = s.ranking_temperature;
  } else if (!a.stage.empty()) {
    throw leaf::Error(leaf::Errc::invalid_argument, "unknown stage \"" + a.stage + "\"");
  }
  samples = a.samples.value_or(samples);
  temperature = a.temperature.value_or(temperature);

  std::vector<std::vector<std::string>> texts(items.size());
  leaf::parallel_for(items.size(), s.workers, [&](std::size_t i) {
    const auto prompt = leaf::fcrag::answer_prompt(items[i], leaf::prompt::kNoKnowledge, templates.fc_rag);
    const auto req = leaf::llm::user_request(s.model, prompt, temperature, samples, s.max_tokens);
    texts[i] = leaf::llm::generate(*backend, req).texts;
  });

  auto out = output(a.out);
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t k = 0; k < texts[i].size(); ++k) {
      leaf::jsonl::write_line(out, {{"id", items[i].id},
                                    {"sample_index", k},
                                    {"response", texts[i][k]},
                                    {"answer", letter(answer_or_none(texts[i][k], items[i].letters()))}});
    }
  }
}

struct FactCheckArgs {
  std::string config, index, dataset, responses, out;
};

void cmd_fact_check(const FactCheckArgs& a) {
  const auto s = settings_from(a.config);
  const auto templates = templates_from(s);
  const auto items = leaf::eval::load_dataset(a.dataset);
  const auto lookup = by_id(items);
  const auto rows = load_responses(a.responses);
  const auto index = leaf::corpus::Bm25Index::load_file(a.index);
  const auto rater = leaf::config::make_backend(s, leaf::config::Role::rater);
  const leaf::factcheck::Deps deps{index, *rater, templates.query_gen, templates.fact_check};
  const auto cfg = check_config(s);

  for (const auto& row : rows) find_item(lookup, row.id);
  std::vector<json> lines(rows.size());
  leaf::parallel_for(rows.size(), s.workers, [&](std::size_t i) {
    const auto& item = find_item(lookup, rows[i].id);
    const auto context = leaf::eval::question_context(item);
    leaf::factcheck::FactCheckReport report;
    try {
      report = leaf::factcheck::check_response(rows[i].response, context, deps, cfg);
    } catch (const leaf::Error& e) {
      if (e.code() != leaf::Errc::empty_response) throw;
      report.context = context;
      report.response = rows[i].response;
    }
    json j = leaf::factcheck::to_json(report);
    j["id"] = rows[i].id;
    j["sample_index"] = rows[i].sample_index;
    j["answer"] = letter(answer_or_none(rows[i].response, item.letters()));
    lines[i] = std::move(j);
  });

  auto out = output(a.out);
  for (const auto& j : lines) leaf::jsonl::write_line(out, j);
}

struct FcRagArgs {
  std::string config, index, dataset, out, baseline;
  std::optional<int> max_rounds;
};

void cmd_fc_rag(const FcRagArgs& a) {
  if (!a.baseline.empty() && a.baseline != "medrag") {
    throw leaf::Error(leaf::Errc::invalid_argument, "unknown baseline \"" + a.baseline + "\"");
  }
  const auto s = settings_from(a.config);
  const auto templates = templates_from(s);
  const auto items = leaf::eval::load_dataset(a.dataset);
  const auto index = leaf::corpus::Bm25Index::load_file(a.index);
  const auto generator = leaf::config::make_backend(s, leaf::config::Role::generator);
  const auto rater = leaf::config::make_backend(s, leaf::config::Role::rater);
  const leaf::fcrag::Deps deps{index, *generator, *rater, templates.fc_rag, templates.query_gen,
                               templates.fact_check};
  leaf::fcrag::Config cfg;
  cfg.max_rounds = a.max_rounds.value_or(s.max_rounds);
  cfg.model = s.model;
  cfg.first_temperature = s.first_temperature;
  cfg.regen_temperature = s.regen_temperature;
  cfg.max_tokens = s.max_tokens;
  cfg.check = check_config(s);
  cfg.medrag_baseline = a.baseline == "medrag";

  std::vector<json> lines(items.size());
  leaf::parallel_for(items.size(), s.workers, [&](std::size_t i) {
    lines[i] = leaf::fcrag::to_json(leaf::fcrag::run_fc_rag(items[i], deps, cfg));
  });
  auto out = output(a.out);
  for (const auto& j : lines) leaf::jsonl::write_line(out, j);
}

std::vector<leaf::selftrain::ScoredResponse> scored_from_reports(const fs::path& path) {
  std::vector<leaf::selftrain::ScoredResponse> out;
  for (auto& row : load_reports(path)) {
    out.push_back({row.id, row.report.response, row.report.leaf_score, row.sample_index});
  }
  return out;
}

leaf::selftrain::PromptMap prompts_from(const std::vector<leaf::eval::McqItem>& items) {
  leaf::selftrain::PromptMap m;
  for (const auto& item : items) m.emplace(item.id, leaf::eval::question_context(item));
  return m;
}

void cmd_build_sft(const std::string& dataset, const std::string& reports, const std::string& out_path) {
  const auto items = leaf::eval::load_dataset(dataset);
  const auto scored = scored_from_reports(reports);
  const auto records = leaf::selftrain::build_sft(scored, prompts_from(items));
  auto out = output(out_path);
  for (const auto& r : records) leaf::jsonl::write_line(out, leaf::selftrain::to_json(r));
  std::cout << json{{"records", records.size()}, {"responses", scored.size()}}.dump() << '\n';
}

void cmd_build_pairs(const std::string& dataset, const std::string& reports,
                     const std::string& out_path, double min_gap) {
  const auto items = leaf::eval::load_dataset(dataset);
  const auto scored = scored_from_reports(reports);
  const auto result = leaf::selftrain::build_pairs(scored, prompts_from(items), {min_gap});
  auto out = output(out_path);
  for (const auto& p : result.pairs) leaf::jsonl::write_line(out, leaf::selftrain::to_json(p));
  std::cout << json{{"pairs", result.pairs.size()},
                    {"skipped_too_few", result.skipped_too_few},
                    {"skipped_tied", result.skipped_tied},
                    {"skipped_gap", result.skipped_gap}}
                   .dump()
            << '\n';
  if (result.skipped_too_few > 0) {
    std::cerr << "warning: " << result.skipped_too_few
              << " prompt(s) had fewer than two samples and were skipped\n";
  }
}

struct SimpoArgs {
  std::string pairs;
  double beta = 2.5;
  double gamma = 1.4;
  bool grad_check = false;
  double h = 1e-5;
};

void cmd_simpo_loss(const SimpoArgs& a) {
  leaf::simpo::SimpoBatch batch{leaf::simpo::load_pairs_jsonl(a.pairs), {a.beta, a.gamma}};
  batch.validate();
  json out = {{"pairs", batch.pairs.size()},
              {"beta", a.beta},
              {"gamma", a.gamma},
              {"loss", leaf::simpo::loss(batch, leaf::kernels::Exec::parallel)}};
  if (a.grad_check) {
    const auto rep = leaf::simpo::grad_check(batch, a.h);
    out["grad_check"] = {{"h", a.h},
                         {"entries", rep.entries},
                         {"max_rel_error", rep.max_rel_error},
                         {"max_abs_error", rep.max_abs_error},
                         {"worst_pair_id", batch.pairs[rep.worst_pair].id},
                         {"worst_side", rep.worst_is_winner ? "winner" : "loser"},
                         {"worst_token", rep.worst_token}};
  }
  std::cout << out.dump(2) << '\n';
}

struct EvalArgs {
  std::string dataset, responses, traces, reports, name, out;
};

void cmd_eval(const EvalArgs& a) {
  if (a.responses.empty() == a.traces.empty()) {
    throw leaf::Error(leaf::Errc::invalid_argument, "give exactly one of --responses or --traces");
  }
  const auto items = leaf::eval::load_dataset(a.dataset);
  const auto lookup = by_id(items);
  leaf::eval::Predictions predictions;
  leaf::eval::Reports reports;
  bool have_reports = false;

  if (!a.responses.empty()) {
    // Sample 0 of each id is the prediction.
    for (const auto& row : load_responses(a.responses)) {
      if (row.sample_index != 0) continue;
      predictions[row.id] = answer_or_none(row.response, find_item(lookup, row.id).letters());
    }
  } else {
    for (const auto& t : load_traces(a.traces)) {
      predictions[t.question.id] = t.final_answer;
      reports[t.question.id] = t.rounds.back().report;
    }
    have_reports = true;
  }
  if (!a.reports.empty()) {
    reports.clear();
    for (auto& row : load_reports(a.reports)) {
      if (row.sample_index == 0) reports[row.id] = std::move(row.report);
    }
    have_reports = true;
  }

  const auto metrics = leaf::eval::score_run(items, predictions, have_reports ? &reports : nullptr);
  const std::string name = a.name.empty() ? fs::path(a.dataset).stem().string() : a.name;
  const json j = {{"name", name}, {"metrics", leaf::eval::to_json(metrics)}};
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    auto out = output(a.out);
    out << j.dump(2) << '\n';
  }
}

void cmd_report(const std::vector<std::string>& metrics_files, const std::string& format,
                const std::string& out_path) {
  const auto fmt = leaf::eval::parse_format(format);
  std::vector<leaf::eval::DatasetMetrics> rows;
  for (const auto& path : metrics_files) {
    json j;
    try {
      j = json::parse(read_file(path));
      rows.push_back({j.at("name").get<std::string>(), leaf::eval::metrics_from_json(j.at("metrics"))});
    } catch (const json::exception& e) {
      throw leaf::Error(leaf::Errc::malformed_input, path + ": " + e.what());
    }
  }
  const std::string text = leaf::eval::emit_report(rows, fmt);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    auto out = output(out_path);
    out << text;
  }
}

void cmd_compare(const std::string& dataset, const std::string& baseline, const std::string& fcrag) {
  const auto items = leaf::eval::load_dataset(dataset);
  std::map<std::string, char> gold;
  for (const auto& item : items) gold.emplace(item.id, item.gold);
  const auto base = load_traces(baseline);
  const auto fc = load_traces(fcrag);
  std::cout << leaf::fcrag::to_json(leaf::fcrag::compare_runs(base, fc, gold)).dump(2) << '\n';
}

void print_error(std::string_view code, std::string_view message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaf: sentence-level fact-checking, FC-RAG, and self-training data tools"};
  app.require_subcommand(1);

  std::string corpus, index_out;
  auto* index = app.add_subcommand("index", "Build a BM25 index from a corpus JSONL");
  index->add_option("--corpus", corpus, "Corpus JSONL {id,title,text}")->required();
  index->add_option("--out", index_out, "Index file to write")->required();

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample answers for every dataset item");
  generate->add_option("--config", gen.config, "Config file");
  generate->add_option("--dataset", gen.dataset, "Dataset JSONL")->required();
  generate->add_option("--out", gen.out, "Responses JSONL to write")->required();
  generate->add_option("--samples", gen.samples, "Responses per item")->check(CLI::PositiveNumber);
  generate->add_option("--temperature", gen.temperature, "Sampling temperature");
  generate->add_option("--stage", gen.stage, "factcheck or ranking: sampling defaults from config")
      ->check(CLI::IsMember({"factcheck", "ranking"}));

  FactCheckArgs fc;
  auto* fact_check = app.add_subcommand("fact-check", "Fact-check responses sentence by sentence");
  fact_check->add_option("--config", fc.config, "Config file");
  fact_check->add_option("--index,--corpus-index", fc.index, "Index file")->required();
  fact_check->add_option("--dataset", fc.dataset, "Dataset JSONL")->required();
  fact_check->add_option("--responses", fc.responses, "Responses JSONL")->required();
  fact_check->add_option("--out", fc.out, "Reports JSONL to write")->required();

  FcRagArgs rag;
  auto* fc_rag = app.add_subcommand("fc-rag", "Answer with fact-check-then-RAG regeneration");
  fc_rag->add_option("--config", rag.config, "Config file");
  fc_rag->add_option("--index,--corpus-index", rag.index, "Index file")->required();
  fc_rag->add_option("--dataset", rag.dataset, "Dataset JSONL")->required();
  fc_rag->add_option("--out", rag.out, "Traces JSONL to write")->required();
  fc_rag->add_option("--baseline", rag.baseline, "Run a baseline instead (medrag)");
  fc_rag->add_option("--max-rounds", rag.max_rounds, "Round budget (overrides config)")->check(CLI::PositiveNumber);

  std::string st_dataset, st_reports, st_out;
  double min_gap = 0.0;
  auto* build_sft = app.add_subcommand("build-sft", "Export responses with LEAF score 1 as SFT data");
  build_sft->add_option("--dataset", st_dataset, "Dataset JSONL")->required();
  build_sft->add_option("--reports", st_reports, "Fact-check reports JSONL")->required();
  build_sft->add_option("--out", st_out, "SFT JSONL to write")->required();
  auto* build_pairs = app.add_subcommand("build-pairs", "Build best-vs-worst preference pairs");
  build_pairs->add_option("--dataset", st_dataset, "Dataset JSONL")->required();
  build_pairs->add_option("--reports", st_reports, "Fact-check reports JSONL")->required();
  build_pairs->add_option("--out", st_out, "Pairs JSONL to write")->required();
  build_pairs->add_option("--min-gap", min_gap, "Minimum score gap")->check(CLI::NonNegativeNumber);

  SimpoArgs sp;
  auto* simpo_loss = app.add_subcommand("simpo-loss", "SimPO loss over log-prob pairs");
  simpo_loss->add_option("--pairs", sp.pairs, "Log-prob pairs JSONL")->required();
  simpo_loss->add_option("--beta", sp.beta, "Reward scale");
  simpo_loss->add_option("--gamma", sp.gamma, "Target reward margin");
  simpo_loss->add_flag("--grad-check", sp.grad_check, "Compare gradients with finite differences");
  simpo_loss->add_option("--fd-step", sp.h, "Finite-difference step");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Accuracy and filtered accuracy of one run");
  eval->add_option("--dataset", ev.dataset, "Dataset JSONL")->required();
  eval->add_option("--responses", ev.responses, "Responses JSONL (sample 0 is scored)");
  eval->add_option("--traces", ev.traces, "FC-RAG traces JSONL");
  eval->add_option("--reports", ev.reports, "Fact-check reports JSONL for the filtered metric");
  eval->add_option("--name", ev.name, "Dataset name (default: dataset file stem)");
  eval->add_option("--out", ev.out, "Metrics JSON to write (default: stdout)");

  std::vector<std::string> metrics_files;
  std::string format = "text", report_out;
  auto* report = app.add_subcommand("report", "Tabulate metrics files with an Average row");
  report->add_option("--metrics", metrics_files, "Metrics JSON files from eval")->required();
  report->add_option("--format", format, "text, json or csv");
  report->add_option("--out", report_out, "File to write (default: stdout)");

  std::string cmp_dataset, cmp_base, cmp_fc;
  auto* compare = app.add_subcommand("compare", "Accuracy delta of FC-RAG over a baseline run");
  compare->add_option("--dataset", cmp_dataset, "Dataset JSONL")->required();
  compare->add_option("--baseline", cmp_base, "Baseline traces JSONL")->required();
  compare->add_option("--fcrag", cmp_fc, "FC-RAG traces JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*index) cmd_index(corpus, index_out);
    if (*generate) cmd_generate(gen);
    if (*fact_check) cmd_fact_check(fc);
    if (*fc_rag) cmd_fc_rag(rag);
    if (*build_sft) cmd_build_sft(st_dataset, st_reports, st_out);
    if (*build_pairs) cmd_build_pairs(st_dataset, st_reports, st_out, min_gap);
    if (*simpo_loss) cmd_simpo_loss(sp);
    if (*eval) cmd_eval(ev);
    if (*report) cmd_report(metrics_files, format, report_out);
    if (*compare) cmd_compare(cmp_dataset, cmp_base, cmp_fc);
  } catch (const leaf::Error& e) {
    print_error(leaf::errc_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
