#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leaf/corpus_index.hpp"
#include "leaf/error.hpp"

namespace leaf::prompt {

enum class TemplateKind { query_gen, fact_check, fc_rag };

enum class Placeholder { knowledge, context, statement, question, options };

// "KNOWLEDGE", "CONTEXT", ... as written inside {_NAME_}.
std::string_view placeholder_name(Placeholder p);

struct PromptTemplate {
  TemplateKind kind = TemplateKind::fc_rag;
  std::string body;
};

// QueryGen and FactCheck need KNOWLEDGE, CONTEXT, STATEMENT; FcRag needs
// KNOWLEDGE, QUESTION, OPTIONS.
std::span<const Placeholder> required_placeholders(TemplateKind kind);

// Built-in prompts for query generation, fact checking, and answering with
// retrieved knowledge.
const PromptTemplate& default_template(TemplateKind kind);

// Reads a UTF-8 template file. Both {_NAME_} and {_NAME_PLACEHOLDER} spellings
// are accepted; every placeholder required by `kind` must appear.
PromptTemplate load_template(TemplateKind kind, const std::filesystem::path& path);

using Bindings = std::map<Placeholder, std::string>;

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(std::string name)
      : Error(Errc::missing_placeholder, "missing binding for placeholder " + name),
        name_(std::move(name)) {}
  const std::string& placeholder() const { return name_; }

 private:
  std::string name_;
};

// Single-pass substitution; bound values are copied verbatim and never
// rescanned. {SUPPORTED_LABEL} and {NOT_SUPPORTED_LABEL} expand to the fixed
// verdict labels.
std::string render(const PromptTemplate& t, const Bindings& bindings);

inline constexpr std::string_view kNoKnowledge = "N/A";
inline constexpr std::string_view kSupportedLabel = "Supported";
inline constexpr std::string_view kNotSupportedLabel = "Not Supported";

// "(1). passage\n(2). passage ..." or "N/A" when there is nothing.
std::string format_knowledge(std::span<const corpus::RetrievedDoc> docs);

// Content of the last fenced code block, trimmed; without a fence, the last
// non-empty line. Throws Errc::empty_output when nothing usable remains.
std::string parse_query(std::string_view model_output);

enum class Support { supported, not_supported, unparseable };

std::string_view support_name(Support s);
Support parse_support_name(std::string_view name);

struct Verdict {
  Support label = Support::unparseable;
  std::string raw;
};

// Reads the last [bracketed] token. Throws Errc::unparseable (message carries
// the output's tail) when there is none or it is not a verdict label.
Verdict parse_verdict(std::string_view model_output);

// Finds the selected option letter. Explicit statements ("answer is (X)",
// "Answer: X") outrank bare mentions ("(X)", "(option X)", a line starting
// "X)"); within a rank the last occurrence wins. Throws Errc::no_answer.
char parse_mcq_answer(std::string_view model_output, std::string_view valid_options);

// Rule-based sentence segmentation. Boundaries: '.', '!' or '?' followed by
// whitespace or end of text (abbreviations, list markers, and decimals are
// protected), line breaks, and inline " * " bullets. A bold heading
// ("**Title**", "**Title:**") that opens a segment is a segment of its own; a
// bold label ("**Label**:" or "**Label:**") later in a segment starts a new one.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace leaf::prompt
