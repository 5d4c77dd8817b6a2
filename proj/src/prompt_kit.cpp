#include "leaf/prompt_kit.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "leaf/jsonl.hpp"

namespace leaf::prompt {
namespace {

constexpr std::string_view kQueryGenBody =
    "Instructions:\n"
    "1. You have been given a STATEMENT, a CONTEXT and some KNOWLEDGE points.\n"
    "2. Your goal is to try to find evidence that either supports or does not support the "
    "factual accuracy of the given STATEMENT in the given CONTEXT.\n"
    "3. To do this, you are allowed to issue ONE Google Search query that you think will allow "
    "you to find additional useful evidence.\n"
    "4. Your query should aim to obtain new information that does not appear in the KNOWLEDGE. "
    "This new information should be useful for determining the factual accuracy of the given "
    "STATEMENT.\n"
    "5. Format your final query by putting it in a markdown code block.\n"
    "\n"
    "KNOWLEDGE:\n"
    "{_KNOWLEDGE_}\n"
    "\n"
    "CONTEXT:\n"
    "{_CONTEXT_}\n"
    "\n"
    "STATEMENT:\n"
    "{_STATEMENT_}\n";

constexpr std::string_view kFactCheckBody =
    "Instructions:\n"
    "1. You have been given a STATEMENT, a CONTEXT and some KNOWLEDGE points.\n"
    "2. Determine whether the given STATEMENT is supported by the given CONTEXT, you can use "
    "the given KNOWLEDGE to support your decision if necessary. The STATEMENT is supported if "
    "it is a proper action or reasoning given the CONTEXT.\n"
    "3. Before showing your answer, think step-by-step and show your specific reasoning.\n"
    "4. If the STATEMENT is supported by the CONTEXT, be sure to show the supporting evidence.\n"
    "5. After stating your reasoning, restate the STATEMENT and then determine your final "
    "answer based on your reasoning and the STATEMENT.\n"
    "6. Your final answer should be either \"{SUPPORTED_LABEL}\" or \"{NOT_SUPPORTED_LABEL}\". "
    "Wrap your final answer in square brackets.\n"
    "\n"
    "KNOWLEDGE:\n"
    "{_KNOWLEDGE_}\n"
    "\n"
    "CONTEXT:\n"
    "{_CONTEXT_}\n"
    "\n"
    "STATEMENT:\n"
    "{_STATEMENT_}\n";

constexpr std::string_view kFcRagBody =
    "Given a multiple choice question, please select the correct answer and also provide a "
    "detailed reasoning for your choice. You can using the information provided in the "
    "knowledge section if necessary.\n"
    "\n"
    "KNOWLEDGE:\n"
    "{_KNOWLEDGE_}\n"
    "\n"
    "QUESTION:\n"
    "{_QUESTION_}\n"
    "\n"
    "OPTIONS:\n"
    "{_OPTIONS_}\n"
    "\n"
    "ANSWER:\n";

constexpr std::array kAllPlaceholders = {Placeholder::knowledge, Placeholder::context,
                                         Placeholder::statement, Placeholder::question,
                                         Placeholder::options};
constexpr std::array kStatementKinds = {Placeholder::knowledge, Placeholder::context,
                                        Placeholder::statement};
constexpr std::array kFcRagKinds = {Placeholder::knowledge, Placeholder::question,
                                    Placeholder::options};

std::string token_for(Placeholder p) {
  return "{_" + std::string(placeholder_name(p)) + "_}";
}

bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.size() >= pos + prefix.size() && s.compare(pos, prefix.size(), prefix) == 0;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string tail(std::string_view s, std::size_t n = 160) {
  return std::string(s.size() <= n ? s : s.substr(s.size() - n));
}

}  // namespace

std::string_view placeholder_name(Placeholder p) {
  switch (p) {
    case Placeholder::knowledge: return "KNOWLEDGE";
    case Placeholder::context: return "CONTEXT";
    case Placeholder::statement: return "STATEMENT";
    case Placeholder::question: return "QUESTION";
    case Placeholder::options: return "OPTIONS";
  }
  return "";
}

std::span<const Placeholder> required_placeholders(TemplateKind kind) {
  if (kind == TemplateKind::fc_rag) return kFcRagKinds;
  return kStatementKinds;
}

const PromptTemplate& default_template(TemplateKind kind) {
  static const PromptTemplate query_gen{TemplateKind::query_gen, std::string(kQueryGenBody)};
  static const PromptTemplate fact_check{TemplateKind::fact_check, std::string(kFactCheckBody)};
  static const PromptTemplate fc_rag{TemplateKind::fc_rag, std::string(kFcRagBody)};
  switch (kind) {
    case TemplateKind::query_gen: return query_gen;
    case TemplateKind::fact_check: return fact_check;
    case TemplateKind::fc_rag: return fc_rag;
  }
  return fc_rag;
}

PromptTemplate load_template(TemplateKind kind, const std::filesystem::path& path) {
  auto in = jsonl::open_input(path);
  std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  for (const Placeholder p : kAllPlaceholders) {
    const std::string long_form = "{_" + std::string(placeholder_name(p)) + "_PLACEHOLDER}";
    const std::string short_form = token_for(p);
    for (std::size_t pos = body.find(long_form); pos != std::string::npos;
         pos = body.find(long_form, pos + short_form.size())) {
      body.replace(pos, long_form.size(), short_form);
    }
  }
  for (const Placeholder p : required_placeholders(kind)) {
    if (body.find(token_for(p)) == std::string::npos) {
      throw Error(Errc::malformed_input, path.string() + ": template lacks placeholder " +
                                             std::string(placeholder_name(p)));
    }
  }
  return {kind, std::move(body)};
}

std::string render(const PromptTemplate& t, const Bindings& bindings) {
  for (const Placeholder p : required_placeholders(t.kind)) {
    if (!bindings.contains(p)) throw MissingPlaceholder(std::string(placeholder_name(p)));
  }
  static constexpr std::string_view kSupportedToken = "{SUPPORTED_LABEL}";
  static constexpr std::string_view kNotSupportedToken = "{NOT_SUPPORTED_LABEL}";

  const std::string_view body = t.body;
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] != '{') {
      out += body[i++];
      continue;
    }
    if (starts_with_at(body, i, kSupportedToken)) {
      out += kSupportedLabel;
      i += kSupportedToken.size();
      continue;
    }
    if (starts_with_at(body, i, kNotSupportedToken)) {
      out += kNotSupportedLabel;
      i += kNotSupportedToken.size();
      continue;
    }
    bool substituted = false;
    for (const Placeholder p : kAllPlaceholders) {
      const std::string token = token_for(p);
      if (!starts_with_at(body, i, token)) continue;
      const auto it = bindings.find(p);
      if (it == bindings.end()) throw MissingPlaceholder(std::string(placeholder_name(p)));
      out += it->second;
      i += token.size();
      substituted = true;
      break;
    }
    if (!substituted) out += body[i++];
  }
  return out;
}

std::string format_knowledge(std::span<const corpus::RetrievedDoc> docs) {
  if (docs.empty()) return std::string(kNoKnowledge);
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) out += '\n';
    out += "(" + std::to_string(i + 1) + "). " + docs[i].snippet;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string parse_query(std::string_view output) {
  if (trim(output).empty()) throw Error(Errc::empty_output, "model output is empty");

  // Collect fenced blocks: an opening ``` line (language tag allowed) up to
  // the next ```.
  std::optional<std::string_view> last_block;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = output.find("```", pos);
    if (open == std::string_view::npos) break;
    std::size_t content_start = output.find('\n', open + 3);
    const std::size_t close_inline = output.find("```", open + 3);
    if (close_inline == std::string_view::npos) break;
    if (content_start == std::string_view::npos || content_start > close_inline) {
      // ```query``` on a single line
      content_start = open + 3;
    } else {
      ++content_start;
    }
    last_block = output.substr(content_start, close_inline - content_start);
    pos = close_inline + 3;
  }
  if (last_block) {
    const auto q = trim(*last_block);
    if (q.empty()) throw Error(Errc::empty_output, "last code block is empty");
    return std::string(q);
  }

  std::string_view best;
  std::size_t start = 0;
  while (start <= output.size()) {
    std::size_t end = output.find('\n', start);
    if (end == std::string_view::npos) end = output.size();
    const auto line = trim(output.substr(start, end - start));
    if (!line.empty()) best = line;
    start = end + 1;
  }
  return std::string(best);
}

std::string_view support_name(Support s) {
  switch (s) {
    case Support::supported: return "Supported";
    case Support::not_supported: return "NotSupported";
    case Support::unparseable: return "Unparseable";
  }
  return "Unparseable";
}

Support parse_support_name(std::string_view name) {
  if (name == "Supported") return Support::supported;
  if (name == "NotSupported") return Support::not_supported;
  if (name == "Unparseable") return Support::unparseable;
  throw Error(Errc::malformed_input, "unknown verdict label \"" + std::string(name) + "\"");
}

Verdict parse_verdict(std::string_view output) {
  const std::size_t close = output.rfind(']');
  const std::size_t open =
      close == std::string_view::npos ? std::string_view::npos : output.rfind('[', close);
  if (open == std::string_view::npos) {
    throw Error(Errc::unparseable, "no bracketed verdict; output tail: " + tail(output));
  }
  std::string key;
  for (const char c : output.substr(open + 1, close - open - 1)) {
    if (is_space(c) || c == '_' || c == '-') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  Verdict v;
  v.raw = std::string(output);
  if (key == "supported") {
    v.label = Support::supported;
  } else if (key == "notsupported") {
    v.label = Support::not_supported;
  } else {
    throw Error(Errc::unparseable, "unrecognized verdict [" +
                                       std::string(output.substr(open + 1, close - open - 1)) +
                                       "]; output tail: " + tail(output));
  }
  return v;
}

// ---------------------------------------------------------------------------

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
  if (pos + word.size() > s.size()) return false;
  for (std::size_t k = 0; k < word.size(); ++k) {
    if (std::tolower(static_cast<unsigned char>(s[pos + k])) != word[k]) return false;
  }
  return true;
}

std::size_t skip_chars(std::string_view s, std::size_t pos, std::string_view chars) {
  while (pos < s.size() && chars.find(s[pos]) != std::string_view::npos) ++pos;
  return pos;
}

// Letter at pos (optionally inside "(" ... ")") that is a valid option and not
// the start of a longer word.
std::optional<char> option_letter_at(std::string_view s, std::size_t pos,
                                     std::string_view valid) {
  if (pos < s.size() && s[pos] == '(') ++pos;
  if (iequals_at(s, pos, "option ")) pos += 7;
  if (pos >= s.size()) return std::nullopt;
  const char c = s[pos];
  if (valid.find(c) == std::string_view::npos) return std::nullopt;
  if (pos + 1 < s.size() && is_alpha(s[pos + 1])) return std::nullopt;
  return c;
}

struct Candidate {
  std::size_t pos;
  char letter;
};

std::vector<Candidate> explicit_answers(std::string_view s, std::string_view valid) {
  std::vector<Candidate> out;
  for (std::size_t p = 0; p + 6 <= s.size(); ++p) {
    if (!iequals_at(s, p, "answer")) continue;
    if (p > 0 && is_alpha(s[p - 1])) continue;
    std::size_t q = skip_chars(s, p + 6, " *_");
    if (iequals_at(s, q, "is")) {
      q = skip_chars(s, q + 2, " *_:");
    } else if (q < s.size() && s[q] == ':') {
      q = skip_chars(s, q + 1, " *_");
    } else {
      continue;
    }
    if (auto c = option_letter_at(s, q, valid)) out.push_back({p, *c});
  }
  return out;
}

std::vector<Candidate> bare_mentions(std::string_view s, std::string_view valid) {
  std::vector<Candidate> out;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (s[p] == '(') {
      // "(X)" or "(option X)"
      std::size_t q = p + 1;
      if (iequals_at(s, q, "option ")) q += 7;
      if (q + 1 < s.size() && valid.find(s[q]) != std::string_view::npos && s[q + 1] == ')') {
        out.push_back({p, s[q]});
      }
      continue;
    }
    // "X)" opening a line, possibly after bullet or bold markers.
    const bool line_start = p == 0 || s[p - 1] == '\n';
    if (!line_start) continue;
    const std::size_t q = skip_chars(s, p, " \t*-");
    if (q + 1 < s.size() && valid.find(s[q]) != std::string_view::npos && s[q + 1] == ')') {
      out.push_back({q, s[q]});
    }
  }
  return out;
}

}  // namespace

char parse_mcq_answer(std::string_view output, std::string_view valid_options) {
  if (valid_options.empty()) throw Error(Errc::invalid_argument, "no valid options given");
  for (const char c : valid_options) {
    if (c < 'A' || c > 'Z') {
      throw Error(Errc::invalid_argument, "option letters must be uppercase A-Z");
    }
  }
  if (auto strong = explicit_answers(output, valid_options); !strong.empty()) {
    return strong.back().letter;
  }
  if (auto weak = bare_mentions(output, valid_options); !weak.empty()) {
    return weak.back().letter;
  }
  throw Error(Errc::no_answer, "no option letter found; output tail: " + tail(output));
}

// ---------------------------------------------------------------------------

namespace {

bool is_abbreviation(std::string_view word) {
  static constexpr std::array<std::string_view, 17> kAbbrev = {
      "dr", "mr", "mrs", "ms", "prof", "sr", "jr", "st", "vs",
      "e.g", "i.e", "approx", "fig", "al", "cf", "eq", "resp"};
  std::string lower;
  for (const char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::find(kAbbrev.begin(), kAbbrev.end(), lower) != kAbbrev.end();
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

class Segmenter {
 public:
  explicit Segmenter(std::string_view text) : text_(text) {}

  std::vector<std::string> run() {
    std::size_t i = 0;
    const std::size_t n = text_.size();
    while (i < n) {
      const char c = text_[i];
      if (starts_with_at(text_, i, "**")) {
        if (const auto bold = bold_span(i)) {
          if (!has_content_) {
            // "**Heading**" or "**Heading:**" stands alone; "**Label**:" leads
            // the text after it.
            if (!bold->colon_after) {
              cut(bold->end);
              i = bold->end;
              continue;
            }
            has_content_ = true;
            i = bold->end + 1;
            continue;
          }
          if (is_space(text_[i - 1]) && (bold->colon_after || bold->colon_inside)) {
            cut(i);
            continue;
          }
        }
      }
      if (c == '\n') {
        cut(i);
        start_ = i + 1;
        ++i;
        continue;
      }
      if (c == '*' && has_content_ && i > 0 && is_space(text_[i - 1]) && i + 1 < n &&
          text_[i + 1] == ' ') {
        cut(i);
        has_content_ = true;
        ++i;
        continue;
      }
      if (c == '.' || c == '!' || c == '?') {
        std::size_t j = skip_chars(text_, i, ".!?");
        j = skip_chars(text_, j, "\"')]*");
        const bool boundary = j == n || is_space(text_[j]);
        if (boundary && !protected_period(i, j)) {
          cut(j);
          i = j;
          continue;
        }
      }
      if (!is_space(c)) has_content_ = true;
      ++i;
    }
    cut(n);
    return std::move(out_);
  }

 private:
  struct BoldSpan {
    // Just past the closing "**".
    std::size_t end;
    bool colon_inside;
    bool colon_after;
  };

  // "**...**" starting at i, when it closes on the same line.
  std::optional<BoldSpan> bold_span(std::size_t i) const {
    const std::size_t close = text_.find("**", i + 2);
    if (close == std::string_view::npos || close == i + 2) return std::nullopt;
    if (text_.substr(i, close - i).find('\n') != std::string_view::npos) return std::nullopt;
    const std::size_t end = close + 2;
    return BoldSpan{end, text_[close - 1] == ':', end < text_.size() && text_[end] == ':'};
  }

  // A lone '.' after an abbreviation, or after a list marker ("1.", "A.")
  // that is all the segment holds so far.
  bool protected_period(std::size_t i, std::size_t j) const {
    if (text_[i] != '.' || j != i + 1) return false;
    std::size_t w = i;
    while (w > start_ && (std::isalnum(static_cast<unsigned char>(text_[w - 1])) || text_[w - 1] == '.')) {
      --w;
    }
    const std::string_view word = text_.substr(w, i - w);
    if (word.empty()) return false;
    if (is_abbreviation(word)) return true;
    const bool segment_is_marker = trim(text_.substr(start_, w - start_)).empty();
    if (segment_is_marker &&
        (all_digits(word) || (word.size() == 1 && std::isupper(static_cast<unsigned char>(word[0]))))) {
      return true;
    }
    return false;
  }

  void cut(std::size_t end) {
    if (end > start_) {
      const auto piece = trim(text_.substr(start_, end - start_));
      if (!piece.empty()) out_.emplace_back(piece);
    }
    start_ = end;
    has_content_ = false;
  }

  std::string_view text_;
  std::size_t start_ = 0;
  bool has_content_ = false;
  std::vector<std::string> out_;
};

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) { return Segmenter(text).run(); }

}  // namespace leaf::prompt
