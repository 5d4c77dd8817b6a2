#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace leaf::eval {

// Multiple-choice question. Option letters run contiguously from 'A' (2 to 5
// of them) and gold is one of them.
struct McqItem {
  std::string id;
  std::string question;
  std::map<char, std::string> options;
  char gold = 'A';

  // "ABCDE" for a five-option item.
  std::string letters() const;
};

// Validates and converts one dataset line. Lines without "options" whose gold
// is "yes" or "no" become {A: yes, B: no}.
McqItem parse_item(const nlohmann::json& j, std::size_t line_no);
nlohmann::json to_json(const McqItem& item);

// JSONL {"id", "question", "options": {"A": ...}, "gold"}. Errors name the
// line; duplicate ids are rejected.
std::vector<McqItem> load_dataset(const std::filesystem::path& path);

// "(A) text\n(B) text ..."
std::string options_block(const McqItem& item);

// Question followed by its options; the CONTEXT the fact-checker sees.
std::string question_context(const McqItem& item);

}  // namespace leaf::eval
