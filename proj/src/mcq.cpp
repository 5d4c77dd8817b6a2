#include "leaf/mcq.hpp"

#include <cctype>
#include <unordered_set>

#include "leaf/error.hpp"
#include "leaf/jsonl.hpp"

namespace leaf::eval {

using json = nlohmann::json;

std::string McqItem::letters() const {
  std::string out;
  for (const auto& [letter, text] : options) out += letter;
  return out;
}

namespace {

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
  throw Error(Errc::malformed_input, "line " + std::to_string(line_no) + ": " + what);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

McqItem parse_item(const json& j, std::size_t line_no) {
  if (!j.is_object()) bad_line(line_no, "expected a JSON object");
  McqItem item;
  item.id = jsonl::get_string(j, "id", line_no);
  if (item.id.empty()) bad_line(line_no, "empty id");
  item.question = jsonl::get_string(j, "question", line_no);
  if (!j.contains("gold")) bad_line(line_no, "missing gold answer");
  std::string gold = jsonl::get_string(j, "gold", line_no);

  const auto opts = j.find("options");
  if (opts == j.end() || opts->is_null()) {
    // yes/no datasets
    item.options = {{'A', "yes"}, {'B', "no"}};
    const std::string g = lower(gold);
    if (g == "yes" || g == "a") {
      item.gold = 'A';
    } else if (g == "no" || g == "b") {
      item.gold = 'B';
    } else {
      bad_line(line_no, "yes/no item has gold \"" + gold + "\"");
    }
    return item;
  }

  if (!opts->is_object()) bad_line(line_no, "options must be an object of letter -> text");
  for (const auto& [key, value] : opts->items()) {
    if (key.size() != 1 || key[0] < 'A' || key[0] > 'Z') {
      bad_line(line_no, "option key \"" + key + "\" is not a single uppercase letter");
    }
    if (!value.is_string()) bad_line(line_no, "option " + key + " must be a string");
    item.options.emplace(key[0], value.get<std::string>());
  }
  if (item.options.size() < 2 || item.options.size() > 5) {
    bad_line(line_no, "expected 2 to 5 options, got " + std::to_string(item.options.size()));
  }
  char expected = 'A';
  for (const auto& [letter, text] : item.options) {
    if (letter != expected) bad_line(line_no, "option letters must run contiguously from A");
    ++expected;
  }
  if (gold.size() != 1 || !item.options.contains(gold[0])) {
    bad_line(line_no, "gold \"" + gold + "\" is not one of the options");
  }
  item.gold = gold[0];
  return item;
}

json to_json(const McqItem& item) {
  json options = json::object();
  for (const auto& [letter, text] : item.options) options[std::string(1, letter)] = text;
  return {{"id", item.id},
          {"question", item.question},
          {"options", std::move(options)},
          {"gold", std::string(1, item.gold)}};
}

std::vector<McqItem> load_dataset(const std::filesystem::path& path) {
  std::vector<McqItem> items;
  std::unordered_set<std::string> ids;
  jsonl::for_each_line(path, [&](const json& j, std::size_t line_no) {
    McqItem item = parse_item(j, line_no);
    if (!ids.insert(item.id).second) {
      throw Error(Errc::duplicate_id,
                  "line " + std::to_string(line_no) + ": duplicate id \"" + item.id + "\"");
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::string options_block(const McqItem& item) {
  std::string out;
  for (const auto& [letter, text] : item.options) {
    if (!out.empty()) out += '\n';
    out += '(';
    out += letter;
    out += ") " + text;
  }
  return out;
}

std::string question_context(const McqItem& item) {
  return item.question + "\n" + options_block(item);
}

}  // namespace leaf::eval
