#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "leaf/error.hpp"

namespace leaf::jsonl {

using json = nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

// Parses each non-blank line and calls fn(const json&, std::size_t line_no).
// Syntax errors become Errc::malformed_input naming file and line.
template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::malformed_input, path.string() + ":" + std::to_string(line_no) +
                                            ": invalid JSON: " + e.what());
    }
    fn(static_cast<const json&>(value), line_no);
  }
}

// Compact single-line dump with keys in sorted order.
inline void write_line(std::ostream& out, const json& value) {
  out << value.dump(-1, ' ', false, json::error_handler_t::strict) << '\n';
}

// Field accessors that report the offending line on failure.
std::string get_string(const json& obj, std::string_view key, std::size_t line_no);
double get_number(const json& obj, std::string_view key, std::size_t line_no);

}  // namespace leaf::jsonl
