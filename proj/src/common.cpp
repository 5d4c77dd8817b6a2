#include "leaf/error.hpp"
#include "leaf/jsonl.hpp"

namespace leaf {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::empty_input: return "empty_input";
    case Errc::malformed_input: return "malformed_input";
    case Errc::unknown_id: return "unknown_id";
    case Errc::id_mismatch: return "id_mismatch";
    case Errc::io: return "io";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::missing_placeholder: return "missing_placeholder";
    case Errc::empty_output: return "empty_output";
    case Errc::unparseable: return "unparseable";
    case Errc::no_answer: return "no_answer";
    case Errc::empty_response: return "empty_response";
    case Errc::transport: return "transport";
    case Errc::http_status: return "http_status";
    case Errc::fixture_miss: return "fixture_miss";
    case Errc::retries_exhausted: return "retries_exhausted";
  }
  return "unknown";
}

namespace jsonl {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open for reading: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open for writing: " + path.string());
  return out;
}

namespace {

[[noreturn]] void field_error(std::string_view key, std::size_t line_no,
                              std::string_view what) {
  throw Error(Errc::malformed_input, "line " + std::to_string(line_no) + ": field \"" +
                                         std::string(key) + "\" " + std::string(what));
}

}  // namespace

std::string get_string(const json& obj, std::string_view key, std::size_t line_no) {
  if (!obj.is_object()) field_error(key, line_no, "expected in a JSON object");
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(key, line_no, "is missing");
  if (!it->is_string()) field_error(key, line_no, "must be a string");
  return it->get<std::string>();
}

double get_number(const json& obj, std::string_view key, std::size_t line_no) {
  if (!obj.is_object()) field_error(key, line_no, "expected in a JSON object");
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(key, line_no, "is missing");
  if (!it->is_number()) field_error(key, line_no, "must be a number");
  return it->get<double>();
}

}  // namespace jsonl
}  // namespace leaf
